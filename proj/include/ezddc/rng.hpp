#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ezddc {

// SplitMix64 finalizer. Used for seed derivation so that per-unit streams
// (states, buses, replications) are decorrelated without coordination.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 1));
}

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the distributions here are hand-rolled because the standard
// library's are implementation-defined and would break byte reproducibility
// across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Type-I extreme value, shifted to zero mean (location -gamma, scale 1).
    double gumbel_standardized() {
        constexpr double euler_gamma = 0.57721566490153286060651209008240;
        return -std::log(-std::log(uniform01())) - euler_gamma;
    }

    // Index into a discrete distribution given by `probs` (assumed to sum to 1).
    int categorical(const std::vector<double>& probs) {
        const double u = uniform01();
        double acc = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            acc += probs[k];
            if (u <= acc) return static_cast<int>(k);
        }
        return static_cast<int>(probs.size()) - 1;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a, used to fingerprint draw blocks and configurations.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_doubles(const std::vector<double>& v, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return v.empty() ? h : fnv1a(v.data(), v.size() * sizeof(double), h);
}

} // namespace ezddc
