#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ezddc {

enum class Family { CrraEz, CaraEz };

enum class Timing { Early, Late, Indifferent };

// Two Epstein-Zin parametrizations. `alpha` governs risk attitudes, `rho`
// intertemporal substitution; alpha == rho collapses to the separable model
// where the time aggregator is the identity.
//
// CRRA:  u(c) = c^(1-rho),                 phi(z) = z^((1-alpha)/(1-rho))
// CARA:  u(c) = (1 - exp(-rho c)) / rho,   phi(z) = (1 - (1-rho z)^(alpha/rho)) / alpha
//
// Zero parameters are treated as analytic limits (linear u, exponential or
// logarithmic phi), never by plugging the singular formulas.
struct PreferenceSpec {
    Family family = Family::CaraEz;
    double alpha = 0.0;
    double rho = 0.0;
    double beta = 0.9;

    static PreferenceSpec crra(double alpha, double rho, double beta) {
        PreferenceSpec s{Family::CrraEz, alpha, rho, beta};
        s.validate();
        return s;
    }
    static PreferenceSpec cara(double alpha, double rho, double beta) {
        PreferenceSpec s{Family::CaraEz, alpha, rho, beta};
        s.validate();
        return s;
    }

    bool is_separable() const { return std::fabs(alpha - rho) < 1e-12; }

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("PreferenceSpec: beta must lie in (0,1)");
        if (family == Family::CrraEz) {
            if (!(alpha <= 1.0))
                throw std::invalid_argument("PreferenceSpec: CRRA requires alpha <= 1");
            if (!(rho < 1.0))
                throw std::invalid_argument("PreferenceSpec: CRRA requires rho < 1");
        } else {
            if (!(alpha >= 0.0))
                throw std::invalid_argument("PreferenceSpec: CARA requires alpha >= 0");
            if (!(rho >= 0.0))
                throw std::invalid_argument("PreferenceSpec: CARA requires rho >= 0");
        }
    }
};

namespace detail {

// exp with the exponent saturated at +-700 so that replacement-cost sized
// payoffs cannot overflow to inf inside the CARA formulas.
inline double exp_clamped(double x) {
    if (x > 700.0) x = 700.0;
    if (x < -700.0) return 0.0;
    return std::exp(x);
}

// b^k for b >= 0 computed in log space with the same saturation.
inline double pow_clamped(double b, double k) {
    if (b == 0.0) return k == 0.0 ? 1.0 : 0.0;
    if (b == 1.0 || k == 0.0) return 1.0;
    if (k == 1.0) return b;
    return exp_clamped(k * std::log(b));
}

[[noreturn]] inline void domain_fail(const char* fn, double v) {
    throw std::domain_error(std::string(fn) + ": argument " + std::to_string(v) +
                            " outside the admissible domain");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Period utility u and its inverse
// ---------------------------------------------------------------------------

inline double utility(const PreferenceSpec& s, double c) {
    if (s.family == Family::CrraEz) {
        if (c < 0.0) detail::domain_fail("utility (CRRA)", c);
        if (s.rho == 0.0) return c;
        return detail::pow_clamped(c, 1.0 - s.rho);
    }
    if (s.rho == 0.0) return c;
    return (1.0 - detail::exp_clamped(-s.rho * c)) / s.rho;
}

inline double utility_inverse(const PreferenceSpec& s, double y) {
    if (s.family == Family::CrraEz) {
        if (y < 0.0) detail::domain_fail("utility_inverse (CRRA)", y);
        if (s.rho == 0.0) return y;
        return detail::pow_clamped(y, 1.0 / (1.0 - s.rho));
    }
    if (s.rho == 0.0) return y;
    const double w = 1.0 - s.rho * y;
    if (w <= 0.0) detail::domain_fail("utility_inverse (CARA)", y);
    return -std::log(w) / s.rho;
}

// ---------------------------------------------------------------------------
// Time aggregator phi, inverse and derivative
// ---------------------------------------------------------------------------

inline double aggregator(const PreferenceSpec& s, double z) {
    if (s.is_separable()) return z;
    if (s.family == Family::CrraEz) {
        if (z < 0.0) detail::domain_fail("aggregator (CRRA)", z);
        if (s.alpha == 1.0) {
            if (z == 0.0) detail::domain_fail("aggregator (CRRA, alpha=1)", z);
            return std::log(z) / (1.0 - s.rho);
        }
        return detail::pow_clamped(z, (1.0 - s.alpha) / (1.0 - s.rho));
    }
    // CARA
    if (s.rho == 0.0) // phi = u_alpha
        return (1.0 - detail::exp_clamped(-s.alpha * z)) / s.alpha;
    const double w = 1.0 - s.rho * z;
    if (s.alpha == 0.0) { // phi = u_rho^{-1}
        if (w <= 0.0) detail::domain_fail("aggregator (CARA, alpha=0)", z);
        return -std::log(w) / s.rho;
    }
    if (w < 0.0) detail::domain_fail("aggregator (CARA)", z);
    return (1.0 - detail::pow_clamped(w, s.alpha / s.rho)) / s.alpha;
}

inline double aggregator_inverse(const PreferenceSpec& s, double v) {
    if (s.is_separable()) return v;
    if (s.family == Family::CrraEz) {
        if (s.alpha == 1.0) return detail::exp_clamped((1.0 - s.rho) * v);
        if (v < 0.0) detail::domain_fail("aggregator_inverse (CRRA)", v);
        return detail::pow_clamped(v, (1.0 - s.rho) / (1.0 - s.alpha));
    }
    if (s.rho == 0.0) {
        const double w = 1.0 - s.alpha * v;
        if (w <= 0.0) detail::domain_fail("aggregator_inverse (CARA, rho=0)", v);
        return -std::log(w) / s.alpha;
    }
    if (s.alpha == 0.0) return (1.0 - detail::exp_clamped(-s.rho * v)) / s.rho;
    const double w = 1.0 - s.alpha * v;
    if (w < 0.0) detail::domain_fail("aggregator_inverse (CARA)", v);
    return (1.0 - detail::pow_clamped(w, s.rho / s.alpha)) / s.rho;
}

// phi'(t); t is a point of the aggregator's *domain*.
inline double aggregator_deriv(const PreferenceSpec& s, double t) {
    if (s.is_separable()) return 1.0;
    if (s.family == Family::CrraEz) {
        if (t <= 0.0) detail::domain_fail("aggregator_deriv (CRRA)", t);
        if (s.alpha == 1.0) return 1.0 / ((1.0 - s.rho) * t);
        const double k = (1.0 - s.alpha) / (1.0 - s.rho);
        return k * detail::pow_clamped(t, k - 1.0);
    }
    if (s.rho == 0.0) return detail::exp_clamped(-s.alpha * t);
    const double w = 1.0 - s.rho * t;
    if (w <= 0.0) detail::domain_fail("aggregator_deriv (CARA)", t);
    if (s.alpha == 0.0) return 1.0 / w;
    return detail::pow_clamped(w, s.alpha / s.rho - 1.0);
}

// ---------------------------------------------------------------------------
// psi_y(z) = phi((1-beta) y + beta phi^{-1}(z)) and its z-derivative
// ---------------------------------------------------------------------------

inline double psi(const PreferenceSpec& s, double y, double z) {
    const double t = aggregator_inverse(s, z);
    return aggregator(s, (1.0 - s.beta) * y + s.beta * t);
}

inline double psi_prime(const PreferenceSpec& s, double y, double z) {
    if (s.is_separable()) return s.beta;
    const double t = aggregator_inverse(s, z);
    const double arg = (1.0 - s.beta) * y + s.beta * t;
    return s.beta * aggregator_deriv(s, arg) / aggregator_deriv(s, t);
}

// ---------------------------------------------------------------------------
// Arrow-Pratt curvature of phi and the timing-of-resolution verdict
// ---------------------------------------------------------------------------

inline double arrow_pratt(const PreferenceSpec& s, double z) {
    if (s.is_separable()) return 0.0;
    if (s.family == Family::CrraEz) {
        if (z == 0.0) detail::domain_fail("arrow_pratt (CRRA)", z);
        const double k = (1.0 - s.alpha) / (1.0 - s.rho);
        return (1.0 - k) / z;
    }
    const double w = 1.0 - s.rho * z;
    if (w <= 0.0) detail::domain_fail("arrow_pratt (CARA)", z);
    return (s.alpha - s.rho) / w;
}

inline Timing timing_preference(const PreferenceSpec& s) {
    if (s.is_separable()) return Timing::Indifferent;
    return s.rho < s.alpha ? Timing::Early : Timing::Late;
}

// ---------------------------------------------------------------------------
// Two-period lottery valuation (early vs. late resolution)
// ---------------------------------------------------------------------------

enum class Resolution { Period1, Period2 };

struct LotteryOutcome {
    double payoff = 0.0;
    double prob = 0.0;
};

struct TwoPeriodLottery {
    double first_payoff = 0.0;
    std::vector<LotteryOutcome> second_payoffs;
    Resolution resolution = Resolution::Period1;

    void validate() const {
        double total = 0.0;
        for (const auto& o : second_payoffs) {
            if (o.prob < 0.0)
                throw std::invalid_argument("TwoPeriodLottery: negative probability");
            total += o.prob;
        }
        if (std::fabs(total - 1.0) > 1e-9)
            throw std::invalid_argument("TwoPeriodLottery: probabilities must sum to 1");
    }
};

// Value of the lottery under `s`. Period1 resolution averages phi over the
// second-period branches; Period2 resolution pushes the expectation inside
// phi^{-1}, so the two agree exactly when phi is linear.
inline double lottery_value(const PreferenceSpec& s, const TwoPeriodLottery& lot) {
    lot.validate();
    const double y1 = utility(s, lot.first_payoff);
    if (lot.resolution == Resolution::Period1) {
        double v = 0.0;
        for (const auto& o : lot.second_payoffs) {
            const double z = (1.0 - s.beta) * utility(s, o.payoff);
            v += o.prob * aggregator(s, (1.0 - s.beta) * y1 + s.beta * z);
        }
        return v;
    }
    double ephi = 0.0;
    for (const auto& o : lot.second_payoffs) {
        const double z = (1.0 - s.beta) * utility(s, o.payoff);
        ephi += o.prob * aggregator(s, z);
    }
    const double cert = aggregator_inverse(s, ephi);
    return aggregator(s, (1.0 - s.beta) * y1 + s.beta * cert);
}

// Fingerprint used to tie value functions back to the spec that produced them.
inline std::uint64_t fingerprint(const PreferenceSpec& s) {
    const double fields[4] = {static_cast<double>(static_cast<int>(s.family)),
                              s.alpha, s.rho, s.beta};
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* p = reinterpret_cast<const unsigned char*>(fields);
    for (std::size_t i = 0; i < sizeof(fields); ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace ezddc
