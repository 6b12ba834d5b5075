#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezddc/preferences.hpp"
#include "ezddc/rng.hpp"

namespace ezddc {

constexpr int kKeep = 0;
constexpr int kReplace = 1;

struct StateGrid {
    int n_bins = 0;
    double bin_width_miles = 0.0;

    void validate() const {
        if (n_bins <= 0) throw std::invalid_argument("StateGrid: n_bins must be positive");
        if (!(bin_width_miles > 0.0))
            throw std::invalid_argument("StateGrid: bin_width_miles must be positive");
    }
};

struct PayoffParams {
    double theta_d = 0.0;  // revenue per mileage bin
    double theta_x = 0.0;  // maintenance cost per accumulated bin
    double rc = 0.0;       // replacement cost
    double sigma = 0.0;    // shock scale; 0 allowed for degenerate test models
    double constant = 0.0; // flat per-period payment (counterfactual subsidies)

    void validate() const {
        if (sigma < 0.0) throw std::invalid_argument("PayoffParams: sigma must be nonnegative");
        if (rc < 0.0) throw std::invalid_argument("PayoffParams: rc must be nonnegative");
    }
};

// Distribution of mileage increments per current bin. A replacement resets
// accumulated mileage within the period, so action 1 always draws from the
// bin-0 row.
class TransitionModel {
public:
    TransitionModel() = default;

    static TransitionModel from_rows(std::vector<std::vector<double>> rows) {
        if (rows.empty()) throw std::invalid_argument("TransitionModel: no rows");
        const std::size_t width = rows.front().size();
        if (width == 0) throw std::invalid_argument("TransitionModel: empty row");
        for (std::size_t x = 0; x < rows.size(); ++x) {
            if (rows[x].size() != width)
                throw std::invalid_argument("TransitionModel: ragged rows at state " +
                                            std::to_string(x));
            double total = 0.0;
            for (double p : rows[x]) {
                if (p < 0.0)
                    throw std::invalid_argument("TransitionModel: negative probability at state " +
                                                std::to_string(x));
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw std::invalid_argument("TransitionModel: row for state " + std::to_string(x) +
                                            " sums to " + std::to_string(total));
        }
        TransitionModel t;
        t.rows_ = std::move(rows);
        return t;
    }

    int n_states() const { return static_cast<int>(rows_.size()); }
    int max_increment() const { return static_cast<int>(rows_.front().size()) - 1; }

    std::span<const double> row(int x) const {
        if (x < 0 || x >= n_states())
            throw std::invalid_argument("TransitionModel: no row for state " + std::to_string(x));
        return rows_[static_cast<std::size_t>(x)];
    }

    std::span<const double> row_for_action(int d, int x) const {
        return row(d == kReplace ? 0 : x);
    }

    const std::vector<std::vector<double>>& rows() const { return rows_; }

private:
    std::vector<std::vector<double>> rows_;
};

enum class ShockDist { StandardNormal, GumbelStandardized };

struct ShockSpec {
    ShockDist distribution = ShockDist::StandardNormal;
};

struct BusModel {
    StateGrid grid;
    PayoffParams payoff;
    TransitionModel transition;
    ShockSpec shocks;
    PreferenceSpec prefs;

    void validate() const {
        grid.validate();
        payoff.validate();
        prefs.validate();
        if (transition.n_states() != grid.n_bins)
            throw std::invalid_argument("BusModel: transition defines " +
                                        std::to_string(transition.n_states()) +
                                        " rows but the grid has " + std::to_string(grid.n_bins) +
                                        " bins");
    }
};

// pi(d, x, Delta): revenue theta_d * Delta, minus the replacement cost when
// replacing or the mileage-proportional maintenance cost when keeping.
inline double payoff(const PayoffParams& p, int d, int x, int delta) {
    const double revenue = p.theta_d * static_cast<double>(delta) + p.constant;
    if (d == kReplace) return revenue - p.rc;
    return revenue - p.theta_x * static_cast<double>(x);
}

inline double consumption(const PayoffParams& p, int d, int x, int delta, double eps_d) {
    return payoff(p, d, x, delta) + p.sigma * eps_d;
}

// x' = (1-d) x + Delta, truncated at the top bin.
inline int next_state(const StateGrid& g, int d, int x, int delta) {
    const int raw = (d == kReplace) ? delta : x + delta;
    return std::min(raw, g.n_bins - 1);
}

// 3-state model used throughout the tests: mileage and increments live on
// {0,1,2} with RC=3, theta_d=3, theta_x=0.5, sigma=2, beta=0.9.
inline BusModel make_toy_model() {
    BusModel m;
    m.grid = StateGrid{3, 1.0};
    m.payoff = PayoffParams{3.0, 0.5, 3.0, 2.0, 0.0};
    m.transition = TransitionModel::from_rows({{0.0, 0.5, 0.5},
                                               {0.2, 0.6, 0.2},
                                               {0.6, 0.4, 0.0}});
    m.shocks = ShockSpec{ShockDist::StandardNormal};
    m.prefs = PreferenceSpec::cara(0.5, 0.5, 0.9);
    m.validate();
    return m;
}

inline std::uint64_t fingerprint(const BusModel& m) {
    std::uint64_t h = fingerprint(m.prefs);
    const double head[7] = {static_cast<double>(m.grid.n_bins), m.grid.bin_width_miles,
                            m.payoff.theta_d, m.payoff.theta_x, m.payoff.rc,
                            m.payoff.sigma, m.payoff.constant};
    h = fnv1a(head, sizeof(head), h);
    for (const auto& r : m.transition.rows()) h = fnv1a_doubles(r, h);
    const int dist = static_cast<int>(m.shocks.distribution);
    return fnv1a(&dist, sizeof(dist), h);
}

// Draw block shared by every iteration of a solve (common random numbers).
struct DrawBlock {
    std::vector<double> eps_keep;
    std::vector<double> eps_replace;
    std::uint64_t fingerprint = 0;

    std::size_t size() const { return eps_keep.size(); }
};

inline double draw_shock(Rng& rng, const ShockSpec& spec) {
    return spec.distribution == ShockDist::StandardNormal ? rng.normal()
                                                          : rng.gumbel_standardized();
}

inline DrawBlock draw_shock_block(const ShockSpec& spec, std::size_t n, std::uint64_t seed) {
    DrawBlock b;
    b.eps_keep.resize(n);
    b.eps_replace.resize(n);
    Rng rng(seed);
    for (std::size_t s = 0; s < n; ++s) {
        b.eps_keep[s] = draw_shock(rng, spec);
        b.eps_replace[s] = draw_shock(rng, spec);
    }
    b.fingerprint = fnv1a_doubles(b.eps_replace, fnv1a_doubles(b.eps_keep));
    return b;
}

} // namespace ezddc
