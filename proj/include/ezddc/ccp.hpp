#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezddc/model.hpp"
#include "ezddc/panel.hpp"
#include "ezddc/rng.hpp"
#include "ezddc/solver.hpp"

namespace ezddc {

// Replacement probabilities per state bin. Rows are (keep, replace) pairs.
struct CcpTable {
    std::vector<double> replace_prob;
    int n_draws = 0;
    std::uint64_t seed = 0;

    int n_states() const { return static_cast<int>(replace_prob.size()); }
    double prob(int x, int d) const {
        const double p1 = replace_prob[static_cast<std::size_t>(x)];
        return d == kReplace ? p1 : 1.0 - p1;
    }
};

// Choice-specific value v(d, x, eps): exact expectation over the finite
// increment support, simulated nowhere.
inline double choice_value(const BusModel& model, const ValueFunction& v, int d, int x,
                           double eps_keep, double eps_replace,
                           EvalPath path = EvalPath::Auto) {
    const auto& prefs = model.prefs;
    const auto row = model.transition.row_for_action(d, x);
    const double eps_d = d == kReplace ? eps_replace : eps_keep;
    const double one_minus_beta = 1.0 - prefs.beta;
    if (detail::use_separable_path(prefs, path)) {
        double eu = 0.0, ev = 0.0;
        for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
            if (row[delta] <= 0.0) continue;
            eu += row[delta] * utility(prefs, consumption(model.payoff, d, x, delta, eps_d));
            ev += row[delta] *
                  v.values[static_cast<std::size_t>(next_state(model.grid, d, x, delta))];
        }
        return one_minus_beta * eu + prefs.beta * ev;
    }
    double acc = 0.0;
    for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
        if (row[delta] <= 0.0) continue;
        const double y = utility(prefs, consumption(model.payoff, d, x, delta, eps_d));
        const double cont = aggregator_inverse(
            prefs, v.values[static_cast<std::size_t>(next_state(model.grid, d, x, delta))]);
        acc += row[delta] * aggregator(prefs, one_minus_beta * y + prefs.beta * cont);
    }
    return acc;
}

namespace detail {

inline double replace_indicator(double v_keep, double v_replace, double temperature) {
    if (temperature <= 0.0) return v_replace > v_keep ? 1.0 : 0.0; // ties keep
    return 1.0 / (1.0 + std::exp(-(v_replace - v_keep) / temperature));
}

} // namespace detail

// Monte Carlo CCPs: frequency of argmax over J i.i.d. shock pairs per state,
// with per-state derived seeds. temperature > 0 replaces the indicator with a
// logistic weight (used inside the likelihood, never for reported tables).
inline CcpTable ccp(const BusModel& model, const ValueFunction& v, int n_draws,
                    std::uint64_t seed, double temperature = 0.0) {
    if (n_draws < 1) throw std::invalid_argument("ccp: n_draws must be >= 1");
    CcpTable table;
    table.n_draws = n_draws;
    table.seed = seed;
    table.replace_prob.resize(static_cast<std::size_t>(model.grid.n_bins));
    for (int x = 0; x < model.grid.n_bins; ++x) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(x)));
        double hits = 0.0;
        for (int j = 0; j < n_draws; ++j) {
            const double e0 = draw_shock(rng, model.shocks);
            const double e1 = draw_shock(rng, model.shocks);
            const double v0 = choice_value(model, v, kKeep, x, e0, e1);
            const double v1 = choice_value(model, v, kReplace, x, e0, e1);
            hits += detail::replace_indicator(v0, v1, temperature);
        }
        table.replace_prob[static_cast<std::size_t>(x)] = hits / static_cast<double>(n_draws);
    }
    return table;
}

// CCPs evaluated on a fixed draw block (common random numbers inside the
// likelihood). Equivalent to averaging choice_value comparisons draw by
// draw, but with the utility terms precomputed and the state-independent
// replacement values hoisted out of the state loop.
inline CcpTable ccp_from_draws(const BusModel& model, const ValueFunction& v,
                               const DrawBlock& draws, double temperature = 0.0,
                               EvalPath path = EvalPath::Auto) {
    const auto& prefs = model.prefs;
    const bool separable = detail::use_separable_path(prefs, path);
    const std::size_t n_draws = draws.size();
    const double one_minus_beta = 1.0 - prefs.beta;

    // continuation values per state
    std::vector<double> cont(static_cast<std::size_t>(model.grid.n_bins));
    for (int x = 0; x < model.grid.n_bins; ++x)
        cont[static_cast<std::size_t>(x)] =
            separable ? prefs.beta * v.values[static_cast<std::size_t>(x)]
                      : prefs.beta * aggregator_inverse(prefs, v.values[static_cast<std::size_t>(x)]);

    // per-draw value of replacing (independent of the current state)
    std::vector<double> a_replace(n_draws, 0.0);
    {
        const auto row = model.transition.row_for_action(kReplace, 0);
        for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
            if (row[delta] <= 0.0) continue;
            const double p = row[delta];
            const double base = payoff(model.payoff, kReplace, 0, delta);
            const double w = cont[static_cast<std::size_t>(next_state(model.grid, kReplace, 0, delta))];
            for (std::size_t s = 0; s < n_draws; ++s) {
                const double y =
                    one_minus_beta * utility(prefs, base + model.payoff.sigma * draws.eps_replace[s]);
                a_replace[s] += separable ? p * y : p * aggregator(prefs, y + w);
            }
        }
        if (separable) {
            double w_rep = 0.0;
            for (int delta = 0; delta < static_cast<int>(row.size()); ++delta)
                if (row[delta] > 0.0)
                    w_rep += row[delta] *
                             cont[static_cast<std::size_t>(next_state(model.grid, kReplace, 0, delta))];
            for (std::size_t s = 0; s < n_draws; ++s) a_replace[s] += w_rep;
        }
    }

    CcpTable table;
    table.n_draws = static_cast<int>(n_draws);
    table.seed = draws.fingerprint;
    table.replace_prob.resize(static_cast<std::size_t>(model.grid.n_bins));
    std::vector<double> a_keep(n_draws);
    for (int x = 0; x < model.grid.n_bins; ++x) {
        std::fill(a_keep.begin(), a_keep.end(), 0.0);
        const auto row = model.transition.row_for_action(kKeep, x);
        double w_keep = 0.0;
        for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
            if (row[delta] <= 0.0) continue;
            const double p = row[delta];
            const double base = payoff(model.payoff, kKeep, x, delta);
            const double w = cont[static_cast<std::size_t>(next_state(model.grid, kKeep, x, delta))];
            if (separable) {
                w_keep += p * w;
                for (std::size_t s = 0; s < n_draws; ++s)
                    a_keep[s] += p * one_minus_beta *
                                 utility(prefs, base + model.payoff.sigma * draws.eps_keep[s]);
            } else {
                for (std::size_t s = 0; s < n_draws; ++s)
                    a_keep[s] += p * aggregator(prefs,
                                                one_minus_beta *
                                                        utility(prefs,
                                                                base + model.payoff.sigma *
                                                                           draws.eps_keep[s]) +
                                                    w);
            }
        }
        double hits = 0.0;
        for (std::size_t s = 0; s < n_draws; ++s)
            hits += detail::replace_indicator(a_keep[s] + (separable ? w_keep : 0.0),
                                              a_replace[s], temperature);
        table.replace_prob[static_cast<std::size_t>(x)] = hits / static_cast<double>(n_draws);
    }
    return table;
}

inline std::string ccp_to_csv(const CcpTable& t) {
    std::string out = "x_bin,p_keep,p_replace\n";
    char buf[96];
    for (int x = 0; x < t.n_states(); ++x) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", x, t.prob(x, kKeep),
                      t.prob(x, kReplace));
        out += buf;
    }
    return out;
}

// Synthetic panel from a solved model. Each bus starts new (x = 0) and runs
// the period timeline: shock, argmax decision, increment draw, state update.
inline PanelDataset simulate_panel(const BusModel& model, const ValueFunction& v, int n_buses,
                                   int n_months, std::uint64_t seed) {
    if (n_buses < 1 || n_months < 1)
        throw std::invalid_argument("simulate_panel: need at least one bus and one month");
    PanelDataset data;
    data.rows.reserve(static_cast<std::size_t>(n_buses) * static_cast<std::size_t>(n_months));
    for (int i = 0; i < n_buses; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        int x = 0;
        for (int t = 0; t < n_months; ++t) {
            const double e0 = draw_shock(rng, model.shocks);
            const double e1 = draw_shock(rng, model.shocks);
            const double v0 = choice_value(model, v, kKeep, x, e0, e1);
            const double v1 = choice_value(model, v, kReplace, x, e0, e1);
            const int d = v1 > v0 ? kReplace : kKeep;
            const auto row = model.transition.row_for_action(d, x);
            const int delta = rng.categorical(std::vector<double>(row.begin(), row.end()));
            data.rows.push_back(PanelObs{i, t, x, d, delta});
            x = next_state(model.grid, d, x, delta);
        }
    }
    return data;
}

} // namespace ezddc
