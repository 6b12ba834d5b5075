#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezddc/model.hpp"
#include "ezddc/solver.hpp"

namespace ezddc {

struct CePoint {
    double c_payment = 0.0;
    double baseline_value = 0.0;
    double counterfactual_value = 0.0;
    std::optional<double> scale_to_dollars;
};

namespace detail {

// Revenue replaced by the constant payment C for both actions.
inline BusModel with_constant_revenue(const BusModel& base, double c) {
    BusModel m = base;
    m.payoff.theta_d = 0.0;
    m.payoff.constant = c;
    return m;
}

inline double value_at_new_bus(const BusModel& m, const SolveConfig& cfg) {
    const SolveReport rep = solve(m, cfg);
    if (!rep.converged)
        throw std::runtime_error("certainty_equivalent: inner solve did not converge");
    return rep.fixed_point.values.front();
}

} // namespace detail

// Constant per-period payment C that replaces the stochastic revenue stream
// theta_d * Delta and leaves the agent's value for a new bus unchanged.
// Bisection on C is valid because the value at x = 0 is increasing in C; the
// same draw block is used for the baseline and for every candidate C.
inline CePoint certainty_equivalent(const BusModel& model, const SolveConfig& solve_config,
                                    double tol = 1e-6,
                                    std::optional<double> scale_to_dollars = std::nullopt) {
    model.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("certainty_equivalent: tol must be positive");

    CePoint out;
    out.scale_to_dollars = scale_to_dollars;
    out.baseline_value = detail::value_at_new_bus(model, solve_config);

    // bracket from the revenue range over the union increment support
    int delta_lo = std::numeric_limits<int>::max(), delta_hi = -1;
    for (int x = 0; x < model.grid.n_bins; ++x) {
        const auto row = model.transition.row(x);
        for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
            if (row[delta] <= 0.0) continue;
            delta_lo = std::min(delta_lo, delta);
            delta_hi = std::max(delta_hi, delta);
        }
    }
    double c_lo = model.payoff.theta_d * delta_lo + model.payoff.constant;
    double c_hi = model.payoff.theta_d * delta_hi + model.payoff.constant;
    if (c_lo > c_hi) std::swap(c_lo, c_hi);

    if (c_hi - c_lo <= 1e-15) { // degenerate revenue: nothing stochastic to replace
        out.c_payment = c_lo;
        out.counterfactual_value =
            detail::value_at_new_bus(detail::with_constant_revenue(model, c_lo), solve_config);
        return out;
    }

    // monotonicity probe across the bracket before bisecting
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 5; ++i) {
        const double c = c_lo + (c_hi - c_lo) * i / 4.0;
        const double v =
            detail::value_at_new_bus(detail::with_constant_revenue(model, c), solve_config);
        if (v <= prev - 1e-12)
            throw std::runtime_error(
                "certainty_equivalent: value at x=0 is not increasing in the payment");
        prev = v;
    }

    auto value_at = [&](double c) {
        return detail::value_at_new_bus(detail::with_constant_revenue(model, c), solve_config);
    };
    double v_lo = value_at(c_lo), v_hi = value_at(c_hi);
    if (out.baseline_value < v_lo - tol || out.baseline_value > v_hi + tol)
        throw std::runtime_error(
            "certainty_equivalent: bracket failure, baseline value " +
            std::to_string(out.baseline_value) + " outside [" + std::to_string(v_lo) + ", " +
            std::to_string(v_hi) + "]");

    double c_mid = 0.5 * (c_lo + c_hi), v_mid = 0.0;
    for (int it = 0; it < 200; ++it) {
        c_mid = 0.5 * (c_lo + c_hi);
        v_mid = value_at(c_mid);
        if (std::fabs(v_mid - out.baseline_value) <= tol) break;
        (v_mid < out.baseline_value ? c_lo : c_hi) = c_mid;
    }
    out.c_payment = c_mid;
    out.counterfactual_value = v_mid;
    if (std::fabs(out.counterfactual_value - out.baseline_value) > tol)
        throw std::runtime_error("certainty_equivalent: bisection failed to certify |V_C - V| <= tol");
    return out;
}

struct CeComparison {
    CePoint a;
    CePoint b;
    double ratio = 1.0; // b relative to a
};

inline CeComparison ce_comparison(const BusModel& model_a, const BusModel& model_b,
                                  const SolveConfig& solve_config, double tol = 1e-6) {
    if (model_a.grid.n_bins != model_b.grid.n_bins ||
        model_a.transition.rows() != model_b.transition.rows())
        throw std::invalid_argument("ce_comparison: models must share grid and transition");
    CeComparison out;
    out.a = certainty_equivalent(model_a, solve_config, tol);
    out.b = certainty_equivalent(model_b, solve_config, tol);
    out.ratio = out.b.c_payment / out.a.c_payment;
    return out;
}

} // namespace ezddc
