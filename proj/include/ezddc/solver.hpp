#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ezddc/model.hpp"
#include "ezddc/preferences.hpp"
#include "ezddc/stats.hpp"

namespace ezddc {

struct Bounds {
    double v_lower = 0.0;
    double v_star = 0.0;
};

enum class StartPoint { UpperBound, LowerBound, Custom };

// The separable path evaluates (1-beta)E[u] + beta E[V] directly; the general
// path keeps the Delta-expectation inside phi. Auto picks by is_separable().
// Forcing General on a separable spec exercises the nesting reduction.
enum class EvalPath { Auto, General, Separable };

struct SolveConfig {
    double tol_sup_norm = 1e-9; // sup norm on phi^{-1}-transformed values
    int max_iters = 5000;
    int n_sim_eps = 2500; // S
    std::uint64_t seed = 0;
    StartPoint start = StartPoint::UpperBound;
    std::vector<double> custom_start;
    int n_mc_bounds = 20000;
    int n_threads = 1;
    EvalPath path = EvalPath::Auto;
    // With the projection rule the iteration continues until the *limit* is
    // within tol (what dual-start gap certificates need). Plain residual
    // stopping is cheaper and is what the likelihood loop uses.
    bool stop_on_residual_only = false;

    void validate() const {
        if (!(tol_sup_norm > 0.0)) throw std::invalid_argument("SolveConfig: tol must be positive");
        if (max_iters <= 0) throw std::invalid_argument("SolveConfig: max_iters must be positive");
        if (n_sim_eps < 1) throw std::invalid_argument("SolveConfig: n_sim_eps must be >= 1");
        if (n_threads < 1) throw std::invalid_argument("SolveConfig: n_threads must be >= 1");
    }
};

struct ValueFunction {
    std::vector<double> values;
    std::uint64_t fingerprint = 0;
    Bounds bounds{};
};

struct SolveReport {
    ValueFunction fixed_point;
    int iterations = 0;
    std::vector<double> residual_history;
    bool converged = false;
    double empirical_lipschitz = 0.0;
    Bounds bounds{};
    std::uint64_t draw_fingerprint = 0;
};

namespace detail {

inline void parallel_for_states(int n, int n_threads, const std::function<void(int, int)>& body) {
    if (n_threads <= 1 || n < 2 * n_threads) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline bool use_separable_path(const PreferenceSpec& prefs, EvalPath path) {
    switch (path) {
        case EvalPath::General: return false;
        case EvalPath::Separable:
            if (!prefs.is_separable())
                throw std::invalid_argument("EvalPath::Separable requires alpha == rho");
            return true;
        case EvalPath::Auto: default: return prefs.is_separable();
    }
}

} // namespace detail

// Simulated value-iteration operator with all draw- and payoff-dependent
// utility terms precomputed, so that repeated applications only pay for the
// aggregator around the continuation value. Zero-probability increments are
// never evaluated.
class BellmanWorkspace {
public:
    BellmanWorkspace(const BusModel& model, const DrawBlock& draws,
                     EvalPath path = EvalPath::Auto, int n_threads = 1)
        : prefs_(model.prefs),
          n_states_(model.grid.n_bins),
          n_draws_(draws.size()),
          n_threads_(n_threads),
          separable_(detail::use_separable_path(model.prefs, path)) {
        if (n_draws_ == 0) throw std::invalid_argument("BellmanWorkspace: empty draw block");
        const double one_minus_beta = 1.0 - prefs_.beta;
        const auto& grid = model.grid;
        const auto& pay = model.payoff;

        auto build_action = [&](int d, int x, std::vector<double>& probs,
                                std::vector<int>& nexts, std::vector<double>& utils,
                                std::vector<double>& ubar) {
            const auto row = model.transition.row_for_action(d, x);
            const std::vector<double>& eps = d == kReplace ? draws.eps_replace : draws.eps_keep;
            for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
                if (row[delta] <= 0.0) continue;
                probs.push_back(row[delta]);
                nexts.push_back(next_state(grid, d, x, delta));
                const double base = payoff(pay, d, x, delta);
                const std::size_t off = utils.size();
                utils.resize(off + n_draws_);
                for (std::size_t s = 0; s < n_draws_; ++s)
                    utils[off + s] = one_minus_beta * utility(prefs_, base + pay.sigma * eps[s]);
                if (separable_) {
                    const double p = probs.back();
                    for (std::size_t s = 0; s < n_draws_; ++s) ubar[s] += p * utils[off + s];
                }
            }
        };

        keep_offsets_.assign(static_cast<std::size_t>(n_states_) + 1, 0);
        if (separable_) ubar_keep_.assign(static_cast<std::size_t>(n_states_) * n_draws_, 0.0);
        for (int x = 0; x < n_states_; ++x) {
            std::vector<double> ubar_x(separable_ ? n_draws_ : 0, 0.0);
            build_action(kKeep, x, keep_probs_, keep_next_, keep_utils_, ubar_x);
            keep_offsets_[static_cast<std::size_t>(x) + 1] = keep_probs_.size();
            if (separable_)
                std::copy(ubar_x.begin(), ubar_x.end(),
                          ubar_keep_.begin() + static_cast<std::ptrdiff_t>(x * n_draws_));
        }
        ubar_replace_.assign(separable_ ? n_draws_ : 0, 0.0);
        build_action(kReplace, 0, replace_probs_, replace_next_, replace_utils_, ubar_replace_);
    }

    int n_states() const { return n_states_; }
    std::size_t n_draws() const { return n_draws_; }

    // v_out = T(v_in); both indexed by state bin, raw (phi-scale) values.
    void apply(std::span<const double> v_in, std::span<double> v_out) const {
        if (static_cast<int>(v_in.size()) != n_states_ ||
            static_cast<int>(v_out.size()) != n_states_)
            throw std::invalid_argument("BellmanWorkspace::apply: size mismatch");
        std::vector<double> cont(static_cast<std::size_t>(n_states_));
        for (int x = 0; x < n_states_; ++x) {
            try {
                cont[static_cast<std::size_t>(x)] =
                    prefs_.beta * aggregator_inverse(prefs_, v_in[static_cast<std::size_t>(x)]);
            } catch (const std::domain_error& e) {
                throw std::domain_error("bellman_apply: continuation value at state " +
                                        std::to_string(x) + " outside the aggregator domain (" +
                                        e.what() + ")");
            }
        }
        separable_ ? apply_separable(v_in, v_out, cont) : apply_general(v_out, cont);
    }

    ValueFunction apply(const ValueFunction& v) const {
        ValueFunction out = v;
        apply(v.values, out.values);
        return out;
    }

private:
    void apply_general(std::span<double> v_out, const std::vector<double>& cont) const {
        // Replacement resets mileage, so its choice value is state-independent.
        std::vector<double> a_replace(n_draws_, 0.0);
        for (std::size_t k = 0; k < replace_probs_.size(); ++k) {
            const double p = replace_probs_[k];
            const double w = cont[static_cast<std::size_t>(replace_next_[k])];
            const double* u = replace_utils_.data() + k * n_draws_;
            for (std::size_t s = 0; s < n_draws_; ++s)
                a_replace[s] += p * aggregator(prefs_, u[s] + w);
        }
        detail::parallel_for_states(n_states_, n_threads_, [&](int lo, int hi) {
            std::vector<double> a_keep(n_draws_);
            for (int x = lo; x < hi; ++x) {
                std::fill(a_keep.begin(), a_keep.end(), 0.0);
                for (std::size_t k = keep_offsets_[static_cast<std::size_t>(x)];
                     k < keep_offsets_[static_cast<std::size_t>(x) + 1]; ++k) {
                    const double p = keep_probs_[k];
                    const double w = cont[static_cast<std::size_t>(keep_next_[k])];
                    const double* u = keep_utils_.data() + k * n_draws_;
                    for (std::size_t s = 0; s < n_draws_; ++s)
                        a_keep[s] += p * aggregator(prefs_, u[s] + w);
                }
                double acc = 0.0;
                for (std::size_t s = 0; s < n_draws_; ++s)
                    acc += std::max(a_keep[s], a_replace[s]);
                v_out[static_cast<std::size_t>(x)] = acc / static_cast<double>(n_draws_);
            }
        });
    }

    void apply_separable(std::span<const double> v_in, std::span<double> v_out,
                         const std::vector<double>& cont) const {
        (void)cont; // phi is the identity here; continuation enters linearly
        double w_replace = 0.0;
        for (std::size_t k = 0; k < replace_probs_.size(); ++k)
            w_replace += replace_probs_[k] *
                         v_in[static_cast<std::size_t>(replace_next_[k])];
        w_replace *= prefs_.beta;
        detail::parallel_for_states(n_states_, n_threads_, [&](int lo, int hi) {
            for (int x = lo; x < hi; ++x) {
                double w_keep = 0.0;
                for (std::size_t k = keep_offsets_[static_cast<std::size_t>(x)];
                     k < keep_offsets_[static_cast<std::size_t>(x) + 1]; ++k)
                    w_keep += keep_probs_[k] * v_in[static_cast<std::size_t>(keep_next_[k])];
                w_keep *= prefs_.beta;
                const double* u0 = ubar_keep_.data() + static_cast<std::size_t>(x) * n_draws_;
                double acc = 0.0;
                for (std::size_t s = 0; s < n_draws_; ++s)
                    acc += std::max(u0[s] + w_keep, ubar_replace_[s] + w_replace);
                v_out[static_cast<std::size_t>(x)] = acc / static_cast<double>(n_draws_);
            }
        });
    }

    PreferenceSpec prefs_;
    int n_states_;
    std::size_t n_draws_;
    int n_threads_;
    bool separable_;

    // keep action, per state: contiguous support entries
    std::vector<std::size_t> keep_offsets_;
    std::vector<double> keep_probs_;
    std::vector<int> keep_next_;
    std::vector<double> keep_utils_; // (1-beta) u(pi + sigma eps), per entry x draw

    // replace action (state-independent)
    std::vector<double> replace_probs_;
    std::vector<int> replace_next_;
    std::vector<double> replace_utils_;

    // separable fast path: E_Delta[(1-beta) u], per state x draw
    std::vector<double> ubar_keep_;
    std::vector<double> ubar_replace_;
};

inline ValueFunction bellman_apply(const BusModel& model, const ValueFunction& v,
                                   const DrawBlock& draws) {
    return BellmanWorkspace(model, draws).apply(v);
}

namespace detail {

struct ProfitRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

inline ProfitRange profit_range(const BusModel& m) {
    ProfitRange r;
    for (int d : {kKeep, kReplace}) {
        for (int x = 0; x < m.grid.n_bins; ++x) {
            const auto row = m.transition.row_for_action(d, x);
            for (int delta = 0; delta < static_cast<int>(row.size()); ++delta) {
                if (row[delta] <= 0.0) continue;
                const double p = payoff(m.payoff, d, x, delta);
                r.lo = std::min(r.lo, p);
                r.hi = std::max(r.hi, p);
            }
        }
    }
    return r;
}

// max{ E[phi(u(pi_hi + eps_hat))], phi(E[u(pi_hi + eps_hat)]) } and the min
// analog at pi_lo with a single shock, evaluated on a given draw block.
// `inflate` > 0 pads by that many standard errors of the Monte Carlo mean.
inline Bounds raw_bounds_on_draws(const BusModel& m, const DrawBlock& draws, double inflate) {
    const auto pr = profit_range(m);
    const std::size_t n = draws.size();
    std::vector<double> phi_hi(n), u_hi(n), phi_lo(n), u_lo(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double eps_hat = std::max(draws.eps_keep[s], draws.eps_replace[s]);
        u_hi[s] = utility(m.prefs, pr.hi + m.payoff.sigma * eps_hat);
        phi_hi[s] = aggregator(m.prefs, u_hi[s]);
        u_lo[s] = utility(m.prefs, pr.lo + m.payoff.sigma * draws.eps_keep[s]);
        phi_lo[s] = aggregator(m.prefs, u_lo[s]);
    }
    const double root_n = std::sqrt(static_cast<double>(n));
    auto padded_mean = [&](const std::vector<double>& v, double sign) {
        return mean_of(v) + sign * inflate * sd_of(v) / root_n;
    };
    Bounds b;
    b.v_star = std::max(padded_mean(phi_hi, +1.0),
                        aggregator(m.prefs, padded_mean(u_hi, +1.0)));
    b.v_lower = std::min(padded_mean(phi_lo, -1.0),
                         aggregator(m.prefs, padded_mean(u_lo, -1.0)));
    if (!std::isfinite(b.v_star) || !std::isfinite(b.v_lower))
        throw std::runtime_error("compute_bounds: non-finite value bound; the shock "
                                 "distribution violates the moment conditions");
    return b;
}

} // namespace detail

// Analytic bound alpha^{-1} for CARA (tight and draw-free); Monte Carlo
// evaluation of the two-term max/min otherwise, padded by 3 standard errors.
inline Bounds compute_bounds(const BusModel& model, int n_mc, std::uint64_t seed) {
    model.validate();
    if (n_mc < 2) throw std::invalid_argument("compute_bounds: n_mc must be >= 2");
    const DrawBlock draws = draw_shock_block(model.shocks, static_cast<std::size_t>(n_mc), seed);
    Bounds b = detail::raw_bounds_on_draws(model, draws, 3.0);
    if (model.prefs.family == Family::CaraEz && model.prefs.alpha > 0.0)
        b.v_star = 1.0 / model.prefs.alpha;
    return b;
}

namespace detail {

// Start box evaluated on the solve's own draw block. Under the empirical
// measure T(v_star) <= v_star and T(v_lower) >= v_lower hold exactly, which
// keeps the dual-start iterates monotone without any slack from using an
// independent bound stream.
inline Bounds start_bounds(const BusModel& model, const DrawBlock& draws) {
    Bounds b = raw_bounds_on_draws(model, draws, 0.0);
    if (model.prefs.family == Family::CaraEz && model.prefs.alpha > 0.0)
        b.v_star = 1.0 / model.prefs.alpha;
    return b;
}

inline std::vector<double> transformed(const PreferenceSpec& prefs,
                                       const std::vector<double>& v) {
    std::vector<double> t(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = aggregator_inverse(prefs, v[i]);
    return t;
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// Clamp a custom start into the aggregator's range so phi^{-1} is defined.
inline void clamp_to_range(const PreferenceSpec& prefs, std::vector<double>& v) {
    if (prefs.is_separable()) return;
    if (prefs.family == Family::CaraEz && prefs.alpha > 0.0) {
        const double cap = 1.0 / prefs.alpha;
        for (double& x : v) x = std::min(x, cap);
    } else if (prefs.family == Family::CrraEz && prefs.alpha != 1.0) {
        for (double& x : v) x = std::max(x, 0.0);
    }
}

} // namespace detail

// Value-function iteration from a bound start (Tarski dual-start scheme).
// Non-convergence is reported, not thrown.
inline SolveReport solve(const BusModel& model, const SolveConfig& config) {
    model.validate();
    config.validate();
    const DrawBlock draws =
        draw_shock_block(model.shocks, static_cast<std::size_t>(config.n_sim_eps), config.seed);
    const BellmanWorkspace ws(model, draws, config.path, config.n_threads);
    const Bounds bounds = detail::start_bounds(model, draws);

    const std::size_t n = static_cast<std::size_t>(model.grid.n_bins);
    std::vector<double> v(n);
    switch (config.start) {
        case StartPoint::UpperBound: v.assign(n, bounds.v_star); break;
        case StartPoint::LowerBound: v.assign(n, bounds.v_lower); break;
        case StartPoint::Custom:
            if (config.custom_start.size() != n)
                throw std::invalid_argument("solve: custom_start has wrong length");
            v = config.custom_start;
            detail::clamp_to_range(model.prefs, v);
            break;
    }

    SolveReport report;
    report.bounds = bounds;
    report.draw_fingerprint = draws.fingerprint;
    std::vector<double> v_next(n);
    std::vector<double> t_cur = detail::transformed(model.prefs, v);
    double prev_raw_diff = -1.0;
    double ratio = 0.0; // recent residual contraction factor
    for (int it = 0; it < config.max_iters; ++it) {
        ws.apply(v, v_next);
        ++report.iterations;
        const double raw_diff = detail::sup_diff(v_next, v);
        if (prev_raw_diff > 1e-300)
            report.empirical_lipschitz =
                std::max(report.empirical_lipschitz, raw_diff / prev_raw_diff);
        prev_raw_diff = raw_diff;
        std::vector<double> t_next = detail::transformed(model.prefs, v_next);
        const double residual = detail::sup_diff(t_next, t_cur);
        if (!report.residual_history.empty() && report.residual_history.back() > 1e-300)
            ratio = std::min(residual / report.residual_history.back(), 0.9999);
        report.residual_history.push_back(residual);
        v.swap(v_next);
        t_cur.swap(t_next);
        // Under a contraction with factor q the distance to the limit is at
        // most residual * q / (1-q); stop once that projection is inside tol,
        // so that the dual-start limits land within a few tol of each other.
        const double stop_tol =
            config.stop_on_residual_only
                ? config.tol_sup_norm
                : config.tol_sup_norm *
                      std::min(1.0, (1.0 - ratio) / std::max(ratio, 1e-12));
        if (residual <= stop_tol) {
            report.converged = true;
            break;
        }
    }
    report.fixed_point = ValueFunction{std::move(v), fingerprint(model), bounds};
    return report;
}

struct UniquenessReport {
    bool unique = false;
    double gap = 0.0;
    SolveReport from_upper;
    SolveReport from_lower;
};

// Runs the two Tarski extremal iterations with identical draws and compares
// the limits in the transformed (utils) scale.
inline UniquenessReport check_uniqueness(const BusModel& model, const SolveConfig& config) {
    SolveConfig up = config;
    up.start = StartPoint::UpperBound;
    SolveConfig lo = config;
    lo.start = StartPoint::LowerBound;
    UniquenessReport r;
    r.from_upper = solve(model, up);
    r.from_lower = solve(model, lo);
    r.gap = detail::sup_diff(detail::transformed(model.prefs, r.from_upper.fixed_point.values),
                             detail::transformed(model.prefs, r.from_lower.fixed_point.values));
    r.unique = r.from_upper.converged && r.from_lower.converged &&
               r.gap <= 10.0 * config.tol_sup_norm;
    return r;
}

struct ContractionMargin {
    double m_numeric = 0.0;
    std::optional<double> m_analytic;
    Timing timing = Timing::Indifferent;
};

// Numeric estimate of E[max_d sup psi'] over the bound box, plus the closed
// form when one of the sufficient conditions applies. psi' is monotone in z
// (increasing under early resolution, decreasing under late), so the sup over
// z sits at a box endpoint; the sup over pi uses a doubling grid.
inline ContractionMargin contraction_margin(const BusModel& model, int n_mc, std::uint64_t seed) {
    model.validate();
    const auto& prefs = model.prefs;
    ContractionMargin out;
    out.timing = timing_preference(prefs);

    if (prefs.is_separable()) {
        out.m_analytic = prefs.beta;
    } else if (prefs.family == Family::CrraEz && prefs.rho <= prefs.alpha) {
        out.m_analytic = std::pow(prefs.beta, (1.0 - prefs.alpha) / (1.0 - prefs.rho));
    } else if (prefs.family == Family::CaraEz && prefs.rho >= prefs.alpha) {
        out.m_analytic = std::pow(prefs.beta, prefs.alpha / prefs.rho);
    }

    Bounds bounds;
    try {
        bounds = compute_bounds(model, n_mc, derive_seed(seed, 1));
    } catch (const std::exception&) {
        // no finite bound box (e.g. CRRA utility with unbounded-below shocks);
        // the analytic certificate, when present, still stands
        out.m_numeric = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const auto pr = detail::profit_range(model);
    const double z_eval = out.timing == Timing::Late ? bounds.v_lower : bounds.v_star;
    const DrawBlock draws =
        draw_shock_block(model.shocks, static_cast<std::size_t>(n_mc), derive_seed(seed, 2));

    auto margin_on_grid = [&](int n_pi) {
        double total = 0.0;
        for (std::size_t s = 0; s < draws.size(); ++s) {
            double best = 0.0;
            for (double eps : {draws.eps_keep[s], draws.eps_replace[s]}) {
                for (int i = 0; i < n_pi; ++i) {
                    const double pi =
                        pr.lo + (pr.hi - pr.lo) * static_cast<double>(i) /
                                    static_cast<double>(std::max(1, n_pi - 1));
                    double val;
                    try {
                        const double y = utility(prefs, pi + model.payoff.sigma * eps);
                        val = psi_prime(prefs, y, z_eval);
                    } catch (const std::domain_error&) {
                        val = std::numeric_limits<double>::infinity();
                    }
                    best = std::max(best, val);
                }
            }
            total += best;
        }
        return total / static_cast<double>(draws.size());
    };

    int n_pi = 64;
    double m = margin_on_grid(n_pi);
    while (n_pi < 1024 && std::isfinite(m)) {
        n_pi *= 2;
        const double refined = margin_on_grid(n_pi);
        const bool settled = std::fabs(refined - m) < 1e-4;
        m = refined;
        if (settled) break;
    }
    out.m_numeric = m;
    return out;
}

} // namespace ezddc
