#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezddc/ccp.hpp"
#include "ezddc/model.hpp"
#include "ezddc/optim.hpp"
#include "ezddc/panel.hpp"
#include "ezddc/solver.hpp"
#include "ezddc/stats.hpp"

namespace ezddc {

enum class Param { ThetaD, ThetaX, Sigma, Alpha, Rho };

inline const char* param_name(Param p) {
    switch (p) {
        case Param::ThetaD: return "theta_d";
        case Param::ThetaX: return "theta_x";
        case Param::Sigma: return "sigma";
        case Param::Alpha: return "alpha";
        case Param::Rho: return "rho";
    }
    return "?";
}

inline Param param_from_name(const std::string& name) {
    for (Param p : {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha, Param::Rho})
        if (name == param_name(p)) return p;
    throw std::invalid_argument("unknown parameter name: " + name);
}

struct Theta {
    double theta_d = 0.0;
    double theta_x = 0.0;
    double sigma = 1.0;
    double alpha = 0.0;
    double rho = 0.0;

    double get(Param p) const {
        switch (p) {
            case Param::ThetaD: return theta_d;
            case Param::ThetaX: return theta_x;
            case Param::Sigma: return sigma;
            case Param::Alpha: return alpha;
            case Param::Rho: return rho;
        }
        return 0.0;
    }
    void set(Param p, double v) {
        switch (p) {
            case Param::ThetaD: theta_d = v; break;
            case Param::ThetaX: theta_x = v; break;
            case Param::Sigma: sigma = v; break;
            case Param::Alpha: alpha = v; break;
            case Param::Rho: rho = v; break;
        }
    }
};

struct OptimizerConfig {
    int max_evals = 400;
    double initial_simplex_scale = 0.15;
    double f_tol = 1e-6;
};

struct EstimationConfig {
    double beta_fixed = 0.9;
    double rc_fixed = 8.0;
    Family family = Family::CaraEz;
    std::vector<Param> free_params = {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha,
                                      Param::Rho};
    bool separable_constraint = false; // ties rho := alpha
    StateGrid grid{130, 3000.0};
    ShockSpec shocks{ShockDist::StandardNormal};
    Theta start{0.05, 0.10, 1.0, 0.10, 0.10}; // start point and fixed values
    OptimizerConfig optimizer;
    SolveConfig solver;
    // CCP smoothing inside the likelihood: unset -> 0.05 * sigma(theta),
    // 0 -> raw indicator, > 0 -> fixed temperature. Reported tables are
    // always raw.
    std::optional<double> ccp_smoothing_temperature;
    // Draws for the likelihood's CCP tables (a fixed per-fit block, distinct
    // from the solve block). Small-probability tail states need far more
    // draws than the value iteration does; 0 means max(4096, 4 * n_sim_eps).
    int n_ccp_draws = 0;
    bool include_transition_term = true;
    int transition_min_obs = 30;
    int transition_group_size = 10;

    int ccp_draws() const {
        return n_ccp_draws > 0 ? n_ccp_draws : std::max(4096, 4 * solver.n_sim_eps);
    }

    void validate() const {
        if (!(beta_fixed > 0.0 && beta_fixed < 1.0))
            throw std::invalid_argument("EstimationConfig: beta_fixed must lie in (0,1)");
        if (!(rc_fixed > 0.0))
            throw std::invalid_argument("EstimationConfig: rc_fixed must be positive");
        grid.validate();
        if (separable_constraint)
            for (Param p : free_params)
                if (p == Param::Rho)
                    throw std::invalid_argument(
                        "EstimationConfig: rho cannot be free under the separable constraint");
        if (ccp_smoothing_temperature && *ccp_smoothing_temperature < 0.0)
            throw std::invalid_argument("EstimationConfig: smoothing temperature must be >= 0");
    }
};

struct EstimateResult {
    Theta theta_hat;
    std::vector<Param> free_params;
    std::vector<double> std_errors; // delta method, aligned with free_params
    // Equal-tailed 95% intervals built on the unconstrained scale and mapped
    // through the parameter transform. For identity transforms this is the
    // usual +-1.96 SE band; for log-type transforms it stays honest when the
    // estimate sits near a boundary, where the delta-method band degenerates.
    std::vector<double> ci_lower;
    std::vector<double> ci_upper;
    double loglik = 0.0;
    int n_obs = 0;
    bool converged = false;
    int eval_count = 0;
    std::uint64_t draw_fingerprint = 0;
    TransitionModel transition;
};

// ---------------------------------------------------------------------------
// Nonparametric transition estimation
// ---------------------------------------------------------------------------

// Empirical Pr(Delta | bin). Replacement observations count toward bin 0 (the
// engine is new within that month). Bins with fewer than `min_obs`
// observations fall back to their coarse group of `group_size` bins, and
// unvisited groups to the pooled all-data row.
inline TransitionModel estimate_transition(const PanelDataset& data, int n_bins,
                                           int min_obs = 30, int group_size = 10) {
    if (data.rows.empty())
        throw std::invalid_argument("estimate_transition: empty panel");
    int delta_max = 0;
    for (const auto& r : data.rows) delta_max = std::max(delta_max, r.delta);
    const int width = delta_max + 1;

    std::vector<std::vector<double>> counts(static_cast<std::size_t>(n_bins),
                                            std::vector<double>(width, 0.0));
    std::vector<double> global(width, 0.0);
    for (const auto& r : data.rows) {
        const int bucket = r.d == kReplace ? 0 : r.x;
        if (bucket < 0 || bucket >= n_bins)
            throw std::invalid_argument("estimate_transition: x_bin outside the grid");
        counts[static_cast<std::size_t>(bucket)][static_cast<std::size_t>(r.delta)] += 1.0;
        global[static_cast<std::size_t>(r.delta)] += 1.0;
    }

    const int n_groups = (n_bins + group_size - 1) / group_size;
    std::vector<std::vector<double>> group_counts(static_cast<std::size_t>(n_groups),
                                                  std::vector<double>(width, 0.0));
    for (int b = 0; b < n_bins; ++b)
        for (int k = 0; k < width; ++k)
            group_counts[static_cast<std::size_t>(b / group_size)][static_cast<std::size_t>(k)] +=
                counts[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];

    auto total_of = [](const std::vector<double>& v) {
        double t = 0.0;
        for (double x : v) t += x;
        return t;
    };
    auto normalized = [&](const std::vector<double>& v) {
        const double t = total_of(v);
        std::vector<double> row(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) row[k] = v[k] / t;
        return row;
    };

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        const auto& own = counts[static_cast<std::size_t>(b)];
        const double n_own = total_of(own);
        if (n_own >= min_obs) {
            rows[static_cast<std::size_t>(b)] = normalized(own);
            continue;
        }
        const auto& grp = group_counts[static_cast<std::size_t>(b / group_size)];
        if (total_of(grp) > 0.0) {
            rows[static_cast<std::size_t>(b)] = normalized(grp);
            continue;
        }
        if (n_own > 0.0)
            throw std::runtime_error("estimate_transition: visited bin " + std::to_string(b) +
                                     " has an empty pooling group");
        rows[static_cast<std::size_t>(b)] = normalized(global);
    }
    return TransitionModel::from_rows(std::move(rows));
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

namespace detail {

struct ChoiceCounts {
    std::vector<double> keep;    // per state bin
    std::vector<double> replace; // per state bin
};

inline ChoiceCounts count_choices(const PanelDataset& data, int n_bins) {
    ChoiceCounts c;
    c.keep.assign(static_cast<std::size_t>(n_bins), 0.0);
    c.replace.assign(static_cast<std::size_t>(n_bins), 0.0);
    for (const auto& r : data.rows)
        (r.d == kReplace ? c.replace : c.keep)[static_cast<std::size_t>(r.x)] += 1.0;
    return c;
}

} // namespace detail

// Inner NFXP engine: owns the data summaries, the estimated transition, and
// the warm-start state shared across likelihood evaluations of one fit. The
// shock draw block is identical for every theta (common random numbers).
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const PanelDataset& data, const EstimationConfig& config)
        : config_(config),
          n_obs_(static_cast<int>(data.rows.size())),
          counts_(detail::count_choices(data, config.grid.n_bins)),
          transition_(estimate_transition(data, config.grid.n_bins, config.transition_min_obs,
                                          config.transition_group_size)),
          ccp_block_(draw_shock_block(config.shocks,
                                      static_cast<std::size_t>(config.ccp_draws()),
                                      derive_seed(config.solver.seed, 0xccULL))) {
        config_.validate();
        validate_panel(data, config_.grid.n_bins);

        delta_term_ = 0.0;
        for (const auto& r : data.rows) {
            const auto row = transition_.row_for_action(r.d, r.x);
            delta_term_ += std::log(row[static_cast<std::size_t>(r.delta)]);
        }
        obs_.reserve(data.rows.size());
        for (const auto& r : data.rows) obs_.push_back({r.x, r.d});
    }

    const TransitionModel& transition() const { return transition_; }
    double delta_term() const { return config_.include_transition_term ? delta_term_ : 0.0; }
    int n_obs() const { return n_obs_; }
    const EstimationConfig& config() const { return config_; }

    bool theta_admissible(const Theta& t) const {
        if (!(t.sigma > 0.0)) return false;
        if (config_.family == Family::CaraEz) return t.alpha >= 0.0 && t.rho >= 0.0;
        return t.alpha <= 1.0 && t.rho < 1.0;
    }

    BusModel build_model(const Theta& t) const {
        BusModel m;
        m.grid = config_.grid;
        m.payoff = PayoffParams{t.theta_d, t.theta_x, config_.rc_fixed, t.sigma, 0.0};
        m.transition = transition_;
        m.shocks = config_.shocks;
        m.prefs = config_.family == Family::CaraEz
                      ? PreferenceSpec::cara(t.alpha, t.rho, config_.beta_fixed)
                      : PreferenceSpec::crra(t.alpha, t.rho, config_.beta_fixed);
        return m;
    }

    // The latent choice index v(1,x,eps) - v(0,x,eps) lives on the
    // (1-beta)-discounted utility scale, so the kernel width follows it.
    // 0.05 * sigma itself acts like extra shock variance and visibly biases
    // sigma downward.
    double smoothing_temperature(const Theta& t) const {
        if (config_.ccp_smoothing_temperature) return *config_.ccp_smoothing_temperature;
        return 0.05 * (1.0 - config_.beta_fixed) * t.sigma;
    }

    // Full log likelihood. `warm` starts the inner solve from the previous
    // evaluation's fixed point; the public entry point always runs cold so
    // the value depends only on (theta, data, seed).
    double log_likelihood(const Theta& theta, bool warm = false,
                          std::optional<double> temperature_override = std::nullopt) {
        const auto table = ccp_table(theta, warm,
                                     temperature_override ? *temperature_override
                                                          : smoothing_temperature(theta));
        if (!table) return -std::numeric_limits<double>::infinity();
        double ll = delta_term();
        for (int x = 0; x < config_.grid.n_bins; ++x) {
            const auto xi = static_cast<std::size_t>(x);
            const double n0 = counts_.keep[xi], n1 = counts_.replace[xi];
            if (n0 == 0.0 && n1 == 0.0) continue;
            const double p1 = table->replace_prob[xi];
            if (n1 > 0.0) {
                if (p1 <= 0.0) return zero_prob_sentinel();
                ll += n1 * std::log(p1);
            }
            if (n0 > 0.0) {
                if (p1 >= 1.0) return zero_prob_sentinel();
                ll += n0 * std::log(1.0 - p1);
            }
        }
        return ll;
    }

    // Per-observation log choice probabilities (for outer-product scores).
    std::vector<double> per_obs_log_choice(const Theta& theta, double temperature,
                                           bool warm = true) {
        const auto table = ccp_table(theta, warm, temperature);
        if (!table)
            throw std::runtime_error("per_obs_log_choice: inadmissible theta or failed solve");
        std::vector<double> out(obs_.size());
        for (std::size_t i = 0; i < obs_.size(); ++i) {
            const double p1 = table->replace_prob[static_cast<std::size_t>(obs_[i].x)];
            const double p = obs_[i].d == kReplace ? p1 : 1.0 - p1;
            out[i] = std::log(std::max(p, 1e-300));
        }
        return out;
    }

    bool hit_zero_probability() const { return hit_zero_prob_; }
    std::uint64_t draw_fingerprint(const Theta& theta) {
        return draw_shock_block(config_.shocks,
                                static_cast<std::size_t>(config_.solver.n_sim_eps),
                                config_.solver.seed)
            .fingerprint;
        (void)theta;
    }

    void reset_warm_start() { warm_values_.clear(); }

private:
    double zero_prob_sentinel() {
        hit_zero_prob_ = true;
        return -std::numeric_limits<double>::infinity();
    }

    std::optional<CcpTable> ccp_table(const Theta& theta, bool warm, double temperature) {
        if (!theta_admissible(theta)) return std::nullopt;
        BusModel model;
        try {
            model = build_model(theta);
            model.validate();
        } catch (const std::exception&) {
            return std::nullopt;
        }
        SolveConfig scfg = config_.solver;
        scfg.stop_on_residual_only = true; // likelihood needs smoothness, not certificates
        if (warm && warm_values_.size() == static_cast<std::size_t>(config_.grid.n_bins)) {
            scfg.start = StartPoint::Custom;
            scfg.custom_start = warm_values_;
        }
        SolveReport rep;
        try {
            rep = solve(model, scfg);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        if (!rep.converged) return std::nullopt;
        if (warm) warm_values_ = rep.fixed_point.values;
        return ccp_from_draws(model, rep.fixed_point, ccp_block_, temperature,
                              config_.solver.path);
    }

    EstimationConfig config_;
    int n_obs_;
    detail::ChoiceCounts counts_;
    TransitionModel transition_;
    double delta_term_ = 0.0;
    struct Obs {
        int x;
        int d;
    };
    std::vector<Obs> obs_;
    DrawBlock ccp_block_;
    std::vector<double> warm_values_;
    bool hit_zero_prob_ = false;
};

// Deterministic public entry point: cold inner solve every call.
inline double log_likelihood(const Theta& theta, const PanelDataset& data,
                             const EstimationConfig& config) {
    LikelihoodEvaluator ev(data, config);
    return ev.log_likelihood(theta, /*warm=*/false);
}

// ---------------------------------------------------------------------------
// Parameter transforms (unconstrained outer search space)
// ---------------------------------------------------------------------------

namespace detail {

// sigma, and CARA alpha/rho: log. CRRA alpha/rho: value = 1 - exp(-t), the
// monotone map onto (-inf, 1). Payoff slopes are unconstrained.
struct ParamTransform {
    enum Kind { Identity, Log, OneMinusExpNeg } kind = Identity;

    double to_natural(double t) const {
        switch (kind) {
            case Identity: return t;
            case Log: return std::exp(t);
            case OneMinusExpNeg: return 1.0 - std::exp(-t);
        }
        return t;
    }
    double to_unconstrained(double v) const {
        switch (kind) {
            case Identity: return v;
            case Log:
                if (!(v > 0.0))
                    throw std::invalid_argument("transform: value must be positive");
                return std::log(v);
            case OneMinusExpNeg:
                if (!(v < 1.0))
                    throw std::invalid_argument("transform: value must be below 1");
                return -std::log(1.0 - v);
        }
        return v;
    }
    double jacobian(double t) const { // d natural / d unconstrained
        switch (kind) {
            case Identity: return 1.0;
            case Log: return std::exp(t);
            case OneMinusExpNeg: return std::exp(-t);
        }
        return 1.0;
    }
};

inline ParamTransform transform_for(Param p, Family family) {
    switch (p) {
        case Param::ThetaD:
        case Param::ThetaX: return {ParamTransform::Identity};
        case Param::Sigma: return {ParamTransform::Log};
        case Param::Alpha:
        case Param::Rho:
            return family == Family::CaraEz ? ParamTransform{ParamTransform::Log}
                                            : ParamTransform{ParamTransform::OneMinusExpNeg};
    }
    return {ParamTransform::Identity};
}

inline Theta unpack(const std::vector<double>& t, const std::vector<Param>& free_params,
                    const Theta& base, Family family, bool separable) {
    Theta out = base;
    for (std::size_t k = 0; k < free_params.size(); ++k)
        out.set(free_params[k], transform_for(free_params[k], family).to_natural(t[k]));
    if (separable) out.rho = out.alpha;
    return out;
}

inline std::vector<double> pack(const Theta& theta, const std::vector<Param>& free_params,
                                Family family) {
    std::vector<double> t(free_params.size());
    for (std::size_t k = 0; k < free_params.size(); ++k)
        t[k] = transform_for(free_params[k], family).to_unconstrained(theta.get(free_params[k]));
    return t;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Standard errors (outer product of gradients)
// ---------------------------------------------------------------------------

namespace detail {

// Gaussian elimination with partial pivoting; returns false on singularity.
inline bool invert_matrix(std::vector<std::vector<double>> a, std::vector<std::vector<double>>& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return true;
}

} // namespace detail

namespace detail {

// OPG standard errors on the unconstrained (transformed) scale, via
// central-difference per-observation scores. Uses a smoothed likelihood even
// when the fit was run raw, since indicator CCPs have no usable scores.
inline std::vector<double> opg_se_transformed(const Theta& theta_hat, const PanelDataset& data,
                                              const EstimationConfig& config) {
    const std::vector<Param>& free_params = config.free_params;
    const std::size_t K = free_params.size();
    if (K == 0) return {};

    LikelihoodEvaluator ev(data, config);
    double temperature = ev.smoothing_temperature(theta_hat);
    if (temperature <= 0.0) temperature = 0.05 * (1.0 - config.beta_fixed) * theta_hat.sigma;

    const std::vector<double> t_hat = pack(theta_hat, free_params, config.family);
    const double h = 1e-4;
    const std::size_t n = static_cast<std::size_t>(ev.n_obs());
    std::vector<std::vector<double>> scores(n, std::vector<double>(K, 0.0));
    // prime the warm start near theta_hat once
    ev.log_likelihood(theta_hat, /*warm=*/true, temperature);
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> tp = t_hat, tm = t_hat;
        tp[k] += h;
        tm[k] -= h;
        const Theta theta_p =
            unpack(tp, free_params, theta_hat, config.family, config.separable_constraint);
        const Theta theta_m =
            unpack(tm, free_params, theta_hat, config.family, config.separable_constraint);
        const std::vector<double> lp = ev.per_obs_log_choice(theta_p, temperature);
        const std::vector<double> lm = ev.per_obs_log_choice(theta_m, temperature);
        for (std::size_t i = 0; i < n; ++i) scores[i][k] = (lp[i] - lm[i]) / (2.0 * h);
    }

    std::vector<std::vector<double>> info(K, std::vector<double>(K, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l = 0; l < K; ++l) info[k][l] += scores[i][k] * scores[i][l];

    std::vector<double> se(K, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<double>> inv;
    if (!invert_matrix(info, inv)) return se; // singular: per-parameter NaN
    for (std::size_t k = 0; k < K; ++k)
        if (inv[k][k] >= 0.0) se[k] = std::sqrt(inv[k][k]);
    return se;
}

} // namespace detail

// Delta-method standard errors in natural units.
inline std::vector<double> standard_errors(const Theta& theta_hat, const PanelDataset& data,
                                           const EstimationConfig& config) {
    const std::vector<double> se_t = detail::opg_se_transformed(theta_hat, data, config);
    const std::vector<double> t_hat =
        detail::pack(theta_hat, config.free_params, config.family);
    std::vector<double> se(se_t.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < se_t.size(); ++k) {
        if (!std::isfinite(se_t[k])) continue;
        const double j =
            detail::transform_for(config.free_params[k], config.family).jacobian(t_hat[k]);
        se[k] = std::fabs(j) * se_t[k];
    }
    return se;
}

// ---------------------------------------------------------------------------
// Outer maximization
// ---------------------------------------------------------------------------

// Nested fixed point maximum likelihood over the free parameters. A separable
// prefit (rho tied to alpha) warm-starts the full problem, and the simplex is
// restarted once from the perturbed optimum.
inline EstimateResult fit(const PanelDataset& data, const EstimationConfig& config) {
    config.validate();
    LikelihoodEvaluator ev(data, config);

    EstimateResult result;
    result.free_params = config.free_params;
    result.n_obs = ev.n_obs();
    result.transition = ev.transition();
    result.draw_fingerprint = ev.draw_fingerprint(config.start);

    Theta theta = config.start;
    int evals = 0;
    bool converged = true;

    if (!config.free_params.empty()) {
        const bool has_alpha =
            std::count(config.free_params.begin(), config.free_params.end(), Param::Alpha) > 0;
        const bool has_rho =
            std::count(config.free_params.begin(), config.free_params.end(), Param::Rho) > 0;

        // Stage A: separable prefit over the non-rho free parameters.
        if (!config.separable_constraint && has_alpha && has_rho) {
            std::vector<Param> free_a;
            for (Param p : config.free_params)
                if (p != Param::Rho) free_a.push_back(p);
            auto objective_a = [&](const std::vector<double>& t) {
                return ev.log_likelihood(detail::unpack(t, free_a, theta, config.family, true),
                                         /*warm=*/true);
            };
            const auto res_a = nelder_mead_maximize(
                objective_a, detail::pack(theta, free_a, config.family),
                config.optimizer.initial_simplex_scale, config.optimizer.f_tol,
                std::max(60, config.optimizer.max_evals / 3));
            evals += res_a.evals;
            theta = detail::unpack(res_a.x, free_a, theta, config.family, true);
            theta.rho = theta.alpha;
        }

        auto objective = [&](const std::vector<double>& t) {
            return ev.log_likelihood(detail::unpack(t, config.free_params, theta, config.family,
                                                    config.separable_constraint),
                                     /*warm=*/true);
        };
        auto res = nelder_mead_maximize(objective, detail::pack(theta, config.free_params,
                                                                config.family),
                                        config.optimizer.initial_simplex_scale,
                                        config.optimizer.f_tol, config.optimizer.max_evals);
        evals += res.evals;
        // one restart from the perturbed optimum
        const auto restart = nelder_mead_maximize(
            objective, res.x, 0.4 * config.optimizer.initial_simplex_scale,
            config.optimizer.f_tol, std::max(60, config.optimizer.max_evals / 3));
        evals += restart.evals;
        const auto& best = restart.f > res.f ? restart : res;
        converged = best.converged;
        theta = detail::unpack(best.x, config.free_params, theta, config.family,
                               config.separable_constraint);
    }

    result.theta_hat = theta;
    result.eval_count = evals;
    result.converged = converged;
    result.loglik = log_likelihood(theta, data, config); // cold, deterministic
    if (!config.free_params.empty()) {
        const std::vector<double> se_t = detail::opg_se_transformed(theta, data, config);
        const std::vector<double> t_hat =
            detail::pack(theta, config.free_params, config.family);
        const std::size_t K = config.free_params.size();
        result.std_errors.assign(K, std::numeric_limits<double>::quiet_NaN());
        result.ci_lower.assign(K, std::numeric_limits<double>::quiet_NaN());
        result.ci_upper.assign(K, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < K; ++k) {
            if (!std::isfinite(se_t[k])) continue;
            const auto tr = detail::transform_for(config.free_params[k], config.family);
            result.std_errors[k] = std::fabs(tr.jacobian(t_hat[k])) * se_t[k];
            result.ci_lower[k] = tr.to_natural(t_hat[k] - 1.96 * se_t[k]);
            result.ci_upper[k] = tr.to_natural(t_hat[k] + 1.96 * se_t[k]);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Likelihood ratio test
// ---------------------------------------------------------------------------

struct LrResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;
};

inline LrResult lr_test(double loglik_unrestricted, double loglik_restricted, int df) {
    const double slack = 1e-6;
    double stat = 2.0 * (loglik_unrestricted - loglik_restricted);
    if (stat < -slack)
        throw std::invalid_argument(
            "lr_test: restricted log likelihood exceeds the unrestricted one");
    stat = std::max(stat, 0.0);
    return LrResult{stat, chi_square_sf(stat, df), df};
}

} // namespace ezddc
