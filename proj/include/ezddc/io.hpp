#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ezddc/counterfactual.hpp"
#include "ezddc/estimation.hpp"
#include "ezddc/model.hpp"
#include "ezddc/solver.hpp"
#include "ezddc/version.hpp"

namespace ezddc {

using nlohmann::json; // std::map-backed: keys serialize in sorted order

namespace io_detail {

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const auto& a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw std::invalid_argument("config: unknown field '" + key + "' in " + where);
    }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw std::invalid_argument("config: missing field '" + key + "' in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: field '" + key + "' in " + where +
                                    " has the wrong type");
    }
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// Model config
// ---------------------------------------------------------------------------

inline ShockDist shock_dist_from_string(const std::string& s) {
    if (s == "standard_normal") return ShockDist::StandardNormal;
    if (s == "gumbel_standardized") return ShockDist::GumbelStandardized;
    throw std::invalid_argument("config: unknown shock distribution '" + s + "'");
}

inline std::string to_string(ShockDist d) {
    return d == ShockDist::StandardNormal ? "standard_normal" : "gumbel_standardized";
}

inline Family family_from_string(const std::string& s) {
    if (s == "cara_ez") return Family::CaraEz;
    if (s == "crra_ez") return Family::CrraEz;
    throw std::invalid_argument("config: unknown preference family '" + s + "'");
}

inline std::string to_string(Family f) { return f == Family::CaraEz ? "cara_ez" : "crra_ez"; }

inline BusModel model_from_json(const json& j) {
    io_detail::reject_unknown_keys(
        j, {"grid", "payoff", "transition", "shocks", "preferences"}, "model");
    BusModel m;
    {
        const json& g = io_detail::require<json>(j, "grid", "model");
        io_detail::reject_unknown_keys(g, {"n_bins", "bin_width_miles"}, "grid");
        m.grid.n_bins = io_detail::require<int>(g, "n_bins", "grid");
        m.grid.bin_width_miles = io_detail::require<double>(g, "bin_width_miles", "grid");
    }
    {
        const json& p = io_detail::require<json>(j, "payoff", "model");
        io_detail::reject_unknown_keys(p, {"theta_d", "theta_x", "rc", "sigma", "constant"},
                                       "payoff");
        m.payoff.theta_d = io_detail::require<double>(p, "theta_d", "payoff");
        m.payoff.theta_x = io_detail::require<double>(p, "theta_x", "payoff");
        m.payoff.rc = io_detail::require<double>(p, "rc", "payoff");
        m.payoff.sigma = io_detail::require<double>(p, "sigma", "payoff");
        m.payoff.constant = p.value("constant", 0.0);
    }
    {
        const json& t = io_detail::require<json>(j, "transition", "model");
        io_detail::reject_unknown_keys(t, {"rows"}, "transition");
        auto rows = io_detail::require<std::vector<std::vector<double>>>(t, "rows", "transition");
        if (static_cast<int>(rows.size()) != m.grid.n_bins)
            throw std::invalid_argument(
                "config: transition has " + std::to_string(rows.size()) +
                " rows but the grid has " + std::to_string(m.grid.n_bins) +
                " bins (first missing state " + std::to_string(rows.size()) + ")");
        m.transition = TransitionModel::from_rows(std::move(rows));
    }
    {
        const json& s = io_detail::require<json>(j, "shocks", "model");
        io_detail::reject_unknown_keys(s, {"distribution"}, "shocks");
        m.shocks.distribution = shock_dist_from_string(
            io_detail::require<std::string>(s, "distribution", "shocks"));
    }
    {
        const json& p = io_detail::require<json>(j, "preferences", "model");
        io_detail::reject_unknown_keys(p, {"family", "alpha", "rho", "beta"}, "preferences");
        m.prefs.family =
            family_from_string(io_detail::require<std::string>(p, "family", "preferences"));
        m.prefs.alpha = io_detail::require<double>(p, "alpha", "preferences");
        m.prefs.rho = io_detail::require<double>(p, "rho", "preferences");
        m.prefs.beta = io_detail::require<double>(p, "beta", "preferences");
    }
    m.validate();
    return m;
}

inline json model_to_json(const BusModel& m) {
    json j;
    j["grid"] = {{"n_bins", m.grid.n_bins}, {"bin_width_miles", m.grid.bin_width_miles}};
    j["payoff"] = {{"theta_d", m.payoff.theta_d},
                   {"theta_x", m.payoff.theta_x},
                   {"rc", m.payoff.rc},
                   {"sigma", m.payoff.sigma},
                   {"constant", m.payoff.constant}};
    j["transition"] = {{"rows", m.transition.rows()}};
    j["shocks"] = {{"distribution", to_string(m.shocks.distribution)}};
    j["preferences"] = {{"family", to_string(m.prefs.family)},
                        {"alpha", m.prefs.alpha},
                        {"rho", m.prefs.rho},
                        {"beta", m.prefs.beta}};
    return j;
}

// ---------------------------------------------------------------------------
// Estimation config / result
// ---------------------------------------------------------------------------

inline EstimationConfig estimation_config_from_json(const json& j) {
    io_detail::reject_unknown_keys(
        j,
        {"beta", "rc", "family", "free_params", "separable_constraint", "grid", "shocks",
         "start", "optimizer", "solver", "ccp_smoothing_temperature", "n_ccp_draws",
         "transition_min_obs", "transition_group_size"},
        "estimation config");
    EstimationConfig c;
    c.beta_fixed = j.value("beta", 0.9);
    c.rc_fixed = j.value("rc", 8.0);
    if (j.contains("family")) c.family = family_from_string(j.at("family").get<std::string>());
    if (j.contains("free_params")) {
        c.free_params.clear();
        for (const auto& name : j.at("free_params"))
            c.free_params.push_back(param_from_name(name.get<std::string>()));
    }
    c.separable_constraint = j.value("separable_constraint", false);
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        io_detail::reject_unknown_keys(g, {"n_bins", "bin_width_miles"}, "grid");
        c.grid.n_bins = io_detail::require<int>(g, "n_bins", "grid");
        c.grid.bin_width_miles = io_detail::require<double>(g, "bin_width_miles", "grid");
    }
    if (j.contains("shocks")) {
        const json& s = j.at("shocks");
        io_detail::reject_unknown_keys(s, {"distribution"}, "shocks");
        c.shocks.distribution = shock_dist_from_string(
            io_detail::require<std::string>(s, "distribution", "shocks"));
    }
    if (j.contains("start")) {
        const json& s = j.at("start");
        io_detail::reject_unknown_keys(s, {"theta_d", "theta_x", "sigma", "alpha", "rho"},
                                       "start");
        c.start.theta_d = s.value("theta_d", c.start.theta_d);
        c.start.theta_x = s.value("theta_x", c.start.theta_x);
        c.start.sigma = s.value("sigma", c.start.sigma);
        c.start.alpha = s.value("alpha", c.start.alpha);
        c.start.rho = s.value("rho", c.start.rho);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        io_detail::reject_unknown_keys(o, {"max_evals", "initial_simplex_scale", "f_tol"},
                                       "optimizer");
        c.optimizer.max_evals = o.value("max_evals", c.optimizer.max_evals);
        c.optimizer.initial_simplex_scale =
            o.value("initial_simplex_scale", c.optimizer.initial_simplex_scale);
        c.optimizer.f_tol = o.value("f_tol", c.optimizer.f_tol);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        io_detail::reject_unknown_keys(
            s, {"tol_sup_norm", "max_iters", "n_sim_eps", "seed", "n_mc_bounds", "n_threads"},
            "solver");
        c.solver.tol_sup_norm = s.value("tol_sup_norm", c.solver.tol_sup_norm);
        c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
        c.solver.n_sim_eps = s.value("n_sim_eps", c.solver.n_sim_eps);
        c.solver.seed = s.value("seed", c.solver.seed);
        c.solver.n_mc_bounds = s.value("n_mc_bounds", c.solver.n_mc_bounds);
        c.solver.n_threads = s.value("n_threads", c.solver.n_threads);
    }
    if (j.contains("ccp_smoothing_temperature"))
        c.ccp_smoothing_temperature = j.at("ccp_smoothing_temperature").get<double>();
    c.n_ccp_draws = j.value("n_ccp_draws", c.n_ccp_draws);
    c.transition_min_obs = j.value("transition_min_obs", c.transition_min_obs);
    c.transition_group_size = j.value("transition_group_size", c.transition_group_size);
    c.validate();
    return c;
}

inline json estimation_config_to_json(const EstimationConfig& c) {
    json j;
    j["beta"] = c.beta_fixed;
    j["rc"] = c.rc_fixed;
    j["family"] = to_string(c.family);
    std::vector<std::string> names;
    for (Param p : c.free_params) names.emplace_back(param_name(p));
    j["free_params"] = names;
    j["separable_constraint"] = c.separable_constraint;
    j["grid"] = {{"n_bins", c.grid.n_bins}, {"bin_width_miles", c.grid.bin_width_miles}};
    j["shocks"] = {{"distribution", to_string(c.shocks.distribution)}};
    j["start"] = {{"theta_d", c.start.theta_d},
                  {"theta_x", c.start.theta_x},
                  {"sigma", c.start.sigma},
                  {"alpha", c.start.alpha},
                  {"rho", c.start.rho}};
    j["optimizer"] = {{"max_evals", c.optimizer.max_evals},
                      {"initial_simplex_scale", c.optimizer.initial_simplex_scale},
                      {"f_tol", c.optimizer.f_tol}};
    // thread count is an execution detail, deliberately not echoed: outputs
    // must be byte-identical across thread counts
    j["solver"] = {{"tol_sup_norm", c.solver.tol_sup_norm},
                   {"max_iters", c.solver.max_iters},
                   {"n_sim_eps", c.solver.n_sim_eps},
                   {"seed", c.solver.seed},
                   {"n_mc_bounds", c.solver.n_mc_bounds}};
    if (c.ccp_smoothing_temperature) j["ccp_smoothing_temperature"] = *c.ccp_smoothing_temperature;
    j["n_ccp_draws"] = c.ccp_draws();
    j["transition_min_obs"] = c.transition_min_obs;
    j["transition_group_size"] = c.transition_group_size;
    return j;
}

inline json estimate_result_to_json(const EstimateResult& r, const EstimationConfig& config,
                                    const std::string& spec_name) {
    json j;
    j["spec"] = spec_name;
    json theta, se, ci;
    for (Param p :
         {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha, Param::Rho})
        theta[param_name(p)] = r.theta_hat.get(p);
    for (std::size_t k = 0; k < r.free_params.size(); ++k) {
        se[param_name(r.free_params[k])] = r.std_errors[k];
        ci[param_name(r.free_params[k])] = {r.ci_lower[k], r.ci_upper[k]};
    }
    j["theta_hat"] = theta;
    j["std_errors"] = se;
    j["ci95"] = ci;
    j["loglik"] = r.loglik;
    j["n_obs"] = r.n_obs;
    j["converged"] = r.converged;
    j["eval_count"] = r.eval_count;
    j["draw_block_fingerprint"] = r.draw_fingerprint;
    j["transition_rows"] = r.transition.rows();
    j["config"] = estimation_config_to_json(config);
    return j;
}

inline json solve_report_to_json(const SolveReport& r) {
    json j;
    j["values"] = r.fixed_point.values;
    j["iterations"] = r.iterations;
    j["residual_history"] = r.residual_history;
    j["converged"] = r.converged;
    j["empirical_lipschitz"] = r.empirical_lipschitz;
    j["bounds"] = {{"v_lower", r.bounds.v_lower}, {"v_star", r.bounds.v_star}};
    j["draw_block_fingerprint"] = r.draw_fingerprint;
    j["model_fingerprint"] = r.fixed_point.fingerprint;
    return j;
}

inline json ce_point_to_json(const CePoint& p) {
    json j;
    j["c_payment"] = p.c_payment;
    j["baseline_value"] = p.baseline_value;
    j["counterfactual_value"] = p.counterfactual_value;
    if (p.scale_to_dollars) {
        j["scale_to_dollars"] = *p.scale_to_dollars;
        j["c_payment_dollars"] = p.c_payment * *p.scale_to_dollars;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Files and the run manifest
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << content;
}

inline json load_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
    }
}

// ISO-8601 UTC timestamp. Honors SOURCE_DATE_EPOCH so seeded runs can be
// byte-reproducible.
inline std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json run_manifest(const std::string& command, const std::string& config_text,
                         std::uint64_t seed) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_text.data(), config_text.size())));
    json j;
    j["command"] = command;
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["library_version"] = kVersion;
    j["created_utc"] = utc_timestamp();
    return j;
}

} // namespace ezddc
