// Command-line driver: solve, simulate, estimate, lr-test, check-contraction,
// counterfactual, replicate-bias-figure. Exit codes: 0 success, 1 input
// error, 2 numerical or convergence alarm.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ezddc/ccp.hpp"
#include "ezddc/counterfactual.hpp"
#include "ezddc/estimation.hpp"
#include "ezddc/io.hpp"
#include "ezddc/model.hpp"
#include "ezddc/panel.hpp"
#include "ezddc/solver.hpp"

namespace fs = std::filesystem;
using namespace ezddc;

namespace {

// Distinguishes numerical alarms (exit 2) from input errors (exit 1).
struct AlarmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::uint64_t seed = 0;
    int threads = 1;
    int s_draws = 2500;
    double tol = 1e-9;
    std::string out_dir;
};

void add_solver_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--seed", f.seed, "random seed (all draw streams derive from it)");
    cmd->add_option("--threads", f.threads, "worker threads for the inner solver")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--s-draws", f.s_draws, "simulation draws S per value iteration")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", f.tol, "solver convergence tolerance (utils scale)");
}

SolveConfig solve_config_from(const CommonFlags& f) {
    SolveConfig cfg;
    cfg.seed = f.seed;
    cfg.n_threads = f.threads;
    cfg.n_sim_eps = f.s_draws;
    cfg.tol_sup_norm = f.tol;
    return cfg;
}

fs::path ensure_out_dir(const std::string& dir) {
    if (dir.empty()) throw std::invalid_argument("--out directory is required");
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir);
    return p;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string value_function_csv(const std::vector<double>& values) {
    std::string out = "x_bin,value\n";
    char buf[64];
    for (std::size_t x = 0; x < values.size(); ++x) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", x, values[x]);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_solve(const std::string& config_path, const CommonFlags& flags,
              const std::string& start) {
    const std::string config_text = read_text_file(config_path);
    const BusModel model = model_from_json(json::parse(config_text));
    SolveConfig cfg = solve_config_from(flags);
    if (start == "lower") cfg.start = StartPoint::LowerBound;
    const SolveReport report = solve(model, cfg);

    const fs::path out = ensure_out_dir(flags.out_dir);
    json j = solve_report_to_json(report);
    j["manifest"] = run_manifest("solve", config_text, flags.seed);
    write_text_file((out / "value_function.csv").string(),
                    value_function_csv(report.fixed_point.values));
    write_text_file((out / "solve_report.json").string(), dump(j));
    if (!report.converged) {
        std::cerr << "solve: no convergence in " << report.iterations
                  << " iterations; residual " << report.residual_history.back() << "\n";
        return 2;
    }
    std::cout << "converged in " << report.iterations << " iterations\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const CommonFlags& flags, int buses,
                 int months) {
    const std::string config_text = read_text_file(config_path);
    const BusModel model = model_from_json(json::parse(config_text));
    SolveConfig cfg = solve_config_from(flags);
    cfg.seed = derive_seed(flags.seed, 1); // solve stream
    const SolveReport report = solve(model, cfg);
    if (!report.converged) throw AlarmError("simulate: value function did not converge");
    const PanelDataset panel =
        simulate_panel(model, report.fixed_point, buses, months, derive_seed(flags.seed, 2));

    const fs::path out = ensure_out_dir(flags.out_dir);
    write_text_file((out / "panel.csv").string(), panel_to_csv(panel));
    write_text_file((out / "panel.manifest.json").string(),
                    dump(run_manifest("simulate", config_text, flags.seed)));
    std::cout << "wrote " << panel.size() << " observations\n";
    return 0;
}

EstimationConfig apply_spec(EstimationConfig cfg, const std::string& spec) {
    if (spec == "nonseparable") {
        cfg.free_params = {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha, Param::Rho};
        cfg.separable_constraint = false;
    } else if (spec == "separable") {
        cfg.free_params = {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha};
        cfg.separable_constraint = true;
    } else if (spec == "rust-rev") {
        cfg.free_params = {Param::ThetaD, Param::ThetaX, Param::Sigma};
        cfg.separable_constraint = false;
        cfg.start.alpha = cfg.start.rho = 0.0; // separable risk-neutral
    } else if (spec == "rust-orig") {
        cfg.free_params = {Param::ThetaX, Param::Sigma};
        cfg.separable_constraint = false;
        cfg.start.theta_d = 0.0;
        cfg.start.alpha = cfg.start.rho = 0.0;
    } else if (spec != "custom") {
        throw std::invalid_argument("--spec must be one of nonseparable, separable, rust-rev, "
                                    "rust-orig, custom");
    }
    return cfg;
}

int cmd_estimate(const std::string& data_path, const std::string& config_path,
                 const std::string& spec, const CommonFlags& flags, bool seed_given,
                 bool threads_given) {
    const std::string config_text = read_text_file(config_path);
    EstimationConfig cfg = estimation_config_from_json(json::parse(config_text));
    cfg = apply_spec(cfg, spec);
    if (seed_given) cfg.solver.seed = flags.seed;
    if (threads_given) cfg.solver.n_threads = flags.threads;

    PanelDataset data = load_panel_csv(data_path);
    validate_panel(data, cfg.grid.n_bins);
    const EstimateResult result = fit(data, cfg);

    const fs::path out = ensure_out_dir(flags.out_dir);
    json j = estimate_result_to_json(result, cfg, spec);
    j["manifest"] = run_manifest("estimate", config_text, cfg.solver.seed);
    write_text_file((out / ("estimate_" + spec + ".json")).string(), dump(j));
    std::cout << "spec " << spec << ": loglik " << result.loglik << " after "
              << result.eval_count << " evaluations"
              << (result.converged ? "" : " (optimizer budget exhausted)") << "\n";
    return result.converged ? 0 : 2;
}

int cmd_lr_test(const std::string& unrestricted_path, const std::string& restricted_path) {
    const json ju = load_json_file(unrestricted_path);
    const json jr = load_json_file(restricted_path);
    std::vector<std::string> fu = ju.at("config").at("free_params").get<std::vector<std::string>>();
    std::vector<std::string> fr = jr.at("config").at("free_params").get<std::vector<std::string>>();
    for (const auto& name : fr)
        if (std::find(fu.begin(), fu.end(), name) == fu.end())
            throw std::invalid_argument("lr-test: specs are not nested ('" + name +
                                        "' is free only in the restricted model)");
    const int df = static_cast<int>(fu.size() - fr.size());
    const LrResult r = lr_test(ju.at("loglik").get<double>(), jr.at("loglik").get<double>(), df);
    std::printf("statistic=%.6g df=%d p_value=%.6g\n", r.statistic, r.df, r.p_value);
    return 0;
}

int cmd_check_contraction(const std::string& config_path, const CommonFlags& flags) {
    const std::string config_text = read_text_file(config_path);
    const BusModel model = model_from_json(json::parse(config_text));
    const auto margin = contraction_margin(model, 20000, flags.seed);

    const char* timing = margin.timing == Timing::Early   ? "early"
                         : margin.timing == Timing::Late ? "late"
                                                         : "indifferent";
    std::printf("timing_preference=%s\n", timing);
    if (margin.m_analytic)
        std::printf("analytic_bound=%.10g\n", *margin.m_analytic);
    else
        std::printf("analytic_bound=none\n");
    std::printf("numeric_margin=%.10g\n", margin.m_numeric);

    SolveConfig cfg = solve_config_from(flags);
    const UniquenessReport u = check_uniqueness(model, cfg);
    std::printf("dual_start_gap=%.6g\nunique=%s\n", u.gap, u.unique ? "yes" : "no");
    return 0;
}

BusModel model_from_estimate_file(const json& j) {
    const json& cfg = j.at("config");
    const json& theta = j.at("theta_hat");
    BusModel m;
    m.grid.n_bins = cfg.at("grid").at("n_bins").get<int>();
    m.grid.bin_width_miles = cfg.at("grid").at("bin_width_miles").get<double>();
    m.payoff.theta_d = theta.at("theta_d").get<double>();
    m.payoff.theta_x = theta.at("theta_x").get<double>();
    m.payoff.rc = cfg.at("rc").get<double>();
    m.payoff.sigma = theta.at("sigma").get<double>();
    m.transition = TransitionModel::from_rows(
        j.at("transition_rows").get<std::vector<std::vector<double>>>());
    m.shocks.distribution =
        shock_dist_from_string(cfg.at("shocks").at("distribution").get<std::string>());
    const Family family = family_from_string(cfg.at("family").get<std::string>());
    const double beta = cfg.at("beta").get<double>();
    m.prefs = family == Family::CaraEz
                  ? PreferenceSpec::cara(theta.at("alpha").get<double>(),
                                         theta.at("rho").get<double>(), beta)
                  : PreferenceSpec::crra(theta.at("alpha").get<double>(),
                                         theta.at("rho").get<double>(), beta);
    m.validate();
    return m;
}

int cmd_counterfactual(const std::string& config_path, const std::vector<std::string>& compare,
                       const CommonFlags& flags, double ce_tol, double scale_dollars,
                       bool scale_given) {
    const std::optional<double> scale =
        scale_given ? std::optional<double>(scale_dollars) : std::nullopt;
    const fs::path out = ensure_out_dir(flags.out_dir);
    SolveConfig cfg = solve_config_from(flags);
    try {
        if (!compare.empty()) {
            const json ja = load_json_file(compare[0]);
            const json jb = load_json_file(compare[1]);
            const CeComparison cmp =
                ce_comparison(model_from_estimate_file(ja), model_from_estimate_file(jb), cfg,
                              ce_tol);
            json j;
            j["a"] = ce_point_to_json(cmp.a);
            j["b"] = ce_point_to_json(cmp.b);
            j["ratio_b_over_a"] = cmp.ratio;
            j["manifest"] = run_manifest("counterfactual", compare[0] + "+" + compare[1],
                                         flags.seed);
            write_text_file((out / "ce_comparison.json").string(), dump(j));
            std::printf("ce_a=%.10g ce_b=%.10g ratio=%.6g\n", cmp.a.c_payment, cmp.b.c_payment,
                        cmp.ratio);
            return 0;
        }
        const std::string config_text = read_text_file(config_path);
        const BusModel model = model_from_json(json::parse(config_text));
        CePoint ce = certainty_equivalent(model, cfg, ce_tol, scale);
        json j = ce_point_to_json(ce);
        j["manifest"] = run_manifest("counterfactual", config_text, flags.seed);
        write_text_file((out / "ce.json").string(), dump(j));
        std::printf("c_payment=%.10g (baseline value %.10g)\n", ce.c_payment, ce.baseline_value);
        if (scale) std::printf("c_payment_dollars=%.6g\n", ce.c_payment * *scale);
        return 0;
    } catch (const std::runtime_error& e) {
        throw AlarmError(e.what()); // bracket / certification failures
    }
}

int cmd_replicate_bias_figure(const CommonFlags& flags, double step, int ccp_draws) {
    BusModel base = make_toy_model();
    SolveConfig cfg = solve_config_from(flags);
    cfg.seed = derive_seed(flags.seed, 1);
    const std::uint64_t ccp_seed = derive_seed(flags.seed, 2);
    const double rho = 0.5;

    std::string csv = "alpha,x_bin,ccp_separable,ccp_nonseparable\n";
    bool crossing_ok = true;
    char buf[128];
    for (double alpha = 0.2; alpha <= 0.8 + 1e-9; alpha += step) {
        BusModel sep = base, nonsep = base;
        sep.prefs = PreferenceSpec::cara(alpha, alpha, 0.9);
        nonsep.prefs = PreferenceSpec::cara(alpha, rho, 0.9);
        const SolveReport rs = solve(sep, cfg);
        const SolveReport rn = solve(nonsep, cfg);
        if (!rs.converged || !rn.converged)
            throw AlarmError("replicate-bias-figure: inner solve did not converge");
        const CcpTable ts = ccp(sep, rs.fixed_point, ccp_draws, ccp_seed);
        const CcpTable tn = ccp(nonsep, rn.fixed_point, ccp_draws, ccp_seed);
        for (int x = 0; x < base.grid.n_bins; ++x) {
            const double ps = ts.replace_prob[static_cast<std::size_t>(x)];
            const double pn = tn.replace_prob[static_cast<std::size_t>(x)];
            std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g\n", alpha, x, ps, pn);
            csv += buf;
            if (std::fabs(alpha - rho) < 1e-9) {
                const double se = std::sqrt(std::max(ps * (1.0 - ps), 1.0 / ccp_draws) /
                                            ccp_draws);
                if (std::fabs(ps - pn) > 3.0 * se) crossing_ok = false;
            }
        }
    }

    const fs::path out = ensure_out_dir(flags.out_dir);
    write_text_file((out / "bias_figure.csv").string(), csv);
    write_text_file((out / "bias_figure.manifest.json").string(),
                    dump(run_manifest("replicate-bias-figure", "toy", flags.seed)));
    if (!crossing_ok) {
        std::cerr << "replicate-bias-figure: curves fail to intersect at alpha = rho\n";
        return 2;
    }
    std::cout << "wrote bias_figure.csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic discrete choice with Epstein-Zin time preferences"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string config_path, data_path, start = "upper", spec = "custom";
    std::vector<std::string> compare;
    int buses = 100, months = 100, ccp_draws = 25000;
    double step = 0.05, ce_tol = 1e-6, scale_dollars = 1.0;

    auto* c_solve = app.add_subcommand("solve", "solve the value function fixed point");
    c_solve->add_option("--config", config_path, "model JSON")->required();
    c_solve->add_option("--out", flags.out_dir, "output directory")->required();
    c_solve->add_option("--start", start, "upper|lower start vector")
        ->check(CLI::IsMember({"upper", "lower"}));
    add_solver_flags(c_solve, flags);

    auto* c_sim = app.add_subcommand("simulate", "simulate a synthetic panel");
    c_sim->add_option("--config", config_path, "model JSON")->required();
    c_sim->add_option("--out", flags.out_dir, "output directory")->required();
    c_sim->add_option("--buses", buses, "number of buses")->check(CLI::PositiveNumber);
    c_sim->add_option("--months", months, "months per bus")->check(CLI::PositiveNumber);
    add_solver_flags(c_sim, flags);

    auto* c_est = app.add_subcommand("estimate", "nested fixed point maximum likelihood");
    c_est->add_option("--data", data_path, "panel CSV")->required();
    c_est->add_option("--config", config_path, "estimation config JSON")->required();
    c_est->add_option("--out", flags.out_dir, "output directory")->required();
    c_est->add_option("--spec", spec,
                      "nonseparable|separable|rust-rev|rust-orig|custom");
    auto* est_seed = c_est->add_option("--seed", flags.seed, "override the solver seed");
    auto* est_threads =
        c_est->add_option("--threads", flags.threads, "override solver threads");

    auto* c_lr = app.add_subcommand("lr-test", "likelihood ratio test of nested fits");
    c_lr->add_option("unrestricted", config_path, "unrestricted estimate JSON")->required();
    c_lr->add_option("restricted", data_path, "restricted estimate JSON")->required();

    auto* c_check = app.add_subcommand("check-contraction", "contraction certificates");
    c_check->add_option("--config", config_path, "model JSON")->required();
    add_solver_flags(c_check, flags);

    auto* c_cf = app.add_subcommand("counterfactual", "certainty-equivalent payment");
    c_cf->add_option("--config", config_path, "model JSON");
    c_cf->add_option("--compare", compare, "two estimate JSONs to compare")->expected(2);
    c_cf->add_option("--out", flags.out_dir, "output directory")->required();
    c_cf->add_option("--ce-tol", ce_tol, "indifference tolerance on the value at x=0");
    auto* scale_opt =
        c_cf->add_option("--scale-dollars", scale_dollars, "payoff-unit to dollar factor");
    add_solver_flags(c_cf, flags);

    auto* c_bias = app.add_subcommand("replicate-bias-figure",
                                      "separable vs nonseparable CCPs on the 3-state model");
    c_bias->add_option("--out", flags.out_dir, "output directory")->required();
    c_bias->add_option("--step", step, "alpha grid step")->check(CLI::PositiveNumber);
    c_bias->add_option("--ccp-draws", ccp_draws, "draws per CCP estimate")
        ->check(CLI::PositiveNumber);
    add_solver_flags(c_bias, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_solve->parsed()) return cmd_solve(config_path, flags, start);
        if (c_sim->parsed()) return cmd_simulate(config_path, flags, buses, months);
        if (c_est->parsed())
            return cmd_estimate(data_path, config_path, spec, flags, est_seed->count() > 0,
                                est_threads->count() > 0);
        if (c_lr->parsed()) return cmd_lr_test(config_path, data_path);
        if (c_check->parsed()) return cmd_check_contraction(config_path, flags);
        if (c_cf->parsed()) {
            if (compare.empty() && config_path.empty())
                throw std::invalid_argument("counterfactual: need --config or --compare");
            return cmd_counterfactual(config_path, compare, flags, ce_tol, scale_dollars,
                                      scale_opt->count() > 0);
        }
        if (c_bias->parsed()) return cmd_replicate_bias_figure(flags, step, ccp_draws);
    } catch (const AlarmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
