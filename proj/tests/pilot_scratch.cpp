// pilot for the recovery study settings, not part of the suite
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ezddc/ccp.hpp"
#include "ezddc/estimation.hpp"

using namespace ezddc;
using clk = std::chrono::steady_clock;

int main(int argc, char** argv) {
    const int r0 = argc > 1 ? std::atoi(argv[1]) : 0;
    const int r1 = argc > 2 ? std::atoi(argv[2]) : 2;
    BusModel m;
    m.grid = StateGrid{130, 3000.0};
    m.payoff = PayoffParams{0.05, 0.10, 8.0, 1.6, 0.0};
    std::vector<std::vector<double>> rows;
    for (int x = 0; x < 130; ++x) {
        const double t = std::min(1.0, x / 80.0);
        const double mean = 2.7 - 1.8 * t;
        const double spread = 1.4 - 0.95 * t;
        std::vector<double> w(6);
        double total = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double z = (k - mean) / spread;
            w[k] = std::exp(-0.5 * z * z);
            total += w[k];
        }
        for (double& p : w) p /= total;
        rows.push_back(w);
    }
    m.transition = TransitionModel::from_rows(rows);
    m.shocks = ShockSpec{ShockDist::StandardNormal};
    m.prefs = PreferenceSpec::cara(0.10, 0.55, 0.9);
    const Theta truth{0.05, 0.10, 1.6, 0.10, 0.55};
    const Param ps[] = {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha, Param::Rho};

    for (int r = r0; r < r1; ++r) {
        const auto t0 = clk::now();
        SolveConfig dgp_cfg;
        dgp_cfg.n_sim_eps = 8192;
        dgp_cfg.seed = derive_seed(9000, static_cast<std::uint64_t>(r));
        dgp_cfg.tol_sup_norm = 1e-8;
        dgp_cfg.n_threads = 2;
        const SolveReport dgp = solve(m, dgp_cfg);
        const PanelDataset data = simulate_panel(m, dgp.fixed_point, 200, 100,
                                                 derive_seed(4000, static_cast<std::uint64_t>(r)));

        EstimationConfig cfg;
        cfg.beta_fixed = 0.9;
        cfg.rc_fixed = 8.0;
        cfg.family = Family::CaraEz;
        cfg.grid = m.grid;
        cfg.shocks = m.shocks;
        cfg.free_params = {Param::ThetaD, Param::ThetaX, Param::Sigma, Param::Alpha, Param::Rho};
        cfg.start = Theta{0.03, 0.07, 1.0, 0.15, 0.15};
        cfg.solver.n_sim_eps = 1024;
        cfg.solver.tol_sup_norm = 1e-6;
        cfg.solver.max_iters = 600;
        cfg.solver.seed = derive_seed(7000, static_cast<std::uint64_t>(r));
        cfg.solver.n_threads = 2;
        cfg.optimizer.max_evals = 260;
        cfg.n_ccp_draws = 8192;
        cfg.optimizer.f_tol = 1e-5;
        const EstimateResult res = fit(data, cfg);
        const double secs = std::chrono::duration<double>(clk::now() - t0).count();
        std::printf("rep %d: %.0fs evals=%d conv=%d\n", r, secs, res.eval_count,
                    res.converged ? 1 : 0);
        for (std::size_t k = 0; k < 5; ++k) {
            const bool hit = truth.get(ps[k]) >= res.ci_lower[k] &&
                             truth.get(ps[k]) <= res.ci_upper[k];
            std::printf("   %-8s hat=%8.4f true=%.3f ci=[%8.4f, %8.4f] %s\n",
                        param_name(ps[k]), res.theta_hat.get(ps[k]), truth.get(ps[k]),
                        res.ci_lower[k], res.ci_upper[k], hit ? "COVER" : "MISS");
        }
        std::fflush(stdout);
    }
    return 0;
}
