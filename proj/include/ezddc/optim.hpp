#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ezddc {

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;
};

// Classic Nelder-Mead simplex MAXIMIZER. Convergence is declared when the
// simplex function spread falls below f_tol. Objective values of -inf are
// treated as very bad vertices, which keeps reflections away from
// inadmissible regions.
inline NelderMeadResult nelder_mead_maximize(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, double step, double f_tol, int max_evals) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead_maximize: empty start");

    NelderMeadResult out;
    auto eval = [&](const std::vector<double>& x) {
        ++out.evals;
        const double f = objective(x);
        return std::isfinite(f) ? f : -1e300;
    };

    std::vector<std::vector<double>> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    fs[0] = eval(x0);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i + 1][i] += step;
        fs[i + 1] = eval(xs[i + 1]);
    }

    const double a_reflect = 1.0, a_expand = 2.0, a_contract = 0.5, a_shrink = 0.5;
    std::vector<std::size_t> order(n + 1);
    while (out.evals < max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fs[a] > fs[b]; });

        const std::size_t best = order[0], worst = order[n],
                          second_worst = order[n - 1];
        if (fs[best] - fs[worst] < f_tol) {
            out.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += xs[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto along = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k)
                x[k] = centroid[k] + t * (centroid[k] - xs[worst][k]);
            return x;
        };

        const std::vector<double> xr = along(a_reflect);
        const double fr = eval(xr);
        if (fr > fs[second_worst] && fr <= fs[best]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else if (fr > fs[best]) {
            const std::vector<double> xe = along(a_expand);
            const double fe = eval(xe);
            if (fe > fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else {
            const std::vector<double> xc = along(fr > fs[worst] ? a_contract : -a_contract);
            const double fc = eval(xc);
            if (fc > std::max(fr, fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k)
                        xs[i][k] = xs[best][k] + a_shrink * (xs[i][k] - xs[best][k]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }

    const std::size_t best = static_cast<std::size_t>(
        std::max_element(fs.begin(), fs.end()) - fs.begin());
    out.x = xs[best];
    out.f = fs[best];
    return out;
}

} // namespace ezddc
