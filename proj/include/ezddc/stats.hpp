#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace ezddc {

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sd_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace detail {

// Regularized incomplete gamma functions P(a,x), Q(a,x) via series /
// continued fraction (Lentz). Only small `a` (df/2) is ever needed.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Upper tail of the chi-square distribution with `df` degrees of freedom.
inline double chi_square_sf(double x, int df) {
    if (df < 0) throw std::invalid_argument("chi_square_sf: negative df");
    if (x < 0.0) return 1.0;
    if (df == 0) return x <= 1e-12 ? 1.0 : 0.0;
    const double a = 0.5 * df;
    const double xx = 0.5 * x;
    if (xx == 0.0) return 1.0;
    if (xx < a + 1.0) return 1.0 - detail::gamma_p_series(a, xx);
    return detail::gamma_q_contfrac(a, xx);
}

} // namespace ezddc
