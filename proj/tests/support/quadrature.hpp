#pragma once

#include <cmath>
#include <functional>

namespace nowcast::test_support {

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth, int min_depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || (min_depth <= 0 && std::abs(delta) <= 15.0 * tol)) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, min_depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, min_depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b] with Richardson correction. The first
/// `min_depth` bisections are unconditional so narrow features are not skipped.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                               int max_depth = 50, int min_depth = 6) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, min_depth);
}

/// Integral over (-inf, x] through the substitution t = x - u / (1 - u), u in [0, 1).
inline double integrate_left_tail(const std::function<double(double)>& f, double x, double tol = 1e-12) {
    auto g = [&](double u) {
        if (u >= 1.0) return 0.0;
        const double w = 1.0 - u;
        return f(x - u / w) / (w * w);
    };
    return adaptive_simpson(g, 0.0, 1.0 - 1e-12, tol);
}

}  // namespace nowcast::test_support
