#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>

namespace hawkes {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature to absolute tolerance. The initial interval is
// split into panels so localized features (steps, narrow bumps) are not missed
// by the first coarse estimate.
template <typename F>
    requires std::invocable<F&, double>
double integrate(const F& f, double a, double b, double abs_tol = 1e-8,
                 std::size_t panels = 16, int max_depth = 32) {
    if (!(b > a)) return 0.0;
    if (panels == 0) panels = 1;
    const double h = (b - a) / static_cast<double>(panels);
    const double panel_tol = abs_tol / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double x0 = a + h * static_cast<double>(i);
        const double x1 = (i + 1 == panels) ? b : x0 + h;
        const double xm = 0.5 * (x0 + x1);
        const double f0 = f(x0);
        const double fm = f(xm);
        const double f1 = f(x1);
        const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += detail::adaptive_simpson_rec(f, x0, x1, f0, fm, f1, whole, panel_tol, max_depth);
    }
    return total;
}

} // namespace hawkes
