#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "params.hpp"

namespace meanrev {

struct root_config {
    double x_tol = 1e-12;
    double f_tol = 0.0;  // 0: rely on x_tol alone
    int max_iter = 200;
};

namespace detail {

inline bool opposite_signs(double fa, double fb) {
    return (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0);
}

}  // namespace detail

// Brent's method on a sign-changing bracket [a, b].
template <class F>
double brent_root(F&& f, double a, double b, const root_config& cfg = {}) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (!detail::opposite_signs(fa, fb))
        throw solver_error("brent_root: bracket does not straddle a sign change");

    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * cfg.x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0 || std::abs(fb) <= cfg.f_tol) return b;

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, rr = fb / fc;
                p = s * (2.0 * m * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
    }
    throw solver_error("brent_root: iteration limit reached");
}

// Scan [lo, hi] on n+1 equally spaced points, return the first sign-change panel.
template <class F>
std::pair<double, double> scan_sign_change(F&& f, double lo, double hi, int n = 200) {
    double x0 = lo, f0 = f(lo);
    if (f0 == 0.0) return {lo, lo};
    for (int i = 1; i <= n; ++i) {
        const double x1 = lo + (hi - lo) * static_cast<double>(i) / n;
        const double f1 = f(x1);
        if (f1 == 0.0) return {x1, x1};
        if (detail::opposite_signs(f0, f1)) return {x0, x1};
        x0 = x1;
        f0 = f1;
    }
    throw solver_error("scan_sign_change: no sign change on the scanned interval");
}

// Expand [x0, x0 + step] rightward by doubling until f changes sign.
template <class F>
std::pair<double, double> expand_bracket_right(F&& f, double x0, double step, int max_doublings = 60) {
    double lo = x0, flo = f(lo);
    if (flo == 0.0) return {lo, lo};
    double w = step;
    for (int i = 0; i < max_doublings; ++i) {
        const double hi = lo + w;
        const double fhi = f(hi);
        if (fhi == 0.0) return {hi, hi};
        if (detail::opposite_signs(flo, fhi)) return {lo, hi};
        w *= 2.0;
    }
    throw solver_error("expand_bracket_right: no sign change found");
}

// Golden-section maximization of f on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double x_tol = 1e-10, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

}  // namespace meanrev
