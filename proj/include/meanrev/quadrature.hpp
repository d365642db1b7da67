#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "params.hpp"

namespace meanrev {

struct quad_result {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

namespace detail {

// Gauss-Kronrod 15(7) rule on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15(F&& f, double a, double b, double& value, double& error) {
    const double h = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * gk_nodes[i];
        double fv;
        if (i == 7) {
            fv = f(mid);
            resk += gk_wk[7] * fv;
            resg += gk_wg[3] * fv;
        } else {
            fv = f(mid - dx) + f(mid + dx);
            resk += gk_wk[i] * fv;
            if (i % 2 == 1) resg += gk_wg[i / 2] * fv;
        }
    }
    value = resk * h;
    error = std::abs((resk - resg) * h);
    // sharpen the raw G7/K15 gap the usual way
    const double scale = std::abs(value) + 1e-300;
    if (error > 0.0) error = scale * std::pow(std::min(1.0, 200.0 * error / scale), 1.5);
}

struct panel {
    double a, b, value, error;
};

}  // namespace detail

// Worst-panel-first adaptive Gauss-Kronrod integration over [a, b].
template <class F>
quad_result integrate_adaptive(F&& f, double a, double b, const quad_config& cfg = {}) {
    cfg.validate();
    if (!(b > a)) return {0.0, 0.0, 0};

    std::vector<detail::panel> panels;
    panels.reserve(64);
    detail::panel p0{a, b, 0.0, 0.0};
    detail::gk15(f, a, b, p0.value, p0.error);
    panels.push_back(p0);

    double total = p0.value, err = p0.error;
    while (static_cast<int>(panels.size()) < cfg.max_panels) {
        const double goal = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
        if (err <= goal) break;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;
        detail::panel parent = panels[worst];
        const double m = 0.5 * (parent.a + parent.b);
        detail::panel left{parent.a, m, 0.0, 0.0}, right{m, parent.b, 0.0, 0.0};
        detail::gk15(f, left.a, left.b, left.value, left.error);
        detail::gk15(f, right.a, right.b, right.value, right.error);
        total += left.value + right.value - parent.value;
        err += left.error + right.error - parent.error;
        panels[worst] = left;
        panels.push_back(right);
    }

    const double goal = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    if (err > goal)
        throw quadrature_error("integrate_adaptive: tolerance not met", err);
    return {total, err, static_cast<int>(panels.size())};
}

}  // namespace meanrev
