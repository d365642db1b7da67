#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "params.hpp"

namespace meanrev {

// Smallest non-negative concave majorant of discrete points on [0, inf) that
// pass through the origin. On this domain the majorant is non-decreasing, so
// it is the upper convex hull of {(0,0)} union the points, extended flat to
// the right of the hull peak.
//
// Inputs must be sorted strictly increasing in y with y > 0. Returns the
// majorant values at the input points plus the contact flags (hull touches the
// original point).
struct majorant_result {
    std::vector<double> values;
    std::vector<bool> contact;
    double peak = 0.0;  // height of the flat extension
};

inline majorant_result concave_majorant_nonneg(const std::vector<double>& y,
                                               const std::vector<double>& h,
                                               double contact_tol = 1e-10) {
    if (y.size() != h.size()) throw input_error("concave_majorant_nonneg: size mismatch");
    if (y.empty()) throw input_error("concave_majorant_nonneg: empty input");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0) || !std::isfinite(y[i]) || !std::isfinite(h[i]))
            throw input_error("concave_majorant_nonneg: y must be positive and finite");
        if (i && !(y[i] > y[i - 1]))
            throw input_error("concave_majorant_nonneg: y must be strictly increasing");
    }

    const std::size_t n = y.size();
    // clip below at zero, prepend the origin
    std::vector<double> hy(n + 1), hx(n + 1);
    hx[0] = 0.0;
    hy[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hx[i + 1] = y[i];
        hy[i + 1] = std::max(h[i], 0.0);
    }

    // upper hull, left to right, only up to the running maximum: beyond the
    // global peak the majorant is the constant peak value
    std::size_t peak_idx = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (hy[i] >= hy[peak_idx]) peak_idx = i;

    std::vector<std::size_t> hull;
    hull.push_back(0);
    for (std::size_t i = 1; i <= peak_idx; ++i) {
        while (hull.size() >= 2) {
            const std::size_t j = hull[hull.size() - 1], k = hull[hull.size() - 2];
            const double cross = (hx[j] - hx[k]) * (hy[i] - hy[k]) -
                                 (hx[i] - hx[k]) * (hy[j] - hy[k]);
            if (cross >= 0.0) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }

    majorant_result out;
    out.values.resize(n);
    out.contact.assign(n, false);
    out.peak = hy[peak_idx];

    std::size_t seg = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        double w;
        if (i >= peak_idx) {
            w = out.peak;
        } else {
            while (seg + 1 < hull.size() && hx[hull[seg + 1]] < hx[i]) ++seg;
            const std::size_t j = hull[seg], k = hull[std::min(seg + 1, hull.size() - 1)];
            if (hull[seg] == i || k == i) {
                w = hy[i];
            } else if (hx[k] > hx[j]) {
                const double t = (hx[i] - hx[j]) / (hx[k] - hx[j]);
                w = hy[j] + t * (hy[k] - hy[j]);
            } else {
                w = hy[j];
            }
        }
        w = std::max(w, hy[i]);
        out.values[i - 1] = w;
        const double scale = std::max({1.0, std::abs(w), std::abs(hy[i])});
        out.contact[i - 1] = (w - hy[i]) <= contact_tol * scale && h[i - 1] >= -contact_tol * scale;
    }
    return out;
}

}  // namespace meanrev
