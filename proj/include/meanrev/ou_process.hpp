#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "params.hpp"
#include "rng.hpp"
#include "root_find.hpp"

namespace meanrev {

// Uniformly spaced observations; dates are carried through when present.
struct price_series {
    std::vector<std::string> dates;
    std::vector<double> values;
    double dt = 1.0 / 252.0;

    void validate() const {
        if (values.size() < 2) throw input_error("price_series: need at least two observations");
        if (!(dt > 0.0)) throw input_error("price_series: dt must be positive");
        if (!dates.empty() && dates.size() != values.size())
            throw input_error("price_series: date column length mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw input_error("price_series: non-finite value");
    }
};

struct calibration_result {
    model_params params;
    double sigma_tilde = 0.0;  // conditional sd of one transition
    double avg_loglik = 0.0;
    bool refined = false;
};

struct beta_row {
    double b = 0.0;
    double avg_loglik = 0.0;
    bool ok = false;
};

struct beta_selection {
    double b_star = 0.0;
    calibration_result fit;
    std::vector<beta_row> curve;
};

// Exact transition sampling: x_i = theta + (x_{i-1} - theta) e^{-mu dt} + sd Z_i.
inline price_series simulate_exact(const model_params& p, double x0, double dt,
                                   std::size_t n_steps, std::uint64_t seed) {
    p.validate();
    if (!(dt > 0.0)) throw input_error("simulate_exact: dt must be positive");
    const double a = std::exp(-p.mu * dt);
    const double sd = p.sigma * std::sqrt((1.0 - a * a) / (2.0 * p.mu));
    normal_source z(path_seed(seed, 0));
    price_series out;
    out.dt = dt;
    out.values.resize(n_steps + 1);
    out.values[0] = x0;
    for (std::size_t i = 1; i <= n_steps; ++i)
        out.values[i] = p.theta + (out.values[i - 1] - p.theta) * a + sd * z();
    return out;
}

// Average log-likelihood of the exact discretization, per observation.
inline double avg_log_likelihood(const price_series& s, const model_params& p) {
    s.validate();
    p.validate();
    const double a = std::exp(-p.mu * s.dt);
    const double var = p.sigma * p.sigma * (1.0 - a * a) / (2.0 * p.mu);
    if (!(var > 0.0) || !std::isfinite(var))
        throw calibration_error("avg_log_likelihood: transition variance underflowed");
    const std::size_t n = s.values.size() - 1;
    double ssr = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double e = s.values[i] - s.values[i - 1] * a - p.theta * (1.0 - a);
        ssr += e * e;
    }
    return -0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(var) -
           ssr / (2.0 * static_cast<double>(n) * var);
}

namespace detail {

struct ar1_stats {
    double mx, my, sxx, sxy, n;
};

inline ar1_stats ar1_moments(const std::vector<double>& v) {
    const std::size_t n = v.size() - 1;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += v[i];
        my += v[i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (v[i] - mx) * (v[i] - mx);
        sxy += (v[i] - mx) * (v[i + 1] - my);
    }
    return {mx, my, sxx, sxy, static_cast<double>(n)};
}

// Profile average log-likelihood as a function of the AR(1) slope.
inline double profile_loglik(const std::vector<double>& v, const ar1_stats& st, double a) {
    const std::size_t n = v.size() - 1;
    const double m = st.my - a * st.mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = v[i + 1] - a * v[i] - m;
        ssr += e * e;
    }
    const double var = ssr / st.n;
    if (!(var > 0.0)) return -1e300;
    return -0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(var) - 0.5;
}

}  // namespace detail

// Closed-form maximum likelihood fit via the AR(1) regression, followed by a
// golden-section pass over the profile likelihood in the slope.
inline calibration_result fit_mle(const price_series& s) {
    s.validate();
    if (s.values.size() < 4)
        throw calibration_error("fit_mle: need at least three transitions");
    const auto st = detail::ar1_moments(s.values);
    if (!(st.sxx > 0.0))
        throw calibration_error("fit_mle: series has no variation");
    double a = st.sxy / st.sxx;
    if (!(a > 0.0) || !(a < 1.0))
        throw calibration_error("fit_mle: fitted slope outside (0, 1); no positive mean reversion");

    const double base = detail::profile_loglik(s.values, st, a);
    const double w = 0.5 * std::min(a, 1.0 - a);
    auto [a_ref, ll_ref] =
        golden_max([&](double aa) { return detail::profile_loglik(s.values, st, aa); },
                   a - w, a + w, 1e-14);
    bool refined = false;
    if (ll_ref > base + 1e-12 && a_ref > 0.0 && a_ref < 1.0) {
        a = a_ref;
        refined = true;
    }

    const double m = st.my - a * st.mx;
    const std::size_t n = s.values.size() - 1;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = s.values[i + 1] - a * s.values[i] - m;
        ssr += e * e;
    }
    const double var = ssr / st.n;
    if (!(var > 0.0))
        throw calibration_error("fit_mle: zero residual variance");

    calibration_result out;
    out.params.theta = m / (1.0 - a);
    out.params.mu = -std::log(a) / s.dt;
    out.params.sigma = std::sqrt(var * 2.0 * out.params.mu / (1.0 - a * a));
    out.sigma_tilde = std::sqrt(var);
    out.refined = refined;
    out.params.validate();
    out.avg_loglik = avg_log_likelihood(s, out.params);
    return out;
}

// Spread X_i = (A / S1_0) S1_i - (B / S2_0) S2_i from two aligned price series.
inline price_series build_spread(const price_series& s1, const price_series& s2,
                                 double a_weight, double b_weight) {
    s1.validate();
    s2.validate();
    if (s1.values.size() != s2.values.size())
        throw input_error("build_spread: series lengths differ");
    if (s1.dt != s2.dt) throw input_error("build_spread: series spacing differs");
    if (!s1.dates.empty() && !s2.dates.empty() && s1.dates != s2.dates)
        throw input_error("build_spread: date columns disagree");
    if (!(s1.values[0] > 0.0) || !(s2.values[0] > 0.0))
        throw input_error("build_spread: initial prices must be positive");
    price_series out;
    out.dt = s1.dt;
    out.dates = s1.dates.empty() ? s2.dates : s1.dates;
    const double wa = a_weight / s1.values[0];
    const double wb = b_weight / s2.values[0];
    out.values.reserve(s1.values.size());
    for (std::size_t i = 0; i < s1.values.size(); ++i)
        out.values.push_back(wa * s1.values[i] - wb * s2.values[i]);
    return out;
}

// Scan the short-leg weight over b_grid, fit each spread, keep the likelihood
// maximizer. Ties resolve toward smaller B; failed fits are recorded and skipped.
inline beta_selection select_beta_star(const price_series& s1, const price_series& s2,
                                       double a_weight, const std::vector<double>& b_grid) {
    if (b_grid.empty()) throw input_error("select_beta_star: empty grid");
    beta_selection out;
    out.curve.reserve(b_grid.size());
    bool any = false;
    for (double b : b_grid) {
        beta_row row;
        row.b = b;
        try {
            const auto fit = fit_mle(build_spread(s1, s2, a_weight, b));
            row.avg_loglik = fit.avg_loglik;
            row.ok = true;
            if (!any || fit.avg_loglik > out.fit.avg_loglik) {
                any = true;
                out.b_star = b;
                out.fit = fit;
            }
        } catch (const solver_error&) {
            row.avg_loglik = std::nan("");
        } catch (const input_error&) {
            row.avg_loglik = std::nan("");
        }
        out.curve.push_back(row);
    }
    if (!any) throw calibration_error("select_beta_star: every grid point failed to fit");
    return out;
}

}  // namespace meanrev
