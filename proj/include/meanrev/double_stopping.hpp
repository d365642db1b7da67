#pragma once

#include <cmath>
#include <vector>

#include "params.hpp"
#include "root_find.hpp"
#include "special_fn.hpp"

namespace meanrev {

struct problem {
    model_params model;
    discount_spec disc;
    quad_config quad;

    void validate() const {
        model.validate();
        disc.validate();
        quad.validate();
    }
};

// (mu theta + r c) / (mu + r); the exit threshold lies strictly above it.
inline double l_star(const problem& pr) {
    return (pr.model.mu * pr.model.theta + pr.disc.r * pr.disc.c) / (pr.model.mu + pr.disc.r);
}

struct exit_solution {
    double b_star = 0.0;
    double K = 0.0;  // V = K F below b_star
};

// b* solves F(b) = (b - c) F'(b); bracketed rightward from max(L*, c).
inline exit_solution solve_exit(const problem& pr) {
    pr.validate();
    const auto& p = pr.model;
    const double c = pr.disc.c, r = pr.disc.r;
    const double sd = p.stationary_sd();
    auto phi = [&](double b) {
        return eval_F(b, r, p, pr.quad) - (b - c) * eval_F_d1(b, r, p, pr.quad);
    };
    const double lo = std::max(l_star(pr), c) + 1e-9 * sd;
    auto [ba, bb] = expand_bracket_right(phi, lo, sd, 24);
    exit_solution out;
    out.b_star = (ba == bb) ? ba : brent_root(phi, ba, bb);
    out.K = (out.b_star - c) / eval_F(out.b_star, r, p, pr.quad);
    if (!(out.b_star > l_star(pr)))
        throw solver_error("solve_exit: threshold did not exceed L*");
    return out;
}

inline double value_V(double x, const exit_solution& ex, const problem& pr) {
    if (x >= ex.b_star) return x - pr.disc.c;
    return ex.K * eval_F(x, pr.disc.r, pr.model, pr.quad);
}

inline double value_V_d1(double x, const exit_solution& ex, const problem& pr) {
    if (x >= ex.b_star) return 1.0;
    return ex.K * eval_F_d1(x, pr.disc.r, pr.model, pr.quad);
}

// Root of h_hat = V - x - c_hat; separates profitable-entry from the rest.
inline double entry_break_even(const problem& pr, const exit_solution& ex) {
    const double sd = pr.model.stationary_sd();
    auto hh = [&](double x) { return value_V(x, ex, pr) - x - pr.disc.c_hat; };
    double lo = pr.model.theta - 10.0 * sd;
    while (hh(lo) <= 0.0) {
        lo -= 4.0 * sd;
        if (lo < pr.model.theta - 30.0 * sd)
            throw solver_error("entry_break_even: no positive region found");
    }
    return brent_root(hh, lo, ex.b_star);
}

struct entry_solution {
    double d_star = 0.0;
    double Q_hat = 0.0;  // J = Q_hat * G_hat above d_star
    double d_bar = 0.0;
};

// d* solves G_hat(d)(V'(d) - 1) = G_hat'(d)(V(d) - d - c_hat) below the
// break-even point d_bar.
inline entry_solution solve_entry(const problem& pr, const exit_solution& ex) {
    pr.validate();
    const auto& p = pr.model;
    const double rh = pr.disc.r_hat, ch = pr.disc.c_hat;
    const double sd = p.stationary_sd();

    entry_solution out;
    out.d_bar = entry_break_even(pr, ex);

    auto alpha = [&](double d) {
        const double gh = eval_G(d, rh, p, pr.quad);
        const double gh1 = eval_G_d1(d, rh, p, pr.quad);
        return gh * (value_V_d1(d, ex, pr) - 1.0) -
               gh1 * (value_V(d, ex, pr) - d - ch);
    };

    double lo = p.theta - 10.0 * sd;
    const double hi = out.d_bar - 1e-7 * sd;
    for (int widen = 0;; ++widen) {
        try {
            auto [da, db] = scan_sign_change(alpha, lo, hi, 400);
            out.d_star = (da == db) ? da : brent_root(alpha, da, db);
            break;
        } catch (const solver_error&) {
            if (widen >= 2) throw;
            lo -= 6.0 * sd;
        }
    }
    out.Q_hat = (value_V(out.d_star, ex, pr) - out.d_star - ch) /
                eval_G(out.d_star, rh, p, pr.quad);
    if (!(out.d_star < ex.b_star))
        throw solver_error("solve_entry: ordering d* < b* violated");
    return out;
}

inline double value_J(double x, const exit_solution& ex, const entry_solution& en,
                      const problem& pr) {
    if (x <= en.d_star) return value_V(x, ex, pr) - x - pr.disc.c_hat;
    return en.Q_hat * eval_G(x, pr.disc.r_hat, pr.model, pr.quad);
}

// Diagnostic roots describing the shape of the transformed payoffs.
struct shape_roots {
    double x_star = 0.0;   // H minimizer image: G = (x - c) G'
    double b_under = 0.0;  // (L - r_hat) h_hat sign change inside continuation
};

inline shape_roots lemma_roots(const problem& pr, const exit_solution& ex) {
    const auto& p = pr.model;
    const double c = pr.disc.c, r = pr.disc.r;
    const double rh = pr.disc.r_hat, ch = pr.disc.c_hat;
    const double sd = p.stationary_sd();
    shape_roots out;

    auto gphi = [&](double x) {
        return eval_G(x, r, p, pr.quad) - (x - c) * eval_G_d1(x, r, p, pr.quad);
    };
    const double right = std::min(c, l_star(pr));
    const double left = std::min(p.theta - 12.0 * sd, right - 14.0 * sd);
    auto [xa, xb] = scan_sign_change(gphi, left, right, 400);
    out.x_star = (xa == xb) ? xa : brent_root(gphi, xa, xb);

    // (L - r_hat) applied to h_hat, written with LV = rV inside continuation
    auto rho = [&](double x) {
        return (r - rh) * value_V(x, ex, pr) + (p.mu + rh) * x - p.mu * p.theta + rh * ch;
    };
    auto [ua, ub] = scan_sign_change(rho, p.theta - 12.0 * sd, ex.b_star - 1e-9 * sd, 400);
    out.b_under = (ua == ub) ? ua : brent_root(rho, ua, ub);
    return out;
}

struct threshold_solution {
    problem pr;
    double L_star = 0.0;
    exit_solution exit;
    entry_solution entry;
    shape_roots roots;
};

inline threshold_solution solve_thresholds(const problem& pr) {
    threshold_solution sol;
    sol.pr = pr;
    sol.L_star = l_star(pr);
    sol.exit = solve_exit(pr);
    sol.entry = solve_entry(pr, sol.exit);
    sol.roots = lemma_roots(pr, sol.exit);
    return sol;
}

// Limiting thresholds when mu -> 0 with theta scaled away (driftless Brownian
// motion with volatility sigma): b* is closed form, d* solves a transcendental
// equation on (-inf, b*).
struct brownian_solution {
    double b_star = 0.0;
    double d_star = 0.0;
};

inline brownian_solution brownian_thresholds(double sigma, const discount_spec& d) {
    d.validate();
    if (!(sigma > 0.0)) throw input_error("brownian_thresholds: sigma must be positive");
    brownian_solution out;
    const double r = d.r, rh = d.r_hat;
    out.b_star = d.c + sigma / std::sqrt(2.0 * r);
    auto g = [&](double x) {
        return (1.0 + std::sqrt(rh / r)) *
                   std::exp(std::sqrt(2.0 * r) / sigma * (x - out.b_star)) -
               std::sqrt(2.0 * rh) / sigma * (x + d.c_hat) - 1.0;
    };
    const double step = sigma / std::sqrt(2.0 * r);
    double hi = out.b_star - 1e-12 * step, lo = hi - step;
    int tries = 0;
    while (!detail::opposite_signs(g(lo), g(hi))) {
        lo -= step * std::pow(2.0, tries++);
        if (tries > 40) throw solver_error("brownian_thresholds: no entry root found");
    }
    out.d_star = brent_root(g, lo, hi);
    return out;
}

// Transformed payoffs under y = psi(x): W reconstructs V, W_hat reconstructs J.
inline double eval_H(double y, const problem& pr) {
    const double x = psi_inverse(y, pr.disc.r, pr.model, pr.quad);
    return (x - pr.disc.c) / eval_G(x, pr.disc.r, pr.model, pr.quad);
}

inline double eval_W(double y, const exit_solution& ex, const problem& pr) {
    const double yb = psi(ex.b_star, pr.disc.r, pr.model, pr.quad);
    if (y <= yb) return ex.K * y;
    return eval_H(y, pr);
}

inline double eval_H_hat(double y, const exit_solution& ex, const problem& pr) {
    const double x = psi_inverse(y, pr.disc.r_hat, pr.model, pr.quad);
    return (value_V(x, ex, pr) - x - pr.disc.c_hat) /
           eval_G(x, pr.disc.r_hat, pr.model, pr.quad);
}

inline double eval_W_hat(double y, const exit_solution& ex, const entry_solution& en,
                         const problem& pr) {
    const double yd = psi(en.d_star, pr.disc.r_hat, pr.model, pr.quad);
    if (y <= yd) return eval_H_hat(y, ex, pr);
    return eval_H_hat(yd, ex, pr);
}

// Variational-inequality residual scan for a value function on a uniform grid.
// Derivatives are finite differences; points within two steps of a kink are
// excluded. Residuals are scaled by max(1, |rV| + |LV| + |payoff|) pointwise.
struct vi_report {
    double worst_negative = 0.0;   // most negative scaled residual seen
    double worst_compl = 0.0;      // largest scaled |min(rV - LV, V - payoff)|
    std::size_t n_checked = 0;
};

template <class Value, class Payoff>
vi_report vi_residuals(Value&& value, Payoff&& payoff, double lo, double hi, std::size_t n,
                       double discount_rate, const model_params& p,
                       const std::vector<double>& kinks) {
    if (n < 16) throw input_error("vi_residuals: grid too small");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = value(lo + h * static_cast<double>(i));

    vi_report rep;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        bool near_kink = false;
        for (double k : kinks)
            if (std::abs(x - k) <= 2.0 * h + 1e-15) near_kink = true;
        if (near_kink) continue;

        const double d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
        const double d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        const double gen = 0.5 * p.sigma * p.sigma * d2 + p.mu * (p.theta - x) * d1;
        const double res1 = discount_rate * v[i] - gen;
        const double res2 = v[i] - payoff(x);
        const double denom = std::max(1.0, std::abs(discount_rate * v[i]) + std::abs(gen) +
                                               std::abs(payoff(x)));
        const double m = std::min(res1, res2) / denom;
        rep.worst_negative = std::min({rep.worst_negative, res1 / denom, res2 / denom});
        rep.worst_compl = std::max(rep.worst_compl, std::abs(m));
        ++rep.n_checked;
    }
    return rep;
}

}  // namespace meanrev
