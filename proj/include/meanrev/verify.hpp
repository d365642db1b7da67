#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "double_stopping.hpp"
#include "mc_oracle.hpp"
#include "params.hpp"
#include "stoploss.hpp"

namespace meanrev {

struct check_result {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double measure = 0.0;    // what was observed
    double threshold = 0.0;  // what it was compared against
    std::string note;
};

struct verify_options {
    std::optional<double> stop_loss;
    bool run_mc = true;
    mc_config mc{.n_paths = 2000, .dt = 0.0, .horizon_eps = 1e-6, .seed = 7};
    std::size_t vi_grid = 2001;
    double vi_tol = 1e-4;
    double paste_tol = 1e-5;
    double b_star_shift = 0.0;  // test hook: fractional perturbation of b*
};

inline bool all_passed(const std::vector<check_result>& checks) {
    for (const auto& c : checks)
        if (!c.skipped && !c.passed) return false;
    return true;
}

namespace detail {

inline check_result bounded(std::string name, double measure, double threshold,
                            std::string note = {}) {
    check_result c;
    c.name = std::move(name);
    c.measure = measure;
    c.threshold = threshold;
    c.passed = std::isfinite(measure) && std::abs(measure) <= threshold;
    c.note = std::move(note);
    return c;
}

inline check_result predicate(std::string name, bool ok, std::string note = {}) {
    check_result c;
    c.name = std::move(name);
    c.passed = ok;
    c.measure = ok ? 1.0 : 0.0;
    c.threshold = 1.0;
    c.note = std::move(note);
    return c;
}

inline check_result skipped(std::string name, std::string note) {
    check_result c;
    c.name = std::move(name);
    c.skipped = true;
    c.note = std::move(note);
    return c;
}

// one-sided slope by two-step Richardson, h on the side given by sign
template <class F>
double one_sided_slope(F&& f, double x, double h) {
    const double f0 = f(x);
    const double s1 = (f0 - f(x - h)) / h;
    const double s2 = (f0 - f(x - 0.5 * h)) / (0.5 * h);
    return 2.0 * s2 - s1;
}

}  // namespace detail

// Full invariant and oracle sweep for one configuration. MC checks are sized
// by opts.mc; they are the slow part and can be disabled.
inline std::vector<check_result> run_verification(const problem& pr, const verify_options& opts) {
    pr.validate();
    std::vector<check_result> out;
    const auto& p = pr.model;
    const auto& d = pr.disc;
    const double sd = p.stationary_sd();

    // tighter quadrature for derivative-sensitive checks
    problem tight = pr;
    tight.quad.abs_tol = std::min(pr.quad.abs_tol, 1e-13);
    tight.quad.rel_tol = std::min(pr.quad.rel_tol, 1e-12);

    // resolvent identities
    {
        double worst = 0.0;
        for (double z : {-2.0, -0.5, 0.3, 1.7}) {
            const double x = p.theta + z * sd;
            const double fv = eval_F(2.0 * p.theta - x, d.r, p, pr.quad);
            const double gv = eval_G(x, d.r, p, pr.quad);
            worst = std::max(worst, std::abs(fv - gv) / std::max(1.0, std::abs(gv)));
        }
        out.push_back(detail::bounded("reflection_identity", worst, 1e-12));
    }
    for (auto [name, rate] : {std::pair<const char*, double>{"gamma_identity_r", d.r},
                              {"gamma_identity_rhat", d.r_hat}}) {
        const double s = rate / p.mu;
        const double closed = std::exp((0.5 * s - 1.0) * std::log(2.0) + std::lgamma(0.5 * s));
        const double quad = eval_F(p.theta, rate, p, pr.quad);
        out.push_back(detail::bounded(name, (quad - closed) / closed, 1e-7));
    }
    {
        bool mono = true;
        double prev = -1.0;
        for (int i = 0; i <= 40; ++i) {
            const double x = p.theta + (-4.0 + 0.2 * i) * sd;
            const double v = psi(x, d.r, p, pr.quad);
            if (v <= prev) mono = false;
            prev = v;
        }
        out.push_back(detail::predicate("psi_monotone", mono));
        double worst = 0.0;
        for (double z : {-1.5, 0.0, 2.0}) {
            const double x = p.theta + z * sd;
            const double y = psi(x, d.r, p, pr.quad);
            worst = std::max(worst, std::abs(psi_inverse(y, d.r, p, pr.quad) - x) / sd);
        }
        out.push_back(detail::bounded("psi_inverse_roundtrip", worst, 1e-8));
    }

    // thresholds without stop-loss
    threshold_solution sol;
    try {
        sol = solve_thresholds(pr);
    } catch (const std::exception& e) {
        out.push_back(detail::predicate("threshold_solve", false, e.what()));
        return out;
    }
    if (opts.b_star_shift != 0.0) {
        sol.exit.b_star *= 1.0 + opts.b_star_shift;
        sol.exit.K = (sol.exit.b_star - d.c) / eval_F(sol.exit.b_star, d.r, p, pr.quad);
    }
    const double b = sol.exit.b_star;
    out.push_back(detail::predicate(
        "threshold_ordering",
        sol.L_star < b && sol.entry.d_star < sol.entry.d_bar && sol.entry.d_bar < b &&
            sol.roots.x_star < std::min(d.c, sol.L_star) && sol.roots.b_under < sol.L_star));

    {
        const double h = 1e-3 * sd;
        const double slope = detail::one_sided_slope(
            [&](double x) { return value_V(x, sol.exit, tight); }, b, h);
        out.push_back(detail::bounded("smooth_pasting_V", slope - 1.0, opts.paste_tol));

        auto jf = [&](double x) { return value_J(x, sol.exit, sol.entry, tight); };
        const double ds = sol.entry.d_star;
        const double sl = detail::one_sided_slope(jf, ds, h);
        const double sr = -detail::one_sided_slope([&](double x) { return jf(-x); }, -ds, h);
        out.push_back(detail::bounded("smooth_pasting_J", (sl - sr) / std::max(1.0, std::abs(sl)),
                                      opts.paste_tol));
    }
    {
        // finite differences amplify quadrature noise by 4/h^2, so the scans
        // need the tight tolerances
        const auto rep = vi_residuals([&](double x) { return value_V(x, sol.exit, tight); },
                                      [&](double x) { return x - d.c; }, p.theta - 6.0 * sd,
                                      p.theta + 6.0 * sd, opts.vi_grid, d.r, p, {b});
        out.push_back(detail::bounded("vi_V_nonneg", std::min(0.0, rep.worst_negative), opts.vi_tol));
        out.push_back(detail::bounded("vi_V_compl", rep.worst_compl, opts.vi_tol));
    }
    {
        const auto rep = vi_residuals(
            [&](double x) { return value_J(x, sol.exit, sol.entry, tight); },
            [&](double x) { return value_V(x, sol.exit, tight) - x - d.c_hat; },
            p.theta - 6.0 * sd, p.theta + 6.0 * sd, opts.vi_grid, d.r_hat, p,
            {sol.entry.d_star, b});
        out.push_back(detail::bounded("vi_J_nonneg", std::min(0.0, rep.worst_negative), opts.vi_tol));
        out.push_back(detail::bounded("vi_J_compl", rep.worst_compl, opts.vi_tol));
    }

    // translation identity: shift theta, c, L together; entry matches when
    // c_hat absorbs the opposite shift
    {
        const double k = 0.7 * sd;
        problem pr2 = pr;
        pr2.model.theta = p.theta - k;
        pr2.disc.c = d.c - k;
        pr2.disc.c_hat = d.c_hat + k;
        if (pr2.disc.c + pr2.disc.c_hat > 0.0) {
            try {
                const auto sol2 = solve_thresholds(pr2);
                const double eb = std::abs((sol2.exit.b_star + k - b)) / sd;
                const double x_probe = p.theta + 0.5 * sd;
                const double ev = std::abs(value_V(x_probe - k, sol2.exit, pr2) -
                                           value_V(x_probe, sol.exit, pr));
                const double ed = std::abs(sol2.entry.d_star + k - sol.entry.d_star) / sd;
                out.push_back(detail::bounded("translation_identity_exit",
                                              std::max(eb, ev), 1e-7));
                out.push_back(detail::bounded("translation_identity_entry", ed, 1e-6));
            } catch (const std::exception& e) {
                out.push_back(detail::predicate("translation_identity_exit", false, e.what()));
            }
        } else {
            out.push_back(detail::skipped("translation_identity_exit", "cost shift infeasible"));
        }
    }

    // Brownian limit self-consistency
    {
        try {
            const auto bw = brownian_thresholds(p.sigma, d);
            const double bref = d.c + p.sigma / std::sqrt(2.0 * d.r);
            const double g = (1.0 + std::sqrt(d.r_hat / d.r)) *
                                 std::exp(std::sqrt(2.0 * d.r) / p.sigma *
                                          (bw.d_star - bw.b_star)) -
                             std::sqrt(2.0 * d.r_hat) / p.sigma * (bw.d_star + d.c_hat) - 1.0;
            out.push_back(detail::bounded("brownian_limit_b", bw.b_star - bref, 1e-12));
            out.push_back(detail::bounded("brownian_limit_d_residual", g, 1e-9,
                                          "d* = " + std::to_string(bw.d_star)));
            out.push_back(detail::predicate("brownian_limit_order", bw.d_star < bw.b_star));
        } catch (const std::exception& e) {
            out.push_back(detail::predicate("brownian_limit_b", false, e.what()));
        }
    }

    // stop-loss block
    std::optional<stoploss_solution> sl;
    if (opts.stop_loss) {
        const double L = *opts.stop_loss;
        try {
            sl = solve_stoploss(L, pr);
        } catch (const std::exception& e) {
            out.push_back(detail::predicate("stoploss_solve", false, e.what()));
        }
    }
    if (sl && sl->exit.degenerate) {
        out.push_back(detail::skipped("stoploss_sandwich", "degenerate: L within 1e-6 of L*"));
        out.push_back(detail::skipped("vi_VL", "degenerate"));
    } else if (sl) {
        const auto& ex = sl->exit;
        out.push_back(detail::predicate("stoploss_sandwich",
                                        sol.L_star < ex.b_L && ex.b_L < b && ex.L < sol.L_star,
                                        "L* < b_L < b*"));
        {
            const double h = 1e-3 * sd;
            const double slope = detail::one_sided_slope(
                [&](double x) { return value_VL(x, ex, tight); }, ex.b_L, h);
            out.push_back(detail::bounded("stoploss_pasting_VL", slope - 1.0, opts.paste_tol));
            // re-assert the solver postcondition with the solver's quadrature
            const double FL = eval_F(ex.L, d.r, p, pr.quad);
            const double vl_at_L = ex.C * FL + ex.D * eval_G(ex.L, d.r, p, pr.quad);
            const double scale = std::max({1.0, std::abs(ex.L - d.c), std::abs(ex.C * FL)});
            out.push_back(detail::bounded("stoploss_boundary_VL",
                                          (vl_at_L - (ex.L - d.c)) / scale, 1e-9));
        }
        {
            const double h = 2.0 * (6.0 * sd + b - ex.L) / static_cast<double>(opts.vi_grid);
            const auto rep = vi_residuals([&](double x) { return value_VL(x, ex, tight); },
                                          [&](double x) { return x - d.c; }, ex.L + 2.0 * h,
                                          p.theta + 6.0 * sd, opts.vi_grid, d.r, p, {ex.b_L});
            out.push_back(
                detail::bounded("vi_VL_nonneg", std::min(0.0, rep.worst_negative), opts.vi_tol));
            out.push_back(detail::bounded("vi_VL_compl", rep.worst_compl, opts.vi_tol));
        }
        // monotone decrease of b_L in L
        {
            const double L = ex.L;
            const double gap = sol.L_star - L;
            const double L2 = L + 0.25 * gap, L3 = L + 0.5 * gap;
            try {
                const double b2 = solve_exit_stoploss(L2, pr).b_L;
                const double b3 = solve_exit_stoploss(L3, pr).b_L;
                out.push_back(detail::predicate("stoploss_bL_monotone",
                                                ex.b_L > b2 && b2 > b3 && b3 > sol.L_star));
            } catch (const std::exception& e) {
                out.push_back(detail::predicate("stoploss_bL_monotone", false, e.what()));
            }
        }
        if (sl->entry.trivial) {
            out.push_back(detail::skipped("stoploss_entry_ordering",
                                          "entry trivial: sup h_hat_L <= 0"));
            out.push_back(detail::skipped("vi_JL", "entry trivial"));
        } else {
            const auto& en = sl->entry;
            out.push_back(detail::predicate(
                "stoploss_entry_ordering",
                ex.L < en.a_L && en.a_L < en.x_max && en.x_max < en.d_L && en.d_L < ex.b_L));
            auto jl = [&](double x) { return value_JL(x, ex, en, tight); };
            const double h = 1e-3 * sd;
            double worst = 0.0;
            for (double xk : {en.a_L, en.d_L}) {
                const double slp = detail::one_sided_slope(jl, xk, h);
                const double srp = -detail::one_sided_slope([&](double x) { return jl(-x); }, -xk, h);
                worst = std::max(worst, std::abs(slp - srp) / std::max(1.0, std::abs(slp)));
            }
            out.push_back(detail::bounded("stoploss_pasting_JL", worst, opts.paste_tol));
            {
                const double h2 = 2.0 * (6.0 * sd + b - ex.L) / static_cast<double>(opts.vi_grid);
                const auto rep = vi_residuals(
                    [&](double x) { return value_JL(x, ex, en, tight); },
                    [&](double x) { return value_VL(x, ex, tight) - x - d.c_hat; },
                    ex.L + 2.0 * h2, p.theta + 6.0 * sd, opts.vi_grid, d.r_hat, p,
                    {en.a_L, en.d_L, ex.b_L});
                out.push_back(detail::bounded("vi_JL_nonneg", std::min(0.0, rep.worst_negative),
                                              opts.vi_tol));
                out.push_back(detail::bounded("vi_JL_compl", rep.worst_compl, opts.vi_tol));
            }
        }
    }

    // Monte Carlo oracles
    if (!opts.run_mc) return out;
    {
        mc_config mc = opts.mc;
        const double dt = mc.resolved_dt(p);
        // grid first-passage detection behaves like a barrier pushed outward
        // by about 0.583 sigma sqrt(dt); accept 3 SE around the band spanned
        // by the exact reference and a doubly shifted one
        const double shift = 0.583 * p.sigma * std::sqrt(dt);
        auto laplace_check = [&](const char* name, double x0, double lvl, bool up) {
            const auto est = estimate_hitting_laplace(x0, lvl, d.r, p, mc);
            auto ratio = [&](double l) {
                return up ? eval_F(x0, d.r, p, pr.quad) / eval_F(l, d.r, p, pr.quad)
                          : eval_G(x0, d.r, p, pr.quad) / eval_G(l, d.r, p, pr.quad);
            };
            const double ref = ratio(lvl);
            const double ref_shifted = ratio(up ? lvl + 2.0 * shift : lvl - 2.0 * shift);
            const double lo = std::min(ref, ref_shifted), hi = std::max(ref, ref_shifted);
            const double slack = est.std_error + est.bias_bound + 1e-300;
            double viol = 0.0;
            if (est.estimate < lo) viol = (lo - est.estimate) / slack;
            if (est.estimate > hi) viol = (est.estimate - hi) / slack;
            out.push_back(detail::bounded(name, viol, 3.0, "ref " + std::to_string(ref)));
        };
        laplace_check("mc_laplace_up", p.theta - 0.5 * sd, p.theta + sd, true);
        laplace_check("mc_laplace_down", p.theta + 0.5 * sd, p.theta - sd, false);

        // exit-threshold argmax against the active exit level (b_L under a
        // stop-loss, b* otherwise)
        const bool with_stop = sl.has_value() && !sl->exit.degenerate;
        const double level = with_stop ? sl->exit.b_L : b;
        const std::optional<double> stop =
            with_stop ? std::optional<double>(sl->exit.L) : std::nullopt;
        const double x0 = p.theta;
        if (stop && x0 <= *stop) {
            out.push_back(detail::skipped("argmax_exit_consistency", "theta under stop-loss"));
            out.push_back(detail::skipped("mc_grid_argmax_exit", "theta under stop-loss"));
        } else {
            // analytic value of the fixed-level policy, with both barriers
            // pushed outward by s to mimic discrete monitoring
            auto vpol = [&](double lvl, double s) {
                const double hi_b = lvl + s;
                if (hi_b <= x0) return x0 - d.c;
                if (stop) {
                    const double lo_b = *stop - s;
                    const double Fl = eval_F(lo_b, d.r, p, pr.quad);
                    const double Gl = eval_G(lo_b, d.r, p, pr.quad);
                    const double Fh = eval_F(hi_b, d.r, p, pr.quad);
                    const double Gh = eval_G(hi_b, d.r, p, pr.quad);
                    const double det = Fh * Gl - Gh * Fl;
                    const double Cc = ((hi_b - d.c) * Gl - (lo_b - d.c) * Gh) / det;
                    const double Dd = ((lo_b - d.c) * Fh - (hi_b - d.c) * Fl) / det;
                    return Cc * eval_F(x0, d.r, p, pr.quad) + Dd * eval_G(x0, d.r, p, pr.quad);
                }
                return (hi_b - d.c) * eval_F(x0, d.r, p, pr.quad) /
                       eval_F(hi_b, d.r, p, pr.quad);
            };
            // the solver's level must dominate a fine analytic lattice around it
            double excess = 0.0;
            for (int j = -10; j <= 10; ++j) {
                const double cj = level * (1.0 + 0.002 * j);
                if (stop && cj <= *stop) continue;
                excess = std::max(excess, vpol(cj, 0.0) - vpol(level, 0.0));
            }
            out.push_back(detail::bounded(
                "argmax_exit_consistency",
                excess / std::max(1.0, std::abs(vpol(level, 0.0))), 1e-7));

            const double step = std::max(2.0 * shift, 1e-3 * sd);
            std::vector<double> cand;
            for (int j = -5; j <= 5; ++j) cand.push_back(level + step * j);

            // the simulated winner may beat the analytic lane by at most the
            // monitoring bias plus noise
            const auto res = grid_argmax_exit(x0, cand, level, stop, p, d, mc);
            double allowance = 0.0;
            for (double cj : cand)
                allowance = std::max(allowance, vpol(cj, shift) - vpol(level, shift));
            const double viol =
                std::max(0.0, res.gap - 1.5 * allowance) / (res.gap_se + 1e-300);
            out.push_back(detail::bounded(
                "mc_grid_argmax_exit", viol, 3.0,
                "argmax at " + std::to_string(res.levels[res.argmax]) + ", gap " +
                    std::to_string(res.gap)));
        }
    }
    return out;
}

}  // namespace meanrev
