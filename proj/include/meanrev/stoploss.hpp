#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "double_stopping.hpp"
#include "majorant.hpp"
#include "params.hpp"
#include "root_find.hpp"
#include "special_fn.hpp"

namespace meanrev {

inline constexpr double degenerate_gap = 1e-6;  // L* - L below this is degenerate

struct stoploss_exit {
    double L = 0.0;
    double L_star = 0.0;
    bool degenerate = false;
    double b_L = 0.0;
    double C = 0.0;
    double D = 0.0;
};

// Exit with stop-loss at L: V_L = C F + D G on (L, b_L), x - c outside.
// b_L solves the pasting system; C, D follow by a 2x2 solve.
inline stoploss_exit solve_exit_stoploss(double L, const problem& pr) {
    pr.validate();
    const auto& p = pr.model;
    const double c = pr.disc.c, r = pr.disc.r;
    const double sd = p.stationary_sd();

    stoploss_exit out;
    out.L = L;
    out.L_star = l_star(pr);
    if (out.L_star - L < degenerate_gap) {
        out.degenerate = true;
        out.b_L = L;
        return out;
    }

    const double FL = eval_F(L, r, p, pr.quad);
    const double GL = eval_G(L, r, p, pr.quad);
    auto q = [&](double b) {
        const double Fb = eval_F(b, r, p, pr.quad);
        const double Gb = eval_G(b, r, p, pr.quad);
        const double F1b = eval_F_d1(b, r, p, pr.quad);
        const double G1b = eval_G_d1(b, r, p, pr.quad);
        return ((L - c) * Gb - (b - c) * GL) * F1b +
               ((b - c) * FL - (L - c) * Fb) * G1b - (Gb * FL - GL * Fb);
    };
    const double lo = std::max(out.L_star, L) + 1e-9 * sd;
    auto [ba, bb] = expand_bracket_right(q, lo, sd, 24);
    out.b_L = (ba == bb) ? ba : brent_root(q, ba, bb);

    const double Fb = eval_F(out.b_L, r, p, pr.quad);
    const double Gb = eval_G(out.b_L, r, p, pr.quad);
    const double det = Fb * GL - Gb * FL;
    if (det == 0.0) throw solver_error("solve_exit_stoploss: singular pasting system");
    out.C = ((out.b_L - c) * GL - (L - c) * Gb) / det;
    out.D = ((L - c) * Fb - (out.b_L - c) * FL) / det;

    const double resid = out.C * FL + out.D * GL - (L - c);
    const double scale = std::max({1.0, std::abs(L - c), std::abs(out.C * FL)});
    if (std::abs(resid) > 1e-9 * scale)
        throw solver_error("solve_exit_stoploss: boundary residual " + std::to_string(resid));
    return out;
}

inline double value_VL(double x, const stoploss_exit& ex, const problem& pr) {
    if (ex.degenerate || x <= ex.L || x >= ex.b_L) return x - pr.disc.c;
    return ex.C * eval_F(x, pr.disc.r, pr.model, pr.quad) +
           ex.D * eval_G(x, pr.disc.r, pr.model, pr.quad);
}

inline double value_VL_d1(double x, const stoploss_exit& ex, const problem& pr) {
    if (ex.degenerate || x <= ex.L || x >= ex.b_L) return 1.0;
    return ex.C * eval_F_d1(x, pr.disc.r, pr.model, pr.quad) +
           ex.D * eval_G_d1(x, pr.disc.r, pr.model, pr.quad);
}

struct stoploss_entry {
    bool trivial = false;
    double x_max = std::numeric_limits<double>::quiet_NaN();
    double h_max = std::numeric_limits<double>::quiet_NaN();
    double a_L = std::numeric_limits<double>::quiet_NaN();
    double d_L = std::numeric_limits<double>::quiet_NaN();
    double P = 0.0;
    double Q = 0.0;
};

// Locate the maximum of h_hat_L = V_L - x - c_hat over (L, b_L).
inline void locate_entry_peak(const stoploss_exit& ex, const problem& pr, double& x_max,
                              double& h_max) {
    auto hh = [&](double x) { return value_VL(x, ex, pr) - x - pr.disc.c_hat; };
    const double lo = ex.L, hi = ex.b_L;
    const int n = 400;
    int best = 1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        const double v = hh(x);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    const double xa = lo + (hi - lo) * static_cast<double>(best - 1) / n;
    const double xb = lo + (hi - lo) * static_cast<double>(best + 1) / n;
    auto [xm, hm] = golden_max(hh, xa, xb, 1e-12 * pr.model.stationary_sd());
    x_max = xm;
    h_max = hm;
}

// Entry region with stop-loss is the interval [a_L, d_L] around the peak of
// h_hat_L, located by tangency of F_hat (left) and G_hat (right).
inline stoploss_entry solve_entry_stoploss(const stoploss_exit& ex, const problem& pr) {
    const auto& p = pr.model;
    const double rh = pr.disc.r_hat, ch = pr.disc.c_hat;
    const double sd = p.stationary_sd();

    stoploss_entry out;
    if (ex.degenerate) {
        out.trivial = true;
        out.h_max = -(pr.disc.c + ch);
        return out;
    }
    locate_entry_peak(ex, pr, out.x_max, out.h_max);
    if (out.h_max <= 0.0) {
        out.trivial = true;
        return out;
    }

    auto hh = [&](double x) { return value_VL(x, ex, pr) - x - ch; };
    auto hh1 = [&](double x) { return value_VL_d1(x, ex, pr) - 1.0; };
    auto tan_d = [&](double x) {
        return eval_G(x, rh, p, pr.quad) * hh1(x) - eval_G_d1(x, rh, p, pr.quad) * hh(x);
    };
    auto tan_a = [&](double x) {
        return eval_F(x, rh, p, pr.quad) * hh1(x) - eval_F_d1(x, rh, p, pr.quad) * hh(x);
    };

    const double eps = 1e-6 * sd;
    auto [da, db] = scan_sign_change(tan_d, out.x_max, ex.b_L - eps, 200);
    out.d_L = (da == db) ? da : brent_root(tan_d, da, db);
    auto [aa, ab] = scan_sign_change(tan_a, ex.L + eps, out.x_max, 200);
    out.a_L = (aa == ab) ? aa : brent_root(tan_a, aa, ab);

    if (!(ex.L < out.a_L && out.a_L < out.d_L && out.d_L < ex.b_L))
        throw solver_error("solve_entry_stoploss: threshold ordering violated");

    out.P = hh(out.a_L) / eval_F(out.a_L, rh, p, pr.quad);
    out.Q = hh(out.d_L) / eval_G(out.d_L, rh, p, pr.quad);
    return out;
}

inline double value_JL(double x, const stoploss_exit& ex, const stoploss_entry& en,
                       const problem& pr) {
    if (en.trivial) return 0.0;
    if (x < en.a_L) return en.P * eval_F(x, pr.disc.r_hat, pr.model, pr.quad);
    if (x > en.d_L) return en.Q * eval_G(x, pr.disc.r_hat, pr.model, pr.quad);
    return value_VL(x, ex, pr) - x - pr.disc.c_hat;
}

struct stoploss_solution {
    stoploss_exit exit;
    stoploss_entry entry;
};

inline stoploss_solution solve_stoploss(double L, const problem& pr) {
    stoploss_solution sol;
    sol.exit = solve_exit_stoploss(L, pr);
    sol.entry = solve_entry_stoploss(sol.exit, pr);
    return sol;
}

struct sweep_row {
    double L = 0.0;
    double b_L = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
};

struct sweep_result {
    std::vector<sweep_row> rows;
    std::vector<std::string> warnings;
};

// b_L as a function of L over a grid, with the terminal point (L*, L*).
// Per-point failures become NaN rows plus a warning.
inline sweep_result sweep_stop_loss(const std::vector<double>& grid, const problem& pr) {
    sweep_result out;
    const double ls = l_star(pr);
    for (double L : grid) {
        sweep_row row;
        row.L = L;
        if (L > ls) {
            out.warnings.push_back("L = " + std::to_string(L) + " above L*, skipped");
            out.rows.push_back(row);
            continue;
        }
        try {
            const auto ex = solve_exit_stoploss(L, pr);
            row.degenerate = ex.degenerate;
            row.b_L = ex.degenerate ? ls : ex.b_L;
        } catch (const solver_error& e) {
            out.warnings.push_back("L = " + std::to_string(L) + ": " + e.what());
        }
        out.rows.push_back(row);
    }
    out.rows.push_back({ls, ls, true});
    return out;
}

// Relative stop-loss at distance ell below the entry point: the exit problem
// seen at x uses the level L = x - ell, so the entry payoff is the diagonal
// slice x -> V_{x-ell}(x).
struct relative_result {
    double ell = 0.0;
    std::vector<double> x;
    std::vector<double> v_ell;   // diagonal exit value
    std::vector<double> h_ell;   // v_ell - x - c_hat
    std::vector<double> j_ell;   // entry value via the discrete majorant
    bool trivial = false;
    double d_star = std::numeric_limits<double>::quiet_NaN();
    double stop_level = std::numeric_limits<double>::quiet_NaN();
    double b_star = std::numeric_limits<double>::quiet_NaN();
};

inline relative_result solve_relative_stoploss(double ell, const problem& pr,
                                               std::size_t n_grid = 1001, double span = 4.0) {
    pr.validate();
    if (!(ell > 0.0)) throw input_error("solve_relative_stoploss: ell must be positive");
    if (n_grid < 64) throw input_error("solve_relative_stoploss: grid too small");
    const auto& p = pr.model;
    const double sd = p.stationary_sd();
    const double rh = pr.disc.r_hat, ch = pr.disc.c_hat;
    const double ls = l_star(pr);

    relative_result out;
    out.ell = ell;
    out.x.resize(n_grid);
    out.v_ell.resize(n_grid);
    out.h_ell.resize(n_grid);

    const double lo = p.theta - span * sd, hi = p.theta + span * sd;
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
        out.x[i] = x;
        const double L = x - ell;
        double v;
        if (ls - L < degenerate_gap) {
            v = x - pr.disc.c;
        } else {
            const auto ex = solve_exit_stoploss(L, pr);
            v = value_VL(x, ex, pr);
        }
        out.v_ell[i] = v;
        out.h_ell[i] = v - x - ch;
    }

    fg_cache cache(p, pr.quad);
    std::vector<double> y(n_grid), hcap(n_grid), gh(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double fx = cache.F(out.x[i], rh);
        const double gx = cache.G(out.x[i], rh);
        y[i] = fx / gx;
        gh[i] = gx;
        hcap[i] = out.h_ell[i] / gx;
    }
    const auto maj = concave_majorant_nonneg(y, hcap);

    out.j_ell.resize(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) out.j_ell[i] = gh[i] * maj.values[i];

    if (maj.peak <= 0.0) {
        out.trivial = true;
        return out;
    }
    std::ptrdiff_t last = -1;
    for (std::size_t i = 0; i < n_grid; ++i)
        if (maj.contact[i]) last = static_cast<std::ptrdiff_t>(i);
    if (last < 0)
        throw solver_error("solve_relative_stoploss: no contact point; refine the grid");
    if (last == 0 || last + 1 == static_cast<std::ptrdiff_t>(n_grid))
        throw solver_error("solve_relative_stoploss: contact at grid edge; widen the span");

    out.d_star = out.x[static_cast<std::size_t>(last)];
    out.stop_level = out.d_star - ell;
    if (ls - out.stop_level < degenerate_gap) {
        out.b_star = ls;
    } else {
        out.b_star = solve_exit_stoploss(out.stop_level, pr).b_L;
    }
    return out;
}

}  // namespace meanrev
