#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace meanrev {

struct mc_result {
    double estimate = 0.0;
    double std_error = 0.0;
    double bias_bound = 0.0;  // worst-case contribution of horizon-truncated paths
    std::size_t n_paths = 0;
    std::size_t n_truncated = 0;
    double dt = 0.0;
};

namespace detail {

struct ou_step {
    double theta, a1, sd;
    explicit ou_step(const model_params& p, double dt)
        : theta(p.theta), a1(std::exp(-p.mu * dt)),
          sd(p.sigma * std::sqrt((1.0 - std::exp(-2.0 * p.mu * dt)) / (2.0 * p.mu))) {}
    double operator()(double x, normal_source& z) const {
        return theta + (x - theta) * a1 + sd * z();
    }
};

inline mc_result finalize(kahan_sum& acc, kahan_sum& acc2, std::size_t n) {
    mc_result r;
    r.n_paths = n;
    r.estimate = acc.sum / static_cast<double>(n);
    const double var =
        std::max(0.0, (acc2.sum - static_cast<double>(n) * r.estimate * r.estimate) /
                          static_cast<double>(n - 1));
    r.std_error = std::sqrt(var / static_cast<double>(n));
    return r;
}

}  // namespace detail

// E[exp(-rate * tau_level)] with tau the first grid time the level is touched
// or crossed. Paths never hitting before the horizon contribute zero; the
// discarded tail is at most exp(-rate * T) per truncated path.
inline mc_result estimate_hitting_laplace(double x0, double level, double rate,
                                          const model_params& p, const mc_config& cfg) {
    p.validate();
    cfg.validate();
    if (!(rate > 0.0)) throw input_error("estimate_hitting_laplace: rate must be positive");
    if (cfg.n_paths < 2) throw input_error("estimate_hitting_laplace: need at least 2 paths");
    const double dt = cfg.resolved_dt(p);

    mc_result out;
    out.dt = dt;
    if (x0 == level) {
        out.estimate = 1.0;
        out.n_paths = cfg.n_paths;
        return out;
    }
    const bool up = level > x0;
    const double horizon = std::log(1.0 / cfg.horizon_eps) / rate;
    const auto max_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const detail::ou_step step(p, dt);
    const double tail = std::exp(-rate * static_cast<double>(max_steps) * dt);

    kahan_sum acc, acc2;
    std::size_t trunc = 0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        normal_source z(path_seed(cfg.seed, i));
        double x = x0, pay = 0.0;
        bool hit = false;
        for (std::size_t k = 1; k <= max_steps; ++k) {
            x = step(x, z);
            if (up ? (x >= level) : (x <= level)) {
                pay = std::exp(-rate * static_cast<double>(k) * dt);
                hit = true;
                break;
            }
        }
        if (!hit) ++trunc;
        acc.add(pay);
        acc2.add(pay * pay);
    }
    out = detail::finalize(acc, acc2, cfg.n_paths);
    out.dt = dt;
    out.n_truncated = trunc;
    out.bias_bound = tail * static_cast<double>(trunc) / static_cast<double>(cfg.n_paths);
    return out;
}

// Value of a fixed-threshold policy started at x0. With an entry interval the
// path waits for X in [a, d] (discounted at r_hat), then holds until b or the
// stop-loss (discounted at r). Truncated held paths are closed at x_T.
inline mc_result estimate_policy_value(double x0, const policy_spec& pol,
                                       const model_params& p, const discount_spec& disc,
                                       const mc_config& cfg) {
    p.validate();
    disc.validate();
    pol.validate();
    cfg.validate();
    if (cfg.n_paths < 2) throw input_error("estimate_policy_value: need at least 2 paths");
    const double dt = cfg.resolved_dt(p);
    const double b = pol.exit_upper, c = disc.c, ch = disc.c_hat;
    const double L = pol.stop_loss.value_or(-std::numeric_limits<double>::infinity());
    const bool has_entry = pol.entry_upper.has_value();
    const double ent_hi = has_entry ? *pol.entry_upper : 0.0;
    const double ent_lo =
        pol.entry_lower.value_or(-std::numeric_limits<double>::infinity());

    mc_result out;
    out.dt = dt;
    if (!has_entry && (x0 >= b || x0 <= L)) {
        out.estimate = x0 - c;
        out.n_paths = cfg.n_paths;
        return out;
    }

    const double horizon = std::log(1.0 / cfg.horizon_eps) / disc.r_hat;
    const auto max_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const detail::ou_step step(p, dt);
    const double swing = std::max({1.0, std::abs(b - c), std::abs(b) + std::abs(ch),
                                   pol.stop_loss ? std::abs(L - c) : 0.0});

    kahan_sum acc, acc2;
    std::size_t trunc = 0;
    double bias = 0.0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        normal_source z(path_seed(cfg.seed, i));
        double x = x0;
        bool held = !has_entry;
        double disc_ent = 1.0, x_in = x0, t_in = 0.0;
        if (has_entry && x0 >= ent_lo && x0 <= ent_hi) held = true;
        double pay = 0.0;
        bool done = false;
        for (std::size_t k = 1; k <= max_steps && !done; ++k) {
            x = step(x, z);
            const double t = static_cast<double>(k) * dt;
            if (!held) {
                if (x >= ent_lo && x <= ent_hi) {
                    held = true;
                    disc_ent = std::exp(-disc.r_hat * t);
                    x_in = x;
                    t_in = t;
                }
            } else if (x >= b || x <= L) {
                if (has_entry)
                    pay = disc_ent * (std::exp(-disc.r * (t - t_in)) * (x - c) - (x_in + ch));
                else
                    pay = std::exp(-disc.r * t) * (x - c);
                done = true;
            }
        }
        if (!done) {
            ++trunc;
            const double t_end = static_cast<double>(max_steps) * dt;
            if (held) {
                const double d_exit = std::exp(-disc.r * (t_end - t_in));
                if (has_entry)
                    pay = disc_ent * (d_exit * (x - c) - (x_in + ch));
                else
                    pay = d_exit * (x - c);
                bias += disc_ent * d_exit * (std::abs(x - c) + swing);
            } else {
                bias += std::exp(-disc.r_hat * t_end) * swing;
            }
        }
        acc.add(pay);
        acc2.add(pay * pay);
    }
    out = detail::finalize(acc, acc2, cfg.n_paths);
    out.dt = dt;
    out.n_truncated = trunc;
    out.bias_bound = bias / static_cast<double>(cfg.n_paths);
    return out;
}

// Common-random-numbers sweep over candidate levels for one threshold, the
// others held fixed. The analytic level rides along as an extra candidate so
// the max-vs-analytic gap has a paired standard error.
struct argmax_result {
    std::vector<double> levels;
    std::vector<double> estimates;
    std::vector<double> std_errors;
    std::size_t argmax = 0;
    double analytic_level = 0.0;
    double analytic_estimate = 0.0;
    double gap = 0.0;     // estimate[argmax] - analytic_estimate
    double gap_se = 0.0;  // paired std error of that difference
    bool within_one_step = false;
    bool within_2se = false;
};

namespace detail {

inline argmax_result argmax_finalize(const std::vector<double>& levels,
                                     const std::vector<kahan_sum>& s,
                                     const std::vector<kahan_sum>& s2,
                                     const std::vector<kahan_sum>& sd,
                                     const std::vector<kahan_sum>& sd2, std::size_t n,
                                     double analytic_level) {
    const std::size_t m = levels.size();
    argmax_result out;
    out.levels = levels;
    out.analytic_level = analytic_level;
    out.estimates.resize(m);
    out.std_errors.resize(m);
    const auto dn = static_cast<double>(n);
    for (std::size_t j = 0; j < m; ++j) {
        const double mean = s[j].sum / dn;
        out.estimates[j] = mean;
        const double var = std::max(0.0, (s2[j].sum - dn * mean * mean) / (dn - 1.0));
        out.std_errors[j] = std::sqrt(var / dn);
        if (out.estimates[j] > out.estimates[out.argmax]) out.argmax = j;
    }
    out.analytic_estimate = sd.back().sum / dn;  // slot m holds analytic payoffs via diff 0
    const double dmean = sd[out.argmax].sum / dn;
    const double dvar = std::max(
        0.0, (sd2[out.argmax].sum - dn * dmean * dmean) / (dn - 1.0));
    out.gap = dmean;
    out.gap_se = std::sqrt(dvar / dn);
    out.within_2se = out.gap <= 2.0 * out.gap_se + 1e-300;

    double step = m > 1 ? std::abs(levels[1] - levels[0]) : 0.0;
    for (std::size_t j = 1; j + 1 < m; ++j)
        step = std::max(step, std::abs(levels[j + 1] - levels[j]));
    out.within_one_step = std::abs(levels[out.argmax] - analytic_level) <= step + 1e-12;
    return out;
}

}  // namespace detail

// Exit-threshold sweep: hold from x0, close at candidate level b_j (or the
// common stop-loss). Candidates must be sorted ascending.
inline argmax_result grid_argmax_exit(double x0, const std::vector<double>& candidates,
                                      double analytic_b, std::optional<double> stop_loss,
                                      const model_params& p, const discount_spec& disc,
                                      const mc_config& cfg) {
    p.validate();
    disc.validate();
    cfg.validate();
    if (candidates.size() < 2) throw input_error("grid_argmax_exit: need several candidates");
    for (std::size_t j = 1; j < candidates.size(); ++j)
        if (!(candidates[j] > candidates[j - 1]))
            throw input_error("grid_argmax_exit: candidates must be sorted ascending");

    const double dt = cfg.resolved_dt(p);
    const double c = disc.c;
    const double L = stop_loss.value_or(-std::numeric_limits<double>::infinity());
    const double horizon = std::log(1.0 / cfg.horizon_eps) / disc.r;
    const auto max_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const detail::ou_step step(p, dt);

    const std::size_t m = candidates.size();
    std::vector<double> levels = candidates;  // payoffs evaluated per candidate + analytic
    std::vector<kahan_sum> s(m), s2(m), sdiff(m + 1), sdiff2(m + 1);
    std::vector<double> pay(m + 1);

    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        normal_source z(path_seed(cfg.seed, i));
        double x = x0;
        std::size_t jnext = 0;
        bool analytic_done = false;
        double analytic_pay = 0.0;
        // candidates below or at x0 close immediately, as does the analytic level
        while (jnext < m && x0 >= candidates[jnext]) pay[jnext++] = x0 - c;
        if (x0 >= analytic_b || x0 <= L) {
            analytic_pay = x0 - c;
            analytic_done = true;
        }
        if (x0 <= L)
            while (jnext < m) pay[jnext++] = x0 - c;

        std::size_t k = 1;
        for (; k <= max_steps && (jnext < m || !analytic_done); ++k) {
            x = step(x, z);
            const double df = std::exp(-disc.r * static_cast<double>(k) * dt);
            while (jnext < m && x >= candidates[jnext]) pay[jnext++] = df * (x - c);
            if (!analytic_done && (x >= analytic_b || x <= L)) {
                analytic_pay = df * (x - c);
                analytic_done = true;
            }
            if (x <= L) {
                while (jnext < m) pay[jnext++] = df * (x - c);
            }
        }
        if (jnext < m || !analytic_done) {
            const double df = std::exp(-disc.r * static_cast<double>(max_steps) * dt);
            while (jnext < m) pay[jnext++] = df * (x - c);
            if (!analytic_done) analytic_pay = df * (x - c);
        }
        pay[m] = analytic_pay;
        for (std::size_t j = 0; j < m; ++j) {
            s[j].add(pay[j]);
            s2[j].add(pay[j] * pay[j]);
            const double d = pay[j] - analytic_pay;
            sdiff[j].add(d);
            sdiff2[j].add(d * d);
        }
        sdiff[m].add(analytic_pay);
        sdiff2[m].add(analytic_pay * analytic_pay);
    }
    auto out = detail::argmax_finalize(levels, s, s2, sdiff, sdiff2, cfg.n_paths, analytic_b);
    return out;
}

// Entry-threshold sweep: wait for X in [a_fixed, d_j], then run the fixed exit
// policy (b_fixed, optional stop-loss). Candidates sorted ascending.
inline argmax_result grid_argmax_entry(double x0, const std::vector<double>& candidates,
                                       double analytic_d, std::optional<double> entry_lower,
                                       double b_fixed, std::optional<double> stop_loss,
                                       const model_params& p, const discount_spec& disc,
                                       const mc_config& cfg) {
    p.validate();
    disc.validate();
    cfg.validate();
    if (candidates.size() < 2) throw input_error("grid_argmax_entry: need several candidates");
    for (std::size_t j = 1; j < candidates.size(); ++j)
        if (!(candidates[j] > candidates[j - 1]))
            throw input_error("grid_argmax_entry: candidates must be sorted ascending");
    if (!(candidates.back() < b_fixed))
        throw input_error("grid_argmax_entry: candidates must stay below the exit level");

    const double dt = cfg.resolved_dt(p);
    const double c = disc.c, ch = disc.c_hat;
    const double a_lo = entry_lower.value_or(-std::numeric_limits<double>::infinity());
    const double L = stop_loss.value_or(-std::numeric_limits<double>::infinity());
    const double horizon = std::log(1.0 / cfg.horizon_eps) / disc.r_hat;
    const auto max_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const detail::ou_step step(p, dt);

    const std::size_t m = candidates.size();
    enum class st : unsigned char { waiting, held, closed };
    std::vector<st> state(m + 1);
    std::vector<double> disc_ent(m + 1), x_in(m + 1), t_in(m + 1), pay(m + 1);
    std::vector<kahan_sum> s(m), s2(m), sdiff(m + 1), sdiff2(m + 1);

    auto levels_all = candidates;
    levels_all.push_back(analytic_d);  // slot m = analytic candidate

    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        normal_source z(path_seed(cfg.seed, i));
        double x = x0;
        std::size_t open = m + 1;
        for (std::size_t j = 0; j <= m; ++j) {
            state[j] = st::waiting;
            pay[j] = 0.0;
            if (x0 >= a_lo && x0 <= levels_all[j]) {
                state[j] = st::held;
                disc_ent[j] = 1.0;
                x_in[j] = x0;
                t_in[j] = 0.0;
            }
        }
        std::size_t k = 1;
        for (; k <= max_steps && open > 0; ++k) {
            x = step(x, z);
            const double t = static_cast<double>(k) * dt;
            const bool in_exit = (x >= b_fixed || x <= L);
            for (std::size_t j = 0; j <= m; ++j) {
                if (state[j] == st::waiting && x >= a_lo && x <= levels_all[j]) {
                    state[j] = st::held;
                    disc_ent[j] = std::exp(-disc.r_hat * t);
                    x_in[j] = x;
                    t_in[j] = t;
                } else if (state[j] == st::held && in_exit) {
                    pay[j] = disc_ent[j] *
                             (std::exp(-disc.r * (t - t_in[j])) * (x - c) - (x_in[j] + ch));
                    state[j] = st::closed;
                    --open;
                }
            }
        }
        if (open > 0) {
            const double t_end = static_cast<double>(max_steps) * dt;
            for (std::size_t j = 0; j <= m; ++j) {
                if (state[j] == st::held)
                    pay[j] = disc_ent[j] *
                             (std::exp(-disc.r * (t_end - t_in[j])) * (x - c) - (x_in[j] + ch));
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            s[j].add(pay[j]);
            s2[j].add(pay[j] * pay[j]);
            const double d = pay[j] - pay[m];
            sdiff[j].add(d);
            sdiff2[j].add(d * d);
        }
        sdiff[m].add(pay[m]);
        sdiff2[m].add(pay[m] * pay[m]);
    }
    return detail::argmax_finalize(candidates, s, s2, sdiff, sdiff2, cfg.n_paths, analytic_d);
}

}  // namespace meanrev
