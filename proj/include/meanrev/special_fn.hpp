#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "params.hpp"
#include "quadrature.hpp"
#include "root_find.hpp"

namespace meanrev {

namespace detail {

// Core integral  I(beta, s) = int_0^inf u^{s-1} exp(beta u - u^2/2) du,  s > 0.
//
// For s < 1 the endpoint singularity is removed on [0, 1] by u = v^{1/s}:
//   I_head = (1/s) int_0^1 exp(beta v^{1/s} - v^{2/s}/2) dv.
// The remainder [1, max(beta,0) + w] is integrated directly in u so a peak
// at u = beta cannot hide between quadrature nodes of the substituted
// integral. For beta > 0 the exponent is shifted by its maximum beta^2/2
// before exponentiation; for beta <= 0 the maximum is already 0.
inline double f_raw(double beta, double s, const quad_config& cfg) {
    if (!(s > 0.0)) throw input_error("f_raw: s must be positive");
    const double w = std::max(8.0, std::sqrt(2.0 * std::log(1.0 / cfg.abs_tol)) + 2.0);
    const double umax = std::max(beta, 0.0) + w;
    const double shift = beta > 0.0 ? 0.5 * beta * beta : 0.0;
    const double cut = std::min(1.0, umax);

    auto direct = [&](double u) {
        return std::exp((s - 1.0) * std::log(u) + beta * u - 0.5 * u * u - shift);
    };
    double total = 0.0;
    if (s >= 1.0) {
        total += integrate_adaptive(direct, 0.0, cut, cfg).value;
    } else {
        const double inv_s = 1.0 / s;
        const double vmax = std::pow(cut, s);
        auto g = [&](double v) {
            const double u = std::pow(v, inv_s);
            return inv_s * std::exp(beta * u - 0.5 * u * u - shift);
        };
        total += integrate_adaptive(g, 0.0, vmax, cfg).value;
    }
    if (umax > cut) total += integrate_adaptive(direct, cut, umax, cfg).value;
    return total * std::exp(shift);
}

}  // namespace detail

// F(x; r) = int_0^inf u^{r/mu - 1} exp(sqrt(2 mu / sigma^2) (x - theta) u - u^2/2) du
inline double eval_F(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    p.validate();
    if (!(r > 0.0)) throw input_error("eval_F: r must be positive");
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return detail::f_raw(kappa * (x - p.theta), r / p.mu, cfg);
}

// G(x; r) = F(2 theta - x; r)
inline double eval_G(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    p.validate();
    if (!(r > 0.0)) throw input_error("eval_G: r must be positive");
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return detail::f_raw(-kappa * (x - p.theta), r / p.mu, cfg);
}

// First and second derivatives, obtained by raising s in the integrand moment.
inline double eval_F_d1(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return kappa * detail::f_raw(kappa * (x - p.theta), r / p.mu + 1.0, cfg);
}

inline double eval_F_d2(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return kappa * kappa * detail::f_raw(kappa * (x - p.theta), r / p.mu + 2.0, cfg);
}

inline double eval_G_d1(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return -kappa * detail::f_raw(-kappa * (x - p.theta), r / p.mu + 1.0, cfg);
}

inline double eval_G_d2(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    const double kappa = std::sqrt(2.0 * p.mu) / p.sigma;
    return kappa * kappa * detail::f_raw(-kappa * (x - p.theta), r / p.mu + 2.0, cfg);
}

// psi = F / G, strictly increasing in x.
inline double psi(double x, double r, const model_params& p, const quad_config& cfg = {}) {
    return eval_F(x, r, p, cfg) / eval_G(x, r, p, cfg);
}

// Inverse of psi by bracket expansion around theta plus Brent.
inline double psi_inverse(double y, double r, const model_params& p, const quad_config& cfg = {}) {
    if (!(y > 0.0)) throw input_error("psi_inverse: y must be positive");
    const double sd = p.stationary_sd();
    const double ly = std::log(y);
    auto g = [&](double x) {
        return std::log(eval_F(x, r, p, cfg)) - std::log(eval_G(x, r, p, cfg)) - ly;
    };
    double w = sd;
    double lo = p.theta - w, hi = p.theta + w;
    double glo = g(lo), ghi = g(hi);
    while (!(glo < 0.0 && ghi > 0.0)) {
        w *= 2.0;
        if (w > 36.0 * sd)
            throw input_error("psi_inverse: y outside the attainable range");
        if (glo >= 0.0) { lo = p.theta - w; glo = g(lo); }
        if (ghi <= 0.0) { hi = p.theta + w; ghi = g(hi); }
    }
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    return brent_root(g, lo, hi);
}

// Memoizing wrapper keyed by (x, r, kind) bit patterns. Single-threaded use;
// for concurrent workers make one cache per worker.
class fg_cache {
  public:
    fg_cache(model_params p, quad_config cfg = {}) : p_(p), cfg_(cfg) {}

    double F(double x, double r) { return get(x, r, 0, [&] { return eval_F(x, r, p_, cfg_); }); }
    double G(double x, double r) { return get(x, r, 1, [&] { return eval_G(x, r, p_, cfg_); }); }
    double F_d1(double x, double r) { return get(x, r, 2, [&] { return eval_F_d1(x, r, p_, cfg_); }); }
    double G_d1(double x, double r) { return get(x, r, 3, [&] { return eval_G_d1(x, r, p_, cfg_); }); }

    [[nodiscard]] std::size_t size() const { return map_.size(); }
    [[nodiscard]] std::size_t hits() const { return hits_; }

  private:
    struct key {
        std::uint64_t x, r;
        int kind;
        bool operator==(const key&) const = default;
    };
    struct key_hash {
        std::size_t operator()(const key& k) const {
            std::uint64_t h = k.x * 0x9E3779B97F4A7C15ull;
            h ^= k.r + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
            h ^= static_cast<std::uint64_t>(k.kind) + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };

    template <class Fn>
    double get(double x, double r, int kind, Fn&& compute) {
        key k{std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(r), kind};
        auto it = map_.find(k);
        if (it != map_.end()) {
            ++hits_;
            return it->second;
        }
        const double v = compute();
        map_.emplace(k, v);
        return v;
    }

    model_params p_;
    quad_config cfg_;
    std::unordered_map<key, double, key_hash> map_;
    std::size_t hits_ = 0;
};

}  // namespace meanrev
