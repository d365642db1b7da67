#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace meanrev {

// Raised for malformed user input (files, configs, argument domains).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a numerical routine cannot produce a result to contract.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadrature non-convergence, carrying the achieved error estimate.
struct quadrature_error : solver_error {
    double residual;
    quadrature_error(const std::string& msg, double res)
        : solver_error(msg), residual(res) {}
};

struct calibration_error : solver_error {
    using solver_error::solver_error;
};

// OU dynamics dX = mu (theta - X) dt + sigma dB.
struct model_params {
    double theta = 0.0;
    double mu = 1.0;
    double sigma = 1.0;

    void validate() const {
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw input_error("model_params: mu must be positive and finite");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw input_error("model_params: sigma must be positive and finite");
        if (!std::isfinite(theta))
            throw input_error("model_params: theta must be finite");
    }

    // stationary standard deviation sigma / sqrt(2 mu)
    [[nodiscard]] double stationary_sd() const { return sigma / std::sqrt(2.0 * mu); }
};

// Discount rates and transaction costs for the entry/exit legs.
struct discount_spec {
    double r = 0.05;      // exit discount rate
    double r_hat = 0.05;  // entry discount rate
    double c = 0.0;       // exit cost
    double c_hat = 0.0;   // entry cost

    void validate() const {
        if (!(r_hat > 0.0) || !(r_hat <= r))
            throw input_error("discount_spec: require 0 < r_hat <= r");
        if (!(c + c_hat > 0.0))
            throw input_error("discount_spec: require c + c_hat > 0");
        if (!std::isfinite(c) || !std::isfinite(c_hat) || !std::isfinite(r))
            throw input_error("discount_spec: non-finite entry");
    }
};

struct quad_config {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_panels = 512;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw input_error("quad_config: tolerances must be positive");
        if (max_panels < 8) throw input_error("quad_config: max_panels too small");
    }
};

struct mc_config {
    std::size_t n_paths = 100000;
    double dt = 0.0;               // 0 means derive 1/(20 mu) at use site
    double horizon_eps = 1e-6;
    std::uint64_t seed = 1;

    void validate() const {
        if (dt < 0.0) throw input_error("mc_config: dt must be >= 0");
        if (!(horizon_eps > 0.0) || horizon_eps >= 1.0)
            throw input_error("mc_config: horizon_eps must lie in (0, 1)");
    }

    // invariant: dt <= 1/(20 mu)
    [[nodiscard]] double resolved_dt(const model_params& p) const {
        const double cap = 1.0 / (20.0 * p.mu);
        if (dt == 0.0) return cap;
        if (dt > cap) throw input_error("mc_config: dt exceeds 1/(20 mu)");
        return dt;
    }
};

// Fixed-threshold trading rule for the Monte Carlo oracle.
struct policy_spec {
    std::optional<double> entry_lower;  // a
    std::optional<double> entry_upper;  // d
    double exit_upper = 0.0;            // b
    std::optional<double> stop_loss;    // L

    void validate() const {
        if (entry_lower && !entry_upper)
            throw input_error("policy_spec: entry_lower requires entry_upper");
        if (entry_lower && entry_upper && !(*entry_lower <= *entry_upper))
            throw input_error("policy_spec: entry interval reversed");
        if (entry_upper && !(*entry_upper < exit_upper))
            throw input_error("policy_spec: entry interval must lie below exit_upper");
        if (stop_loss && !(*stop_loss < exit_upper))
            throw input_error("policy_spec: stop_loss must lie below exit_upper");
    }
};

}  // namespace meanrev
