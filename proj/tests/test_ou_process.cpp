#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "golden_values.hpp"
#include "meanrev/ou_process.hpp"

using namespace meanrev;

namespace {

price_series golden_series() {
    price_series s;
    s.values.assign(std::begin(golden::mle_series), std::end(golden::mle_series));
    s.dt = golden::mle_dt;
    return s;
}

}  // namespace

TEST(OuProcess, SimulateDeterministicAndStationary) {
    const model_params p{0.55, 8.0, 0.35};
    const auto a = simulate_exact(p, 0.2, 1.0 / 252.0, 500, 42);
    const auto b = simulate_exact(p, 0.2, 1.0 / 252.0, 500, 42);
    ASSERT_EQ(a.values.size(), 501u);
    EXPECT_EQ(a.values, b.values);
    EXPECT_DOUBLE_EQ(a.values[0], 0.2);
    const auto c = simulate_exact(p, 0.2, 1.0 / 252.0, 500, 43);
    EXPECT_NE(a.values, c.values);
    // long-run sample moments approach the stationary law
    const auto s = simulate_exact(p, p.theta, 1.0 / 252.0, 200000, 7);
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(s.values.size());
    double var = 0.0;
    for (double v : s.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.values.size());
    EXPECT_NEAR(mean, p.theta, 0.01);
    EXPECT_NEAR(std::sqrt(var), p.stationary_sd(), 0.01);
}

TEST(OuProcess, LogLikelihoodReference) {
    const auto s = golden_series();
    const model_params p{0.55, 8.0, 0.35};
    EXPECT_NEAR(avg_log_likelihood(s, p), golden::ll_fixed, 1e-12);
}

TEST(OuProcess, MleReference) {
    const auto fit = fit_mle(golden_series());
    EXPECT_NEAR(fit.params.theta, golden::mle_theta, 1e-10);
    EXPECT_NEAR(fit.params.mu, golden::mle_mu, 1e-8);
    EXPECT_NEAR(fit.params.sigma, golden::mle_sigma, 1e-10);
    EXPECT_NEAR(fit.sigma_tilde, golden::mle_sigma_tilde, 1e-12);
    EXPECT_NEAR(fit.avg_loglik, golden::mle_avg_ll, 1e-12);
}

TEST(OuProcess, MleIsLocalMaximum) {
    const auto s = golden_series();
    const auto fit = fit_mle(s);
    const double base = avg_log_likelihood(s, fit.params);
    for (double bump : {1e-4, -1e-4}) {
        model_params p = fit.params;
        p.theta += bump;
        EXPECT_LT(avg_log_likelihood(s, p), base);
        p = fit.params;
        p.mu *= 1.0 + bump;
        EXPECT_LT(avg_log_likelihood(s, p), base);
        p = fit.params;
        p.sigma *= 1.0 + bump;
        EXPECT_LT(avg_log_likelihood(s, p), base);
    }
}

TEST(OuProcess, MleRecoversSimulatedParameters) {
    const model_params p{0.55, 8.0, 0.35};
    const auto s = simulate_exact(p, p.theta, 1.0 / 252.0, 100000, 13);
    const auto fit = fit_mle(s);
    EXPECT_NEAR(fit.params.theta, p.theta, 0.02 * p.theta);
    EXPECT_NEAR(fit.params.mu, p.mu, 0.02 * p.mu);
    EXPECT_NEAR(fit.params.sigma, p.sigma, 0.02 * p.sigma);
}

TEST(OuProcess, MleRejectsDegenerateSeries) {
    price_series s;
    s.dt = 1.0 / 252.0;
    s.values = {1.0, 2.0, 3.0};
    EXPECT_THROW(fit_mle(s), calibration_error);  // too short
    s.values = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    EXPECT_THROW(fit_mle(s), calibration_error);  // unit root
    s.values = {0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
    EXPECT_THROW(fit_mle(s), calibration_error);  // negative slope
    s.values = {2.0, 2.0, 2.0, 2.0, 2.0};
    EXPECT_THROW(fit_mle(s), calibration_error);  // no variation
    s.values = {1.0, std::nan(""), 2.0, 1.5, 1.2};
    EXPECT_THROW(fit_mle(s), input_error);
    s.values = {1.0, 1.5};
    s.dt = 0.0;
    EXPECT_THROW(fit_mle(s), input_error);
}

TEST(OuProcess, BuildSpreadValidation) {
    price_series s1, s2;
    s1.values = {100.0, 101.0, 102.0};
    s2.values = {80.0, 79.0, 81.0};
    const auto sp = build_spread(s1, s2, 1.0, 0.5);
    ASSERT_EQ(sp.values.size(), 3u);
    EXPECT_DOUBLE_EQ(sp.values[0], 1.0 - 0.5);
    EXPECT_DOUBLE_EQ(sp.values[1], 101.0 / 100.0 - 0.5 * 79.0 / 80.0);

    price_series bad = s2;
    bad.values.pop_back();
    EXPECT_THROW(build_spread(s1, bad, 1.0, 0.5), input_error);
    bad = s2;
    bad.dt = 1.0 / 52.0;
    EXPECT_THROW(build_spread(s1, bad, 1.0, 0.5), input_error);
    bad = s2;
    bad.values[0] = 0.0;
    EXPECT_THROW(build_spread(s1, bad, 1.0, 0.5), input_error);
    s1.dates = {"2020-01-02", "2020-01-03", "2020-01-06"};
    s2.dates = {"2020-01-02", "2020-01-03", "2020-01-07"};
    EXPECT_THROW(build_spread(s1, s2, 1.0, 0.5), input_error);
    s2.dates = s1.dates;
    EXPECT_EQ(build_spread(s1, s2, 1.0, 0.5).dates, s1.dates);
}

TEST(OuProcess, BetaSelectionIsRowwiseArgmax) {
    // pair whose spread at B = 0.45 is exactly an OU path plus a share of the
    // noisy long leg for other B
    const model_params p{0.30, 10.0, 0.25};
    const double dt = 1.0 / 252.0;
    const auto x = simulate_exact(p, p.theta, dt, 500, 11);
    price_series s1, s2;
    s1.dt = s2.dt = dt;
    const double s1_0 = 100.0, s2_0 = 80.0, b_true = 0.45;
    s1.values.resize(x.values.size());
    s2.values.resize(x.values.size());
    normal_source drift(99);
    double level = s1_0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        s1.values[i] = level;
        s2.values[i] = (s1.values[i] / s1_0 - x.values[i]) * s2_0 / b_true;
        level *= std::exp(0.0002 + 0.01 * drift());
    }
    std::vector<double> grid;
    for (double b = 0.20; b <= 0.801; b += 0.05) grid.push_back(b);
    const auto sel = select_beta_star(s1, s2, 1.0, grid);
    ASSERT_EQ(sel.curve.size(), grid.size());
    double best_ll = -1e300, best_b = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto direct = fit_mle(build_spread(s1, s2, 1.0, grid[i]));
        ASSERT_TRUE(sel.curve[i].ok);
        EXPECT_DOUBLE_EQ(sel.curve[i].avg_loglik, direct.avg_loglik);
        if (direct.avg_loglik > best_ll) {
            best_ll = direct.avg_loglik;
            best_b = grid[i];
        }
    }
    EXPECT_DOUBLE_EQ(sel.b_star, best_b);
    EXPECT_DOUBLE_EQ(sel.fit.avg_loglik, best_ll);
    // the spread at the selected weight is the best OU description of the pair
    for (const auto& row : sel.curve) EXPECT_LE(row.avg_loglik, sel.fit.avg_loglik);
}

TEST(OuProcess, BetaSelectionSkipsFailures) {
    const model_params p{0.30, 10.0, 0.25};
    const auto x = simulate_exact(p, p.theta, 1.0 / 252.0, 300, 5);
    price_series s1, s2;
    s1.dt = s2.dt = 1.0 / 252.0;
    s1.values.assign(x.values.size(), 0.0);
    s2.values.resize(x.values.size());
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        s1.values[i] = 100.0 + static_cast<double>(i) * 0.01;
        s2.values[i] = (s1.values[i] / 100.0 - x.values[i]) * 80.0 / 0.45;
    }
    // b = 0 keeps only the trending long leg: the fit has a unit root and fails
    const auto sel = select_beta_star(s1, s2, 1.0, {0.0, 0.45});
    EXPECT_NEAR(sel.b_star, 0.45, 1e-12);
    ASSERT_EQ(sel.curve.size(), 2u);
    EXPECT_FALSE(sel.curve[0].ok);
    EXPECT_TRUE(std::isnan(sel.curve[0].avg_loglik));
    EXPECT_TRUE(sel.curve[1].ok);
    EXPECT_THROW(select_beta_star(s1, s2, 1.0, {}), input_error);
    EXPECT_THROW(select_beta_star(s1, s2, 1.0, {0.0}), calibration_error);
}
