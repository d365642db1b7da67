#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "golden_values.hpp"
#include "meanrev/double_stopping.hpp"
#include "meanrev/verify.hpp"

using namespace meanrev;

namespace {

const check_result* find(const std::vector<check_result>& res, const std::string& name) {
    for (const auto& c : res)
        if (c.name == name) return &c;
    return nullptr;
}

std::string failing(const std::vector<check_result>& res) {
    std::string s;
    for (const auto& c : res)
        if (!c.skipped && !c.passed)
            s += c.name + " (measure " + std::to_string(c.measure) + " vs " +
                 std::to_string(c.threshold) + (c.note.empty() ? "" : ", " + c.note) + "); ";
    return s.empty() ? "none" : s;
}

void expect_present_passed(const std::vector<check_result>& res, const char* name) {
    const auto* c = find(res, name);
    ASSERT_NE(c, nullptr) << name << " not reported";
    EXPECT_FALSE(c->skipped) << name;
    EXPECT_TRUE(c->passed) << name << ": measure " << c->measure << " vs " << c->threshold
                           << " " << c->note;
}

}  // namespace

TEST(Verify, AllChecksPassOnGen) {
    const problem pr{golden::gen_model, golden::gen_disc, {}};
    verify_options opts;
    opts.stop_loss = golden::gen_L;
    const auto res = run_verification(pr, opts);
    EXPECT_TRUE(all_passed(res)) << failing(res);
    for (const auto& c : res) EXPECT_FALSE(c.skipped) << c.name << ": " << c.note;
    for (const char* name :
         {"reflection_identity", "gamma_identity_r", "psi_inverse_roundtrip",
          "threshold_ordering", "smooth_pasting_V", "smooth_pasting_J", "vi_V_nonneg",
          "vi_V_compl", "vi_J_compl", "translation_identity_exit", "brownian_limit_b",
          "stoploss_sandwich", "stoploss_pasting_VL", "stoploss_boundary_VL", "vi_VL_compl",
          "stoploss_bL_monotone", "stoploss_entry_ordering", "stoploss_pasting_JL",
          "vi_JL_compl", "mc_laplace_up", "mc_laplace_down", "argmax_exit_consistency",
          "mc_grid_argmax_exit"})
        expect_present_passed(res, name);
}

TEST(Verify, AllChecksPassOnLowc) {
    const problem pr{golden::fig_model, golden::lowc_disc, {}};
    verify_options opts;
    opts.stop_loss = golden::lowc_L;
    const auto res = run_verification(pr, opts);
    EXPECT_TRUE(all_passed(res)) << failing(res);
    for (const auto& c : res) EXPECT_FALSE(c.skipped) << c.name << ": " << c.note;
    expect_present_passed(res, "stoploss_entry_ordering");
    expect_present_passed(res, "mc_grid_argmax_exit");
}

TEST(Verify, DegenerateStopLossSkips) {
    const problem pr{golden::gen_model, golden::gen_disc, {}};
    verify_options opts;
    opts.stop_loss = l_star(pr) - 1e-9;
    opts.run_mc = false;
    const auto res = run_verification(pr, opts);
    const auto* sandwich = find(res, "stoploss_sandwich");
    ASSERT_NE(sandwich, nullptr);
    EXPECT_TRUE(sandwich->skipped);
    const auto* vl = find(res, "vi_VL");
    ASSERT_NE(vl, nullptr);
    EXPECT_TRUE(vl->skipped);
    EXPECT_EQ(find(res, "stoploss_pasting_VL"), nullptr);
    EXPECT_EQ(find(res, "stoploss_entry_ordering"), nullptr);
    EXPECT_TRUE(all_passed(res)) << failing(res);
}

TEST(Verify, TrivialEntrySkips) {
    const problem pr{golden::fig_model, golden::fig_disc, {}};
    verify_options opts;
    opts.stop_loss = golden::fig_L;
    opts.run_mc = false;
    const auto res = run_verification(pr, opts);
    expect_present_passed(res, "stoploss_sandwich");
    expect_present_passed(res, "stoploss_pasting_VL");
    const auto* ord = find(res, "stoploss_entry_ordering");
    ASSERT_NE(ord, nullptr);
    EXPECT_TRUE(ord->skipped);
    const auto* jl = find(res, "vi_JL");
    ASSERT_NE(jl, nullptr);
    EXPECT_TRUE(jl->skipped);
    EXPECT_EQ(find(res, "stoploss_pasting_JL"), nullptr);
    EXPECT_TRUE(all_passed(res)) << failing(res);
}

TEST(Verify, PerturbedBStarFails) {
    const problem pr{golden::gen_model, golden::gen_disc, {}};
    verify_options opts;
    opts.b_star_shift = 0.01;
    const auto res = run_verification(pr, opts);
    EXPECT_FALSE(all_passed(res));
    const auto* paste = find(res, "smooth_pasting_V");
    ASSERT_NE(paste, nullptr);
    EXPECT_FALSE(paste->passed) << "measure " << paste->measure;
    const auto* argmax = find(res, "argmax_exit_consistency");
    ASSERT_NE(argmax, nullptr);
    EXPECT_FALSE(argmax->skipped);
    EXPECT_FALSE(argmax->passed) << "measure " << argmax->measure;
}

TEST(Verify, McCanBeDisabled) {
    const problem pr{golden::gen_model, golden::gen_disc, {}};
    verify_options opts;
    opts.run_mc = false;
    const auto res = run_verification(pr, opts);
    EXPECT_EQ(find(res, "mc_laplace_up"), nullptr);
    EXPECT_EQ(find(res, "mc_grid_argmax_exit"), nullptr);
    EXPECT_EQ(find(res, "argmax_exit_consistency"), nullptr);
    EXPECT_TRUE(all_passed(res)) << failing(res);
}

TEST(Verify, NoStopLossOmitsStopLossChecks) {
    const problem pr{golden::slv_model, golden::slv_disc, {}};
    verify_options opts;
    opts.run_mc = false;
    const auto res = run_verification(pr, opts);
    for (const auto& c : res)
        EXPECT_TRUE(c.name.rfind("stoploss_", 0) != 0 && c.name.rfind("vi_VL", 0) != 0 &&
                    c.name.rfind("vi_JL", 0) != 0)
            << c.name;
    expect_present_passed(res, "smooth_pasting_V");
    expect_present_passed(res, "vi_J_nonneg");
    EXPECT_TRUE(all_passed(res)) << failing(res);
}
