// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ovprep/token_budget.hpp"

namespace ovprep {
namespace {

TEST(Threshold, UntriggeredKeepsFullViews) {
  EXPECT_EQ(tokens_after_threshold({2, 2}, 729, 7290), 729);
  EXPECT_EQ(tokens_after_threshold({3, 3}, 729, 7290), 729);  // 10 views x 729 = 7290 exactly
}

TEST(Threshold, TriggeredFloorsTheShare) {
  EXPECT_EQ(tokens_after_threshold({6, 6}, 729, 7290), 197);  // 7290 / 37 = 197.03
  EXPECT_EQ(tokens_after_threshold({4, 3}, 729, 7290), 560);  // 7290 / 13 = 560.77
}

TEST(Threshold, ErrorsWhenBudgetCannotCoverViews) {
  try {
    tokens_after_threshold({6, 6}, 729, 36);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  EXPECT_EQ(tokens_after_threshold({6, 6}, 729, 37), 1);
  EXPECT_THROW(tokens_after_threshold({1, 1}, 0, 100), Error);
}

TEST(PlanSingleImage, WorkedValue) {
  const auto plan = plan_single_image({2304, 2304}, default_catalog(), {}, single_image_policy());
  EXPECT_EQ(plan.per_view_tokens.size(), 37u);
  EXPECT_EQ(plan.per_view_tokens.front(), 197);
  EXPECT_EQ(plan.total, 7289);
}

TEST(PlanSingleImage, NeverExceedsTauAndIsExactWhenUntriggered) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> dim(1, 6000);
  const auto cat = default_catalog();
  const auto policy = single_image_policy();
  for (int i = 0; i < 3000; ++i) {
    const ImageShape s{dim(rng), dim(rng)};
    const auto plan = plan_single_image(s, cat, {}, policy);
    ASSERT_LE(plan.total, 7290);
    const auto views = select_config(s, cat).crop_count() + 1;
    if (views * 729 <= 7290) {
      ASSERT_EQ(plan.total, views * 729);
    }
    ASSERT_EQ(static_cast<std::int64_t>(plan.per_view_tokens.size()), views);
  }
}

TEST(PlanSingleImage, MonotoneInTau) {
  const auto cat = default_catalog();
  auto policy = single_image_policy();
  std::int64_t prev = 0;
  for (std::int64_t tau = 100; tau <= 30000; tau += 97) {
    policy.tau = tau;
    const auto total = plan_single_image({2304, 1536}, cat, {}, policy).total;
    ASSERT_GE(total, prev);
    prev = total;
  }
}

TEST(PlanSingleImage, RejectsWrongScenarioPolicy) {
  EXPECT_THROW(plan_single_image({10, 10}, default_catalog(), {}, video_policy()), Error);
}

TEST(PlanVideo, ClampsToFrameCap) {
  const auto plan = plan_video(100, video_policy());
  EXPECT_EQ(plan.per_view_tokens.size(), 32u);
  EXPECT_EQ(plan.per_view_tokens.front(), 196);
  EXPECT_EQ(plan.total, 6272);
  EXPECT_EQ(plan_video(8, video_policy()).total, 8 * 196);
}

TEST(PlanVideo, MonotoneInFrames) {
  std::int64_t prev = 0;
  for (std::int64_t n = 1; n <= 64; ++n) {
    const auto total = plan_video(n, video_policy()).total;
    ASSERT_GE(total, prev);
    prev = total;
  }
}

TEST(PlanMultiImage, StripsPaddingPerImage) {
  const std::vector<ImageShape> shapes{{384, 384}, {768, 384}};
  const auto plan = plan_multi_image(std::span<const ImageShape>(shapes), {}, multi_image_policy());
  ASSERT_EQ(plan.per_view_tokens.size(), 2u);
  EXPECT_EQ(plan.per_view_tokens[0], 729);
  // 192 px of content in a 384 px frame of 27 bands: rows 7..19 reach half
  // coverage, so 13 rows x 27 columns survive.
  EXPECT_EQ(plan.per_view_tokens[1], 13 * 27);
  EXPECT_EQ(plan.total, 729 + 351);
}

TEST(PlanMultiImage, RejectsTooManyImages) {
  const std::vector<ImageShape> shapes(13, ImageShape{384, 384});
  EXPECT_THROW(plan_multi_image(std::span<const ImageShape>(shapes), {}, multi_image_policy()), Error);
  const std::vector<ImageShape> twelve(12, ImageShape{384, 384});
  EXPECT_EQ(plan_multi_image(std::span<const ImageShape>(twelve), {}, multi_image_policy()).total, 8748);
}

TEST(ScenarioMaxima, DefaultsAreBalanced) {
  const auto policies = default_policies();
  const auto maxima = scenario_maxima(policies);
  EXPECT_EQ(maxima.at(Scenario::kSingleImage), 7290);
  EXPECT_EQ(maxima.at(Scenario::kMultiImage), 8748);
  EXPECT_EQ(maxima.at(Scenario::kVideo), 6272);
  EXPECT_EQ(EncoderGeom{}.pooled_tokens(), 196);
}

TEST(ScenarioMaxima, RejectsDuplicateScenario) {
  const std::vector<ScenarioPolicy> dup{single_image_policy(), single_image_policy()};
  EXPECT_THROW(scenario_maxima(dup), Error);
}

}  // namespace
}  // namespace ovprep
