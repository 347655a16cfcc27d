// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Visual token accounting per scenario. A single image spends (a*b + 1)
// views of T tokens each, cut down uniformly when that exceeds the
// threshold tau; multi-image samples spend one padded-and-stripped base view
// per image; video spends a fixed pooled budget per frame.

#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ovprep/error.hpp"
#include "ovprep/feature_grid.hpp"
#include "ovprep/geometry.hpp"

namespace ovprep {

struct EncoderGeom {
  std::int64_t base_edge_px = 384;
  int grid_side = 27;

  std::int64_t tokens_per_view() const { return std::int64_t{grid_side} * grid_side; }
  /// Side of a frame grid after 2x2 pooling, rounding up.
  int pooled_side() const { return (grid_side + 1) / 2; }
  std::int64_t pooled_tokens() const { return std::int64_t{pooled_side()} * pooled_side(); }
};

enum class Scenario { kSingleImage, kMultiImage, kVideo };

constexpr std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kSingleImage: return "single-image";
    case Scenario::kMultiImage: return "multi-image";
    case Scenario::kVideo: return "video";
  }
  return "unknown";
}

struct ScenarioPolicy {
  Scenario scenario = Scenario::kSingleImage;
  std::int64_t tau = 7290;
  int max_views = 1;
  std::int64_t video_frame_tokens = 196;

  void validate() const {
    if (tau <= 0) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
    if (max_views < 1) throw Error(ErrorCode::kInvalidArgument, "max views must be at least 1");
    if (video_frame_tokens < 1) {
      throw Error(ErrorCode::kInvalidArgument, "frame token count must be positive");
    }
  }
};

inline ScenarioPolicy single_image_policy(const EncoderGeom& geom = {}) {
  return ScenarioPolicy{Scenario::kSingleImage, geom.tokens_per_view() * 10, 1, geom.pooled_tokens()};
}

inline ScenarioPolicy multi_image_policy(const EncoderGeom& geom = {}) {
  return ScenarioPolicy{Scenario::kMultiImage, geom.tokens_per_view() * 12, 12, geom.pooled_tokens()};
}

inline ScenarioPolicy video_policy(const EncoderGeom& geom = {}) {
  return ScenarioPolicy{Scenario::kVideo, geom.pooled_tokens() * 32, 32, geom.pooled_tokens()};
}

struct TokenPlan {
  Scenario scenario = Scenario::kSingleImage;
  std::vector<std::int64_t> per_view_tokens;
  std::int64_t total = 0;

  friend bool operator==(const TokenPlan&, const TokenPlan&) = default;
};

/// Per-view token count after the threshold: T when (a*b + 1) * T <= tau,
/// otherwise floor(tau / (a*b + 1)).
inline std::int64_t tokens_after_threshold(const SpatialConfig& config, std::int64_t tokens_per_view,
                                           std::int64_t tau) {
  if (tokens_per_view <= 0) throw Error(ErrorCode::kInvalidArgument, "T must be positive");
  if (tau <= 0) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  const std::int64_t views = config.crop_count() + 1;
  if (views * tokens_per_view <= tau) return tokens_per_view;
  if (tau < views) {
    throw Error(ErrorCode::kBudgetExceeded, "tau " + std::to_string(tau) + " leaves no token for each of " +
                                                std::to_string(views) + " views");
  }
  return tau / views;
}

inline TokenPlan plan_single_image(const ImageShape& shape, const GridCatalog& catalog,
                                   const EncoderGeom& geom, const ScenarioPolicy& policy) {
  policy.validate();
  if (policy.scenario != Scenario::kSingleImage) {
    throw Error(ErrorCode::kInvalidArgument, "single-image planning needs a single-image policy");
  }
  const auto config = select_config(shape, catalog);
  const auto per_view = tokens_after_threshold(config, geom.tokens_per_view(), policy.tau);
  const auto views = static_cast<std::size_t>(config.crop_count() + 1);
  TokenPlan plan{Scenario::kSingleImage, std::vector<std::int64_t>(views, per_view), 0};
  plan.total = per_view * static_cast<std::int64_t>(views);
  return plan;
}

/// Base view only, no crops (the alignment-stage representation).
inline TokenPlan plan_base_only(const EncoderGeom& geom) {
  return TokenPlan{Scenario::kSingleImage, {geom.tokens_per_view()}, geom.tokens_per_view()};
}

/// Tokens kept for one image after padding it into the square frame and
/// dropping padding-only rows/columns.
inline std::int64_t kept_tokens_for_image(const ImageShape& shape, const EncoderGeom& geom) {
  const auto pad = pad_to_square(shape, geom.base_edge_px);
  return static_cast<std::int64_t>(strip_window(pad, geom.grid_side, geom.grid_side).token_count());
}

inline TokenPlan plan_multi_image(std::span<const std::int64_t> per_image_kept, const EncoderGeom& geom,
                                  const ScenarioPolicy& policy) {
  policy.validate();
  if (policy.scenario != Scenario::kMultiImage) {
    throw Error(ErrorCode::kInvalidArgument, "multi-image planning needs a multi-image policy");
  }
  if (per_image_kept.size() > static_cast<std::size_t>(policy.max_views)) {
    throw Error(ErrorCode::kBudgetExceeded, std::to_string(per_image_kept.size()) +
                                                " images exceed the limit of " +
                                                std::to_string(policy.max_views));
  }
  for (auto kept : per_image_kept) {
    if (kept < 1 || kept > geom.tokens_per_view()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "kept token count " + std::to_string(kept) + " outside [1, " +
                      std::to_string(geom.tokens_per_view()) + "]");
    }
  }
  TokenPlan plan{Scenario::kMultiImage, {per_image_kept.begin(), per_image_kept.end()}, 0};
  plan.total = std::accumulate(plan.per_view_tokens.begin(), plan.per_view_tokens.end(), std::int64_t{0});
  return plan;
}

inline TokenPlan plan_multi_image(std::span<const ImageShape> shapes, const EncoderGeom& geom,
                                  const ScenarioPolicy& policy) {
  std::vector<std::int64_t> kept;
  kept.reserve(shapes.size());
  for (const auto& s : shapes) kept.push_back(kept_tokens_for_image(s, geom));
  return plan_multi_image(std::span<const std::int64_t>(kept), geom, policy);
}

/// min(n_frames, max_views) frames at the pooled per-frame budget.
inline TokenPlan plan_video(std::int64_t n_frames, const ScenarioPolicy& policy) {
  policy.validate();
  if (policy.scenario != Scenario::kVideo) {
    throw Error(ErrorCode::kInvalidArgument, "video planning needs a video policy");
  }
  if (n_frames < 1) throw Error(ErrorCode::kInvalidArgument, "a video needs at least one frame");
  const auto frames = static_cast<std::size_t>(std::min<std::int64_t>(n_frames, policy.max_views));
  TokenPlan plan{Scenario::kVideo, std::vector<std::int64_t>(frames, policy.video_frame_tokens), 0};
  plan.total = policy.video_frame_tokens * static_cast<std::int64_t>(frames);
  return plan;
}

/// Largest visual token total each scenario's policy admits.
inline std::int64_t scenario_maximum(const ScenarioPolicy& policy, const EncoderGeom& geom) {
  policy.validate();
  switch (policy.scenario) {
    case Scenario::kSingleImage: return policy.tau;
    case Scenario::kMultiImage: return geom.tokens_per_view() * policy.max_views;
    case Scenario::kVideo: return policy.video_frame_tokens * policy.max_views;
  }
  return 0;
}

inline std::map<Scenario, std::int64_t> scenario_maxima(std::span<const ScenarioPolicy> policies,
                                                         const EncoderGeom& geom = {}) {
  std::map<Scenario, std::int64_t> out;
  for (const auto& p : policies) {
    if (!out.emplace(p.scenario, scenario_maximum(p, geom)).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "more than one policy for scenario " + std::string(scenario_name(p.scenario)));
    }
  }
  return out;
}

inline std::vector<ScenarioPolicy> default_policies(const EncoderGeom& geom = {}) {
  return {single_image_policy(geom), multi_image_policy(geom), video_policy(geom)};
}

}  // namespace ovprep
