// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Per-record packing: parse a JSONL sample, check its markers, plan visual
// tokens for each attached medium, build and expand the sequence, and
// optionally run the stand-in encoder so feature token counts can be checked
// against the plan.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ovprep/error.hpp"
#include "ovprep/feature_grid.hpp"
#include "ovprep/geometry.hpp"
#include "ovprep/sample.hpp"
#include "ovprep/sequence.hpp"
#include "ovprep/token_budget.hpp"

namespace ovprep {

struct PipelineConfig {
  TemplateSpec tmpl;
  EncoderGeom geom;
  GridCatalog catalog = default_catalog();
  ScenarioPolicy single = single_image_policy();
  ScenarioPolicy multi = multi_image_policy();
  ScenarioPolicy video = video_policy();
  /// Used for images without a recorded size.
  ImageShape fallback_shape{384, 384};
  /// Channels of the stand-in encoder; 0 skips feature generation.
  int feature_dim = 0;
};

/// One token plan per attached medium, indexed like RawSample::media.
/// A video without a recorded frame count is planned at the frame cap.
inline std::vector<TokenPlan> plan_media(const RawSample& sample, const PipelineConfig& cfg) {
  std::vector<TokenPlan> plans;
  if (sample.media.empty()) return plans;
  if (sample.has_video()) {
    const auto frames = sample.media.front().frames.value_or(cfg.video.max_views);
    plans.push_back(plan_video(frames, cfg.video));
    return plans;
  }
  if (sample.media.size() == 1) {
    const auto shape = sample.media.front().shape.value_or(cfg.fallback_shape);
    plans.push_back(plan_single_image(shape, cfg.catalog, cfg.geom, cfg.single));
    return plans;
  }
  std::vector<ImageShape> shapes;
  for (const auto& m : sample.media) shapes.push_back(m.shape.value_or(cfg.fallback_shape));
  const auto combined = plan_multi_image(std::span<const ImageShape>(shapes), cfg.geom, cfg.multi);
  for (auto kept : combined.per_view_tokens) {
    plans.push_back(TokenPlan{Scenario::kMultiImage, {kept}, kept});
  }
  return plans;
}

namespace detail {

inline void append_tokens(FeatureGrid& dst, const FeatureGrid& src) {
  dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
  dst.cols += static_cast<int>(src.token_count());
}

}  // namespace detail

/// Stand-in encoder output for one medium, flattened to 1 x total tokens.
inline FeatureGrid mock_features(const MediaDescriptor& media, const TokenPlan& plan, const PipelineConfig& cfg) {
  const int side = cfg.geom.grid_side;
  const int dim = cfg.feature_dim;
  FeatureGrid out(1, 0, dim);
  switch (plan.scenario) {
    case Scenario::kSingleImage: {
      const auto shape = media.shape.value_or(cfg.fallback_shape);
      const auto crops = plan_crops(shape, cfg.catalog);
      for (std::size_t v = 0; v < crops.view_count(); ++v) {
        const auto grid = mock_encode(crops, v, side, dim);
        detail::append_tokens(out, reduce_to_tokens(grid, static_cast<int>(plan.per_view_tokens.at(v))));
      }
      break;
    }
    case Scenario::kMultiImage: {
      const auto pad = pad_to_square(media.shape.value_or(cfg.fallback_shape), cfg.geom.base_edge_px);
      detail::append_tokens(out, strip_padding(mock_encode(pad, side, dim), pad));
      break;
    }
    case Scenario::kVideo: {
      for (std::size_t f = 0; f < plan.per_view_tokens.size(); ++f) {
        const auto frame = mock_encode_frame(f, side, dim);
        const auto want = plan.per_view_tokens[f];
        if (want == cfg.geom.pooled_tokens()) {
          detail::append_tokens(out, pool_2x2(frame));
        } else {
          detail::append_tokens(out, reduce_to_tokens(frame, static_cast<int>(want)));
        }
      }
      break;
    }
  }
  if (static_cast<std::int64_t>(out.token_count()) != plan.total) {
    throw Error(ErrorCode::kPlanMismatch, "encoded " + std::to_string(out.token_count()) +
                                              " tokens for a plan of " + std::to_string(plan.total));
  }
  return out;
}

enum class PackStatus { kPacked, kFlagged, kMalformed };

struct PackResult {
  std::size_t line_number = 0;
  std::string id;
  PackStatus status = PackStatus::kPacked;
  std::string reason;
  PackedSequence sequence;
  std::vector<TokenPlan> plans;
  std::vector<FeatureGrid> features;
};

template <Tokenizer Tok>
PackResult pack_sample(const RawSample& sample, const Tok& tok, const PipelineConfig& cfg) {
  PackResult result;
  result.id = sample.id;
  const auto verdict = check_markers(sample, cfg.tmpl.image_marker);
  if (!verdict.clean) {
    result.status = PackStatus::kFlagged;
    result.reason = verdict.reason;
    return result;
  }
  const auto conv = to_conversation(sample, cfg.tmpl.image_marker);
  const auto media_plans = plan_media(sample, cfg);
  const auto raw = build_sequence(conv, tok, cfg.tmpl);
  std::vector<TokenPlan> ordered;
  for (const auto& span : raw.spans) {
    if (span.kind == SpanKind::kVision) ordered.push_back(media_plans.at(static_cast<std::size_t>(span.media)));
  }
  result.sequence = expand(raw, ordered);
  result.plans = media_plans;
  if (cfg.feature_dim > 0) {
    for (std::size_t m = 0; m < sample.media.size(); ++m) {
      result.features.push_back(mock_features(sample.media[m], media_plans[m], cfg));
    }
  }
  return result;
}

/// Never throws for bad input: parse and planning failures come back as
/// kMalformed with the error text.
template <Tokenizer Tok>
PackResult pack_line(std::string_view line, std::size_t line_number, const Tok& tok, const PipelineConfig& cfg) {
  PackResult result;
  try {
    result = pack_sample(parse_sample_line(line), tok, cfg);
  } catch (const Error& e) {
    result = PackResult{};
    result.status = PackStatus::kMalformed;
    result.reason = e.what();
  }
  result.line_number = line_number;
  return result;
}

/// Packed sequence lengths bucketed by power-of-two upper bound.
inline std::map<std::size_t, std::size_t> length_histogram(const std::vector<std::size_t>& lengths) {
  std::map<std::size_t, std::size_t> hist;
  for (auto n : lengths) {
    std::size_t bound = 1;
    while (bound < n) bound <<= 1;
    ++hist[bound];
  }
  return hist;
}

}  // namespace ovprep
