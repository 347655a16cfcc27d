// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// AnyRes spatial planning: which a x b grid an image is cut into, where the
// resized image sits on the crop canvas, and how a single image is padded
// into a square encoder frame.
//
// Everything here is integer pixel arithmetic on value types.

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "ovprep/error.hpp"

namespace ovprep {

struct ImageShape {
  std::int64_t width_px = 0;
  std::int64_t height_px = 0;

  bool valid() const { return width_px >= 1 && height_px >= 1; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

inline void require_valid(const ImageShape& shape) {
  if (!shape.valid()) {
    throw Error(ErrorCode::kInvalidShape,
                "image shape must be at least 1x1, got " + std::to_string(shape.width_px) + "x" +
                    std::to_string(shape.height_px));
  }
}

/// a crops along the width, b crops along the height.
struct SpatialConfig {
  int a = 1;
  int b = 1;

  std::int64_t crop_count() const { return std::int64_t{a} * b; }
  friend bool operator==(const SpatialConfig&, const SpatialConfig&) = default;
  friend auto operator<=>(const SpatialConfig&, const SpatialConfig&) = default;
};

inline std::string to_string(const SpatialConfig& c) {
  return std::to_string(c.a) + "x" + std::to_string(c.b);
}

struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;

  std::int64_t area() const { return width * height; }
  bool empty() const { return width <= 0 || height <= 0; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// The set of grids a planner may choose from. Always contains 1x1 and has
/// no duplicates.
class GridCatalog {
 public:
  GridCatalog(std::int64_t base_edge_px, std::vector<SpatialConfig> configs)
      : base_edge_px_(base_edge_px), configs_(std::move(configs)) {
    if (base_edge_px_ <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "base edge must be positive");
    }
    if (configs_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "grid catalog must not be empty");
    }
    for (const auto& c : configs_) {
      if (c.a < 1 || c.b < 1) {
        throw Error(ErrorCode::kInvalidArgument, "grid " + to_string(c) + " has a zero axis");
      }
    }
    auto sorted = configs_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::kInvalidArgument, "grid catalog has duplicate configs");
    }
    if (!std::binary_search(sorted.begin(), sorted.end(), SpatialConfig{1, 1})) {
      throw Error(ErrorCode::kInvalidArgument, "grid catalog must contain 1x1");
    }
  }

  /// Every a x b with 1 <= a <= max_a, 1 <= b <= max_b.
  static GridCatalog up_to(int max_a, int max_b, std::int64_t base_edge_px = 384) {
    std::vector<SpatialConfig> configs;
    for (int b = 1; b <= max_b; ++b) {
      for (int a = 1; a <= max_a; ++a) configs.push_back({a, b});
    }
    return GridCatalog(base_edge_px, std::move(configs));
  }

  /// Builds a catalog from a listed grid set, adding 1x1 when the list omits it.
  static GridCatalog with_fallback(std::vector<SpatialConfig> configs,
                                   std::int64_t base_edge_px = 384) {
    if (std::find(configs.begin(), configs.end(), SpatialConfig{1, 1}) == configs.end()) {
      configs.insert(configs.begin(), SpatialConfig{1, 1});
    }
    return GridCatalog(base_edge_px, std::move(configs));
  }

  std::int64_t base_edge_px() const { return base_edge_px_; }
  const std::vector<SpatialConfig>& configs() const { return configs_; }

  friend bool operator==(const GridCatalog&, const GridCatalog&) = default;

 private:
  std::int64_t base_edge_px_;
  std::vector<SpatialConfig> configs_;
};

inline GridCatalog default_catalog() { return GridCatalog::up_to(6, 6, 384); }

/// Aspect-preserving placement of a width x height image inside a canvas:
/// the binding axis fills the canvas, the other is rounded to the nearest
/// pixel (at least 1) and centered.
inline Rect fit_centered(const ImageShape& shape, std::int64_t canvas_w, std::int64_t canvas_h) {
  require_valid(shape);
  const auto w = shape.width_px;
  const auto h = shape.height_px;
  std::int64_t content_w = 0;
  std::int64_t content_h = 0;
  // canvas_w / w <= canvas_h / h  <=>  width binds.
  if (static_cast<__int128>(canvas_w) * h <= static_cast<__int128>(canvas_h) * w) {
    content_w = canvas_w;
    content_h = static_cast<std::int64_t>((static_cast<__int128>(2) * h * canvas_w + w) / (2 * w));
  } else {
    content_h = canvas_h;
    content_w = static_cast<std::int64_t>((static_cast<__int128>(2) * w * canvas_h + h) / (2 * h));
  }
  content_w = std::clamp<std::int64_t>(content_w, 1, canvas_w);
  content_h = std::clamp<std::int64_t>(content_h, 1, canvas_h);
  return Rect{(canvas_w - content_w) / 2, (canvas_h - content_h) / 2, content_w, content_h};
}

namespace detail {

// Exact comparison of min(a*B/w, b*B/h) between two configs.
struct Fraction {
  __int128 num;
  __int128 den;
};

inline Fraction effective_scale(const ImageShape& shape, const SpatialConfig& c, std::int64_t edge) {
  const Fraction sx{static_cast<__int128>(c.a) * edge, shape.width_px};
  const Fraction sy{static_cast<__int128>(c.b) * edge, shape.height_px};
  return (sx.num * sy.den <= sy.num * sx.den) ? sx : sy;
}

inline int compare(const Fraction& l, const Fraction& r) {
  const __int128 lhs = l.num * r.den;
  const __int128 rhs = r.num * l.den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

inline std::int64_t wasted_area(const ImageShape& shape, const SpatialConfig& c, std::int64_t edge) {
  const auto cw = c.a * edge;
  const auto ch = c.b * edge;
  return cw * ch - fit_centered(shape, cw, ch).area();
}

}  // namespace detail

/// True when the a x b canvas is at least as large as the image on both axes.
inline bool covers(const SpatialConfig& c, const ImageShape& shape, std::int64_t base_edge_px) {
  return c.a * base_edge_px >= shape.width_px && c.b * base_edge_px >= shape.height_px;
}

/// Picks the grid for an image. Covering grids win; among them the fewest
/// crops, then the least canvas left unfilled by the fitted image, then
/// lexicographic (a, b). When nothing covers, the grid that keeps the most
/// resolution wins, with the same tie-breaks.
inline SpatialConfig select_config(const ImageShape& shape, const GridCatalog& catalog) {
  require_valid(shape);
  const auto edge = catalog.base_edge_px();

  const SpatialConfig* best = nullptr;
  bool best_covers = false;
  for (const auto& c : catalog.configs()) {
    const bool c_covers = covers(c, shape, edge);
    if (best == nullptr) {
      best = &c;
      best_covers = c_covers;
      continue;
    }
    if (c_covers != best_covers) {
      if (c_covers) {
        best = &c;
        best_covers = true;
      }
      continue;
    }
    if (!c_covers) {
      const int cmp = detail::compare(detail::effective_scale(shape, c, edge),
                                      detail::effective_scale(shape, *best, edge));
      if (cmp > 0) {
        best = &c;
        continue;
      }
      if (cmp < 0) continue;
    }
    const auto key = [&](const SpatialConfig& x) {
      return std::make_tuple(x.crop_count(), detail::wasted_area(shape, x, edge), x.a, x.b);
    };
    if (key(c) < key(*best)) best = &c;
  }
  return *best;
}

struct CropPlan {
  SpatialConfig config;
  std::int64_t base_edge_px = 0;
  std::int64_t canvas_w_px = 0;
  std::int64_t canvas_h_px = 0;
  /// Where the resized source sits on the canvas; the rest is zero padding.
  Rect content;
  /// Row-major, top-left origin, each base_edge x base_edge.
  std::vector<Rect> crop_rects;
  /// The whole image is also resized to base_edge x base_edge and encoded
  /// first, ahead of the crops.
  bool base_view = true;

  std::int64_t resized_w_px() const { return content.width; }
  std::int64_t resized_h_px() const { return content.height; }
  std::size_t view_count() const { return crop_rects.size() + (base_view ? 1 : 0); }

  friend bool operator==(const CropPlan&, const CropPlan&) = default;
};

inline CropPlan plan_crops(const ImageShape& shape, const SpatialConfig& config,
                           std::int64_t base_edge_px) {
  require_valid(shape);
  if (base_edge_px <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "base edge must be positive");
  }
  if (config.a < 1 || config.b < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid " + to_string(config) + " has a zero axis");
  }
  CropPlan plan;
  plan.config = config;
  plan.base_edge_px = base_edge_px;
  plan.canvas_w_px = config.a * base_edge_px;
  plan.canvas_h_px = config.b * base_edge_px;
  plan.content = fit_centered(shape, plan.canvas_w_px, plan.canvas_h_px);
  plan.crop_rects.reserve(static_cast<std::size_t>(config.crop_count()));
  for (int row = 0; row < config.b; ++row) {
    for (int col = 0; col < config.a; ++col) {
      plan.crop_rects.push_back(
          Rect{col * base_edge_px, row * base_edge_px, base_edge_px, base_edge_px});
    }
  }
  return plan;
}

inline CropPlan plan_crops(const ImageShape& shape, const GridCatalog& catalog) {
  return plan_crops(shape, select_config(shape, catalog), catalog.base_edge_px());
}

/// Aspect-preserving fit of one image into a zero-padded square frame.
struct PadSpec {
  std::int64_t canvas_edge_px = 0;
  Rect content_rect;

  friend bool operator==(const PadSpec&, const PadSpec&) = default;
};

inline PadSpec pad_to_square(const ImageShape& shape, std::int64_t canvas_edge_px) {
  if (canvas_edge_px <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "canvas edge must be positive");
  }
  return PadSpec{canvas_edge_px, fit_centered(shape, canvas_edge_px, canvas_edge_px)};
}

}  // namespace ovprep
