// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Encoder token grids and the numeric operations applied to them before
// they enter the language model: bilinear resampling (token reduction and
// video pooling), removal of tokens that only saw zero padding, and a
// deterministic stand-in encoder for end-to-end tests.
//
// Storage precision is a template parameter; all arithmetic is double.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "ovprep/error.hpp"
#include "ovprep/geometry.hpp"

namespace ovprep {

template <typename T>
struct BasicFeatureGrid {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  std::vector<T> values;  // row-major, channel innermost

  BasicFeatureGrid() = default;
  BasicFeatureGrid(int r, int c, int d)
      : rows(r), cols(c), dim(d), values(static_cast<std::size_t>(r) * c * d, T{}) {
    if (r < 0 || c < 0 || d < 0) {
      throw Error(ErrorCode::kInvalidArgument, "feature grid dimensions must be non-negative");
    }
  }

  std::size_t token_count() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t offset(int r, int c, int k = 0) const {
    return (static_cast<std::size_t>(r) * cols + c) * dim + k;
  }
  T& at(int r, int c, int k) { return values[offset(r, c, k)]; }
  const T& at(int r, int c, int k) const { return values[offset(r, c, k)]; }

  bool valid() const {
    if (rows < 0 || cols < 0 || dim < 0) return false;
    if (values.size() != static_cast<std::size_t>(rows) * cols * dim) return false;
    return std::all_of(values.begin(), values.end(),
                       [](T v) { return std::isfinite(static_cast<double>(v)); });
  }

  friend bool operator==(const BasicFeatureGrid&, const BasicFeatureGrid&) = default;
};

using FeatureGrid = BasicFeatureGrid<double>;

template <typename T>
void require_valid(const BasicFeatureGrid<T>& grid) {
  if (!grid.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "feature grid is malformed or holds non-finite values");
  }
}

struct InterpSpec {
  int out_rows = 1;
  int out_cols = 1;
};

namespace detail {

struct AxisTap {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;
};

// Half-pixel centers: output sample i sits at input coordinate
// (i + 0.5) * in / out - 0.5, clamped to the first/last input sample.
inline std::vector<AxisTap> axis_taps(int in, int out) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double src = static_cast<double>((2 * std::int64_t{i} + 1) * in - out) / (2.0 * out);
    const double clamped = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(clamped));
    const int hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = AxisTap{lo, hi, clamped - lo};
  }
  return taps;
}

// Written as v0 + t * (v1 - v0) so constants pass through bit-exactly; the
// clamp keeps the result inside [v0, v1] despite rounding.
inline double lerp_contained(double v0, double v1, double t) {
  const double v = v0 + t * (v1 - v0);
  return std::clamp(v, std::min(v0, v1), std::max(v0, v1));
}

}  // namespace detail

template <typename T>
BasicFeatureGrid<T> bilinear_resize(const BasicFeatureGrid<T>& grid, const InterpSpec& spec) {
  require_valid(grid);
  if (spec.out_rows < 1 || spec.out_cols < 1) {
    throw Error(ErrorCode::kInvalidArgument, "resize target must be at least 1x1");
  }
  if (grid.rows < 1 || grid.cols < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cannot resize an empty grid");
  }
  const auto row_taps = detail::axis_taps(grid.rows, spec.out_rows);
  const auto col_taps = detail::axis_taps(grid.cols, spec.out_cols);

  BasicFeatureGrid<T> out(spec.out_rows, spec.out_cols, grid.dim);
  for (int r = 0; r < spec.out_rows; ++r) {
    const auto& ry = row_taps[static_cast<std::size_t>(r)];
    for (int c = 0; c < spec.out_cols; ++c) {
      const auto& cx = col_taps[static_cast<std::size_t>(c)];
      for (int k = 0; k < grid.dim; ++k) {
        const double v00 = static_cast<double>(grid.at(ry.lo, cx.lo, k));
        const double v01 = static_cast<double>(grid.at(ry.lo, cx.hi, k));
        const double v10 = static_cast<double>(grid.at(ry.hi, cx.lo, k));
        const double v11 = static_cast<double>(grid.at(ry.hi, cx.hi, k));
        const double top = detail::lerp_contained(v00, v01, cx.frac);
        const double bottom = detail::lerp_contained(v10, v11, cx.frac);
        out.at(r, c, k) = static_cast<T>(detail::lerp_contained(top, bottom, ry.frac));
      }
    }
  }
  return out;
}

/// Halves each axis with ceiling rounding (27x27 -> 14x14).
template <typename T>
BasicFeatureGrid<T> pool_2x2(const BasicFeatureGrid<T>& grid) {
  return bilinear_resize(grid, InterpSpec{(grid.rows + 1) / 2, (grid.cols + 1) / 2});
}

/// Half-open band range [first, last) of a token axis.
struct BandRange {
  int first = 0;
  int last = 0;
  int size() const { return last - first; }
  friend bool operator==(const BandRange&, const BandRange&) = default;
};

/// Token bands along one axis whose patch overlaps [begin, begin + length)
/// by at least half a patch. The axis spans `canvas` pixels cut into `bands`
/// equal patches. If no band reaches half coverage, the band holding the
/// content midpoint is kept so the result is never empty.
inline BandRange kept_bands(std::int64_t begin, std::int64_t length, std::int64_t canvas, int bands) {
  if (length <= 0 || canvas <= 0 || bands <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "padding strip needs a non-empty content span");
  }
  // Work in units of 1 / bands pixel so band edges are integers.
  const std::int64_t lo = begin * bands;
  const std::int64_t hi = (begin + length) * bands;
  int first = -1;
  int last = -1;
  for (int i = 0; i < bands; ++i) {
    const std::int64_t band_lo = std::int64_t{i} * canvas;
    const std::int64_t band_hi = std::int64_t{i + 1} * canvas;
    const std::int64_t overlap = std::max<std::int64_t>(0, std::min(hi, band_hi) - std::max(lo, band_lo));
    if (2 * overlap >= canvas) {
      if (first < 0) first = i;
      last = i + 1;
    }
  }
  if (first < 0) {
    const std::int64_t mid2 = lo + hi;  // twice the midpoint
    first = static_cast<int>(std::clamp<std::int64_t>(mid2 / (2 * canvas), 0, bands - 1));
    last = first + 1;
  }
  return BandRange{first, last};
}

struct StripWindow {
  BandRange rows;
  BandRange cols;
  std::size_t token_count() const {
    return static_cast<std::size_t>(rows.size()) * static_cast<std::size_t>(cols.size());
  }
};

inline StripWindow strip_window(const PadSpec& pad, int grid_rows, int grid_cols) {
  if (pad.content_rect.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pad content rectangle is empty");
  }
  return StripWindow{
      kept_bands(pad.content_rect.y, pad.content_rect.height, pad.canvas_edge_px, grid_rows),
      kept_bands(pad.content_rect.x, pad.content_rect.width, pad.canvas_edge_px, grid_cols)};
}

/// Drops token rows/columns that only encode zero padding.
template <typename T>
BasicFeatureGrid<T> strip_padding(const BasicFeatureGrid<T>& grid, const PadSpec& pad) {
  require_valid(grid);
  const auto window = strip_window(pad, grid.rows, grid.cols);
  BasicFeatureGrid<T> out(window.rows.size(), window.cols.size(), grid.dim);
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      const auto src = grid.offset(window.rows.first + r, window.cols.first + c);
      std::copy_n(grid.values.begin() + static_cast<std::ptrdiff_t>(src), grid.dim,
                  out.values.begin() + static_cast<std::ptrdiff_t>(out.offset(r, c)));
    }
  }
  return out;
}

/// Realizes a reduced per-view token count: resize to the smallest square
/// holding `tokens`, then keep the first `tokens` positions row-major. The
/// result is a 1 x tokens grid.
template <typename T>
BasicFeatureGrid<T> reduce_to_tokens(const BasicFeatureGrid<T>& grid, int tokens) {
  if (tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "token target must be positive");
  }
  if (static_cast<std::size_t>(tokens) == grid.token_count()) {
    BasicFeatureGrid<T> flat = grid;
    flat.rows = 1;
    flat.cols = tokens;
    return flat;
  }
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tokens))));
  while (side * side < tokens) ++side;
  while (side > 1 && (side - 1) * (side - 1) >= tokens) --side;
  const auto square = bilinear_resize(grid, InterpSpec{side, side});
  BasicFeatureGrid<T> out(1, tokens, grid.dim);
  std::copy_n(square.values.begin(), static_cast<std::size_t>(tokens) * grid.dim, out.values.begin());
  return out;
}

// --- deterministic stand-in encoder ---------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t v) { return splitmix64(seed ^ splitmix64(v)); }

}  // namespace detail

/// Channel 0 is the normalized row center (r + 0.5) / rows, channel 1 the
/// normalized column center; further channels are a hash of (tag, r, c, k)
/// mapped into [-1, 1).
inline FeatureGrid mock_encode(std::uint64_t view_tag, int rows, int cols, int dim) {
  if (dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "mock encoder needs at least 2 channels");
  }
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mock encoder grid must be at least 1x1");
  }
  FeatureGrid grid(rows, cols, dim);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      grid.at(r, c, 0) = (r + 0.5) / rows;
      grid.at(r, c, 1) = (c + 0.5) / cols;
      for (int k = 2; k < dim; ++k) {
        std::uint64_t h = detail::mix(view_tag, static_cast<std::uint64_t>(r));
        h = detail::mix(h, static_cast<std::uint64_t>(c));
        h = detail::mix(h, static_cast<std::uint64_t>(k));
        grid.at(r, c, k) = static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
      }
    }
  }
  return grid;
}

inline std::uint64_t view_tag(const Rect& r, std::uint64_t salt) {
  std::uint64_t h = detail::mix(salt, static_cast<std::uint64_t>(r.x));
  h = detail::mix(h, static_cast<std::uint64_t>(r.y));
  h = detail::mix(h, static_cast<std::uint64_t>(r.width));
  return detail::mix(h, static_cast<std::uint64_t>(r.height));
}

/// View 0 is the base view, views 1..a*b the crops in row-major order.
inline FeatureGrid mock_encode(const CropPlan& plan, std::size_t view_index, int grid_side, int dim) {
  if (view_index >= plan.view_count()) {
    throw Error(ErrorCode::kInvalidArgument, "view index out of range for crop plan");
  }
  const Rect rect = view_index == 0 ? plan.content : plan.crop_rects[view_index - 1];
  return mock_encode(view_tag(rect, 0xC0FFEEULL + view_index), grid_side, grid_side, dim);
}

inline FeatureGrid mock_encode(const PadSpec& pad, int grid_side, int dim) {
  return mock_encode(view_tag(pad.content_rect, 0x5EEDULL), grid_side, grid_side, dim);
}

inline FeatureGrid mock_encode_frame(std::uint64_t frame_index, int grid_side, int dim) {
  return mock_encode(detail::mix(0xF4A3E5ULL, frame_index), grid_side, grid_side, dim);
}

// --- binary layout ---------------------------------------------------------
// u32 rows, u32 cols, u32 dim (little-endian), then rows*cols*dim float32
// little-endian, row-major with channel innermost.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorCode::kFormat, "truncated input while reading u32");
  }
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

}  // namespace detail

template <typename T>
void write_grid(std::ostream& os, const BasicFeatureGrid<T>& grid) {
  require_valid(grid);
  detail::put_u32(os, static_cast<std::uint32_t>(grid.rows));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.cols));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.dim));
  for (T v : grid.values) {
    detail::put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

inline BasicFeatureGrid<float> read_grid(std::istream& is) {
  const auto rows = detail::get_u32(is);
  const auto cols = detail::get_u32(is);
  const auto dim = detail::get_u32(is);
  constexpr std::uint32_t kMaxAxis = 1u << 20;
  if (rows > kMaxAxis || cols > kMaxAxis || dim > kMaxAxis) {
    throw Error(ErrorCode::kFormat, "feature grid header is implausibly large");
  }
  BasicFeatureGrid<float> grid(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(dim));
  for (auto& v : grid.values) v = std::bit_cast<float>(detail::get_u32(is));
  return grid;
}

}  // namespace ovprep
