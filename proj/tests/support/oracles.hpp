// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations written independently of the library, in exact
// rational arithmetic, plus a seeded synthetic conversation corpus.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "ovprep/geometry.hpp"

namespace ovprep::testing {

using Q = boost::multiprecision::cpp_rational;
using Z = boost::multiprecision::cpp_int;

inline Z floor_q(const Q& q) {
  Z n = boost::multiprecision::numerator(q);
  Z d = boost::multiprecision::denominator(q);
  Z f = n / d;
  if (n % d != 0 && n < 0) f -= 1;
  return f;
}

/// Round half up, at least 1, at most `cap`.
inline std::int64_t round_px(const Q& q, std::int64_t cap) {
  const auto r = static_cast<std::int64_t>(floor_q(q + Q(1, 2)));
  return std::clamp<std::int64_t>(r, 1, cap);
}

/// Area of the aspect-preserving fit of w x h into cw x ch.
inline std::int64_t fitted_area(std::int64_t w, std::int64_t h, std::int64_t cw, std::int64_t ch) {
  const Q s = std::min(Q(cw, w), Q(ch, h));
  std::int64_t fw = 0;
  std::int64_t fh = 0;
  if (Q(cw, w) <= Q(ch, h)) {
    fw = cw;
    fh = round_px(s * h, ch);
  } else {
    fh = ch;
    fw = round_px(s * w, cw);
  }
  return fw * fh;
}

/// Exhaustive grid choice: rank every catalog entry by the full preference
/// key and take the first.
inline SpatialConfig brute_force_select(const ImageShape& shape, const std::vector<SpatialConfig>& configs,
                                        std::int64_t edge) {
  struct Ranked {
    bool covering;
    Q neg_scale;
    std::int64_t crops;
    std::int64_t waste;
    SpatialConfig c;
  };
  std::vector<Ranked> all;
  for (const auto& c : configs) {
    const std::int64_t cw = c.a * edge;
    const std::int64_t ch = c.b * edge;
    const bool covering = cw >= shape.width_px && ch >= shape.height_px;
    const Q scale = std::min(Q(cw, shape.width_px), Q(ch, shape.height_px));
    all.push_back({covering, covering ? Q(0) : -scale, std::int64_t{c.a} * c.b,
                   cw * ch - fitted_area(shape.width_px, shape.height_px, cw, ch), c});
  }
  std::sort(all.begin(), all.end(), [](const Ranked& l, const Ranked& r) {
    return std::make_tuple(!l.covering, l.neg_scale, l.crops, l.waste, l.c.a, l.c.b) <
           std::make_tuple(!r.covering, r.neg_scale, r.crops, r.waste, r.c.a, r.c.b);
  });
  return all.front().c;
}

/// Token bands kept along one axis: overlap with the content of at least half
/// a patch, measured in exact pixels. Falls back to the band under the
/// content midpoint. Returns [first, last).
inline std::pair<int, int> strip_oracle(std::int64_t begin, std::int64_t length, std::int64_t canvas, int bands) {
  const Q patch(canvas, bands);
  int first = -1;
  int last = -1;
  for (int i = 0; i < bands; ++i) {
    const Q lo = patch * i;
    const Q hi = patch * (i + 1);
    const Q overlap_raw = std::min(hi, Q(begin + length)) - std::max(lo, Q(begin));
    const Q overlap = overlap_raw > 0 ? overlap_raw : Q(0);
    if (overlap >= patch / 2) {
      if (first < 0) first = i;
      last = i + 1;
    }
  }
  if (first < 0) {
    const Q mid = Q(begin) + Q(length, 2);
    first = std::clamp(static_cast<int>(floor_q(mid / patch)), 0, bands - 1);
    last = first + 1;
  }
  return {first, last};
}

// --- synthetic conversation corpus -------------------------------------------

struct CorpusSample {
  nlohmann::json record;
  /// Answer texts in order, used for the per-turn supervision oracle.
  std::vector<std::string> answers;
  std::size_t media_count = 0;
};

inline std::string random_words(std::mt19937_64& rng, int min_words, int max_words) {
  static const std::vector<std::string> kWords = {"red", "cube", "left", "two", "table", "the", "is", "a",
                                                  "photo", "of", "sign", "reads", "open", "chart", "rises", "dog",
                                                  "çafé", "数字", "42", "?", "-", "yes", "no", "blue"};
  std::uniform_int_distribution<int> count(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, kWords.size() - 1);
  std::string out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[pick(rng)];
  }
  return out;
}

/// `n` well-formed samples mixing text-only, single-image, multi-image and
/// video records with one to three exchanges each.
inline std::vector<CorpusSample> make_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CorpusSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    CorpusSample s;
    nlohmann::json j;
    j["id"] = "gen-" + std::to_string(i);
    const int kind = static_cast<int>(i % 4);  // 0 text, 1 single, 2 multi, 3 video
    std::uniform_int_distribution<std::int64_t> dim(1, 4000);
    if (kind == 1) {
      j["image"] = "img.jpg";
      j["image_sizes"] = {{dim(rng), dim(rng)}};
      s.media_count = 1;
    } else if (kind == 2) {
      const std::size_t k = 2 + i % 3;
      nlohmann::json paths = nlohmann::json::array();
      nlohmann::json sizes = nlohmann::json::array();
      for (std::size_t m = 0; m < k; ++m) {
        paths.push_back("img" + std::to_string(m) + ".jpg");
        sizes.push_back({dim(rng), dim(rng)});
      }
      j["images"] = paths;
      j["image_sizes"] = sizes;
      s.media_count = k;
    } else if (kind == 3) {
      j["video"] = "clip.mp4";
      j["video_frames"] = static_cast<std::int64_t>(1 + i * 7 % 50);
      s.media_count = 1;
    }
    nlohmann::json conv = nlohmann::json::array();
    if (i % 5 == 0) conv.push_back({{"from", "system"}, {"value", "Be brief. " + random_words(rng, 1, 4)}});
    const int exchanges = 1 + static_cast<int>(i % 3);
    for (int e = 0; e < exchanges; ++e) {
      std::string q = random_words(rng, 2, 9);
      if (e == 0) {
        std::string prefix;
        for (std::size_t m = 0; m < s.media_count; ++m) prefix += "<image>\n";
        q = prefix + q;
      }
      const std::string a = random_words(rng, 1, 12);
      conv.push_back({{"from", "human"}, {"value", q}});
      conv.push_back({{"from", "gpt"}, {"value", a}});
      s.answers.push_back(a);
    }
    j["conversations"] = conv;
    s.record = std::move(j);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ovprep::testing
