// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// LLaVA-style JSONL samples:
//
//   {"id": "...", "images": ["a.jpg", ...] | "image": "a.jpg" | ["a.jpg"],
//    "video": "clip.mp4",
//    "conversations": [{"from": "human"|"gpt"|"system", "value": "<image>\n..."}],
//    "image_sizes": [[w, h], ...],   // optional, stands in for a decoder
//    "video_frames": 48}             // optional
//
// Markers in `value` are turned into media references in order of
// appearance.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ovprep/error.hpp"
#include "ovprep/geometry.hpp"
#include "ovprep/sequence.hpp"

namespace ovprep {

enum class MediaKind { kImage, kVideo };

struct MediaDescriptor {
  MediaKind kind = MediaKind::kImage;
  std::string path;
  std::optional<ImageShape> shape;
  std::optional<std::int64_t> frames;
  friend bool operator==(const MediaDescriptor&, const MediaDescriptor&) = default;
};

struct RawTurn {
  Role role = Role::kUser;
  std::string value;
  friend bool operator==(const RawTurn&, const RawTurn&) = default;
};

struct RawSample {
  std::string id;
  std::vector<MediaDescriptor> media;
  std::vector<RawTurn> turns;

  bool has_video() const { return !media.empty() && media.front().kind == MediaKind::kVideo; }
  friend bool operator==(const RawSample&, const RawSample&) = default;
};

namespace detail {

inline Role parse_role(const std::string& from) {
  if (from == "human" || from == "user") return Role::kUser;
  if (from == "gpt" || from == "assistant") return Role::kAssistant;
  if (from == "system") return Role::kSystem;
  throw Error(ErrorCode::kFormat, "unknown speaker \"" + from + "\"");
}

}  // namespace detail

inline RawSample parse_sample(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kFormat, "sample must be a JSON object");
  RawSample s;
  try {
    if (j.contains("id")) {
      s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    }
    std::vector<std::string> images;
    for (const char* key : {"images", "image"}) {
      if (!j.contains(key) || j.at(key).is_null()) continue;
      const auto& v = j.at(key);
      if (v.is_string()) {
        images.push_back(v.get<std::string>());
      } else {
        for (const auto& p : v) images.push_back(p.get<std::string>());
      }
    }
    const bool has_video = j.contains("video") && !j.at("video").is_null();
    if (has_video && !images.empty()) {
      throw Error(ErrorCode::kFormat, "a sample cannot attach both images and a video");
    }
    if (has_video) {
      MediaDescriptor video{MediaKind::kVideo, j.at("video").get<std::string>(), std::nullopt, std::nullopt};
      if (j.contains("video_frames")) video.frames = j.at("video_frames").get<std::int64_t>();
      s.media.push_back(std::move(video));
    }
    std::vector<ImageShape> sizes;
    if (j.contains("image_sizes")) {
      for (const auto& wh : j.at("image_sizes")) {
        sizes.push_back(ImageShape{wh.at(0).get<std::int64_t>(), wh.at(1).get<std::int64_t>()});
      }
      if (sizes.size() != images.size()) {
        throw Error(ErrorCode::kFormat, "image_sizes has " + std::to_string(sizes.size()) + " entries for " +
                                            std::to_string(images.size()) + " images");
      }
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
      MediaDescriptor img{MediaKind::kImage, images[i], std::nullopt, std::nullopt};
      if (!sizes.empty()) img.shape = sizes[i];
      s.media.push_back(std::move(img));
    }
    const auto& convs = j.at("conversations");
    if (!convs.is_array()) throw Error(ErrorCode::kFormat, "conversations must be an array");
    for (const auto& turn : convs) {
      s.turns.push_back(RawTurn{detail::parse_role(turn.at("from").get<std::string>()),
                                turn.at("value").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
  return s;
}

inline RawSample parse_sample_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
  return parse_sample(j);
}

inline nlohmann::json to_json(const RawSample& s) {
  nlohmann::json j;
  j["id"] = s.id;
  std::vector<std::string> images;
  std::vector<std::vector<std::int64_t>> sizes;
  for (const auto& m : s.media) {
    if (m.kind == MediaKind::kVideo) {
      j["video"] = m.path;
      if (m.frames) j["video_frames"] = *m.frames;
    } else {
      images.push_back(m.path);
      if (m.shape) sizes.push_back({m.shape->width_px, m.shape->height_px});
    }
  }
  if (!images.empty()) j["images"] = images;
  if (!sizes.empty() && sizes.size() == images.size()) j["image_sizes"] = sizes;
  auto& convs = j["conversations"] = nlohmann::json::array();
  for (const auto& t : s.turns) {
    const char* from = t.role == Role::kUser ? "human" : (t.role == Role::kAssistant ? "gpt" : "system");
    convs.push_back({{"from", from}, {"value", t.value}});
  }
  return j;
}

inline MarkerVerdict check_markers(const RawSample& s, std::string_view marker = "<image>") {
  std::vector<std::string> texts;
  texts.reserve(s.turns.size());
  for (const auto& t : s.turns) texts.push_back(t.value);
  return sanitize_markers(std::span<const std::string>(texts), s.media.size(), marker);
}

/// Splits turn values on the marker. With a video attached every marker
/// refers to it; otherwise the k-th marker refers to the k-th image.
inline Conversation to_conversation(const RawSample& s, std::string_view marker = "<image>") {
  Conversation conv;
  conv.media_count = s.media.size();
  std::size_t next_image = 0;
  for (const auto& raw : s.turns) {
    Turn turn{raw.role, {}};
    std::size_t pos = 0;
    const std::string_view value = raw.value;
    for (auto at : marker_offsets(value, marker)) {
      if (at > pos) turn.segments.emplace_back(TextSegment{std::string(value.substr(pos, at - pos))});
      if (s.has_video()) {
        turn.segments.emplace_back(VideoRef{0});
      } else {
        turn.segments.emplace_back(ImageRef{next_image++});
      }
      pos = at + marker.size();
    }
    if (pos < value.size()) turn.segments.emplace_back(TextSegment{std::string(value.substr(pos))});
    conv.turns.push_back(std::move(turn));
  }
  return conv;
}

}  // namespace ovprep
