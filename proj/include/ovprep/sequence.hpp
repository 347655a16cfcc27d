// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Conversation rendering in the ChatML layout, tokenization around image
// markers, vision-span expansion and the answer-only loss mask.
//
// A packed sequence is built piecewise: every rendered piece (role header,
// text, marker, end-of-turn) is tokenized on its own and tagged with a span
// kind, so the loss mask falls out of the span table. For a context-free
// tokenizer the result equals tokenizing the rendered text in one go.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ovprep/error.hpp"
#include "ovprep/token_budget.hpp"

namespace ovprep {

inline constexpr std::int32_t kImageSentinel = -200;

enum class Role { kSystem, kUser, kAssistant };

struct TextSegment {
  std::string text;
  friend bool operator==(const TextSegment&, const TextSegment&) = default;
};
struct ImageRef {
  std::size_t media_index = 0;
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};
struct VideoRef {
  std::size_t media_index = 0;
  friend bool operator==(const VideoRef&, const VideoRef&) = default;
};

using Segment = std::variant<TextSegment, ImageRef, VideoRef>;

struct Turn {
  Role role = Role::kUser;
  std::vector<Segment> segments;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::vector<Turn> turns;
  /// Number of attached media descriptors that refs may point into.
  std::size_t media_count = 0;
  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct TemplateSpec {
  std::string begin_marker = "<|im_start|>";
  std::string end_marker = "<|im_end|>";
  std::string system_role = "system";
  std::string user_role = "user";
  std::string assistant_role = "assistant";
  std::string header_break = "\n";
  std::string turn_break = "\n";
  std::string image_marker = "<image>";
  /// Inserted as a leading system turn when a conversation has none; empty
  /// disables it.
  std::string default_system = "You are a helpful assistant.";
  /// Whether the assistant's end-of-turn marker is a supervised target.
  bool supervise_end_marker = true;

  const std::string& role_name(Role r) const {
    switch (r) {
      case Role::kSystem: return system_role;
      case Role::kUser: return user_role;
      case Role::kAssistant: return assistant_role;
    }
    return user_role;
  }
};

inline void validate_conversation(const Conversation& conv) {
  std::size_t i = 0;
  if (!conv.turns.empty() && conv.turns.front().role == Role::kSystem) ++i;
  Role expected = Role::kUser;
  for (; i < conv.turns.size(); ++i) {
    if (conv.turns[i].role != expected) {
      throw Error(ErrorCode::kInvalidArgument,
                  "turn " + std::to_string(i) + " breaks user/assistant alternation");
    }
    expected = expected == Role::kUser ? Role::kAssistant : Role::kUser;
  }
  for (const auto& turn : conv.turns) {
    for (const auto& seg : turn.segments) {
      const std::size_t* idx = nullptr;
      if (const auto* img = std::get_if<ImageRef>(&seg)) idx = &img->media_index;
      if (const auto* vid = std::get_if<VideoRef>(&seg)) idx = &vid->media_index;
      if (idx != nullptr && *idx >= conv.media_count) {
        throw Error(ErrorCode::kInvalidArgument,
                    "media reference " + std::to_string(*idx) + " does not resolve");
      }
    }
  }
}

inline Conversation with_default_system(Conversation conv, const TemplateSpec& tmpl) {
  if (tmpl.default_system.empty()) return conv;
  if (!conv.turns.empty() && conv.turns.front().role == Role::kSystem) return conv;
  conv.turns.insert(conv.turns.begin(), Turn{Role::kSystem, {TextSegment{tmpl.default_system}}});
  return conv;
}

// --- rendering -------------------------------------------------------------

enum class SpanKind : std::uint8_t {
  kScaffold = 0,
  kSystem = 1,
  kInstruction = 2,
  kAnswer = 3,
  kVision = 4,
};

constexpr std::string_view span_kind_name(SpanKind k) {
  switch (k) {
    case SpanKind::kScaffold: return "scaffold";
    case SpanKind::kSystem: return "system";
    case SpanKind::kInstruction: return "instruction";
    case SpanKind::kAnswer: return "answer";
    case SpanKind::kVision: return "vision";
  }
  return "unknown";
}

/// One contiguous chunk of rendered text with its role in the sequence.
struct RenderPiece {
  SpanKind kind = SpanKind::kScaffold;
  std::string text;
  int turn = -1;
  int media = -1;  // set for vision pieces
  bool special = false;  // begin/end markers, tokenized as control tokens
};

namespace detail {

inline SpanKind content_kind(Role r) {
  switch (r) {
    case Role::kSystem: return SpanKind::kSystem;
    case Role::kUser: return SpanKind::kInstruction;
    case Role::kAssistant: return SpanKind::kAnswer;
  }
  return SpanKind::kInstruction;
}

inline void reject_reserved(std::string_view text, const TemplateSpec& tmpl) {
  for (const auto& reserved : {tmpl.image_marker, tmpl.begin_marker, tmpl.end_marker}) {
    if (!reserved.empty() && text.find(reserved) != std::string_view::npos) {
      throw Error(ErrorCode::kMarkerInText, "text segment contains reserved marker \"" + reserved + "\"");
    }
  }
}

}  // namespace detail

/// Rendered pieces in order. Video turns carry their single marker at the
/// head of the turn text; image markers stay where their refs are.
inline std::vector<RenderPiece> render_pieces(const Conversation& input, const TemplateSpec& tmpl) {
  validate_conversation(input);
  const Conversation conv = with_default_system(input, tmpl);
  std::vector<RenderPiece> pieces;
  for (std::size_t t = 0; t < conv.turns.size(); ++t) {
    const auto& turn = conv.turns[t];
    const int ti = static_cast<int>(t);
    const SpanKind kind = detail::content_kind(turn.role);
    pieces.push_back({SpanKind::kScaffold, tmpl.begin_marker, ti, -1, true});
    pieces.push_back({SpanKind::kScaffold, tmpl.role_name(turn.role) + tmpl.header_break, ti, -1, false});

    for (const auto& seg : turn.segments) {
      if (const auto* vid = std::get_if<VideoRef>(&seg)) {
        pieces.push_back({SpanKind::kVision, tmpl.image_marker, ti, static_cast<int>(vid->media_index), false});
      }
    }
    for (const auto& seg : turn.segments) {
      if (const auto* text = std::get_if<TextSegment>(&seg)) {
        detail::reject_reserved(text->text, tmpl);
        if (text->text.empty()) continue;
        if (!pieces.empty() && pieces.back().kind == kind && pieces.back().turn == ti && !pieces.back().special) {
          pieces.back().text += text->text;
        } else {
          pieces.push_back({kind, text->text, ti, -1, false});
        }
      } else if (const auto* img = std::get_if<ImageRef>(&seg)) {
        pieces.push_back({SpanKind::kVision, tmpl.image_marker, ti, static_cast<int>(img->media_index), false});
      }
    }

    const bool supervised_end = turn.role == Role::kAssistant && tmpl.supervise_end_marker;
    pieces.push_back({supervised_end ? SpanKind::kAnswer : SpanKind::kScaffold, tmpl.end_marker, ti, -1, true});
    pieces.push_back({SpanKind::kScaffold, tmpl.turn_break, ti, -1, false});
  }
  return pieces;
}

inline std::string render_template(const Conversation& conv, const TemplateSpec& tmpl) {
  std::string out;
  for (const auto& p : render_pieces(conv, tmpl)) out += p.text;
  return out;
}

/// A turn recovered from rendered text. `content` keeps image markers.
struct ScannedTurn {
  std::string role;
  std::string content;
  friend bool operator==(const ScannedTurn&, const ScannedTurn&) = default;
};

/// Inverse of render_template at the turn level.
inline std::vector<ScannedTurn> scan_template(std::string_view text, const TemplateSpec& tmpl) {
  std::vector<ScannedTurn> turns;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.substr(pos, tmpl.begin_marker.size()) != tmpl.begin_marker) {
      throw Error(ErrorCode::kFormat, "expected turn start at offset " + std::to_string(pos));
    }
    pos += tmpl.begin_marker.size();
    const auto header_end = text.find(tmpl.header_break, pos);
    if (header_end == std::string_view::npos) throw Error(ErrorCode::kFormat, "unterminated role header");
    ScannedTurn turn;
    turn.role = std::string(text.substr(pos, header_end - pos));
    pos = header_end + tmpl.header_break.size();
    const auto end = text.find(tmpl.end_marker, pos);
    if (end == std::string_view::npos) throw Error(ErrorCode::kFormat, "unterminated turn");
    turn.content = std::string(text.substr(pos, end - pos));
    pos = end + tmpl.end_marker.size();
    if (text.substr(pos, tmpl.turn_break.size()) != tmpl.turn_break) {
      throw Error(ErrorCode::kFormat, "missing turn break after end marker");
    }
    pos += tmpl.turn_break.size();
    turns.push_back(std::move(turn));
  }
  return turns;
}

/// Byte offsets of every image marker in `text`.
inline std::vector<std::size_t> marker_offsets(std::string_view text, std::string_view marker) {
  std::vector<std::size_t> out;
  if (marker.empty()) return out;
  for (auto p = text.find(marker); p != std::string_view::npos; p = text.find(marker, p + marker.size())) {
    out.push_back(p);
  }
  return out;
}

// --- tokenization ----------------------------------------------------------

template <typename T>
concept Tokenizer = requires(const T& tok, std::string_view text, std::span<const std::int32_t> ids) {
  { tok.encode(text) } -> std::convertible_to<std::vector<std::int32_t>>;
  { tok.decode(ids) } -> std::convertible_to<std::string>;
};

/// Test tokenizer: every byte is its own id (0-255); the two ChatML control
/// markers are single ids 256 and 257.
class ByteTokenizer {
 public:
  static constexpr std::int32_t kBeginId = 256;
  static constexpr std::int32_t kEndId = 257;

  explicit ByteTokenizer(std::string begin_marker = "<|im_start|>", std::string end_marker = "<|im_end|>")
      : begin_(std::move(begin_marker)), end_(std::move(end_marker)) {}

  std::vector<std::int32_t> encode(std::string_view text) const {
    std::vector<std::int32_t> ids;
    ids.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
      if (!begin_.empty() && text.substr(i, begin_.size()) == begin_) {
        ids.push_back(kBeginId);
        i += begin_.size();
      } else if (!end_.empty() && text.substr(i, end_.size()) == end_) {
        ids.push_back(kEndId);
        i += end_.size();
      } else {
        ids.push_back(static_cast<std::int32_t>(static_cast<unsigned char>(text[i])));
        ++i;
      }
    }
    return ids;
  }

  std::string decode(std::span<const std::int32_t> ids) const {
    std::string out;
    for (auto id : ids) {
      if (id >= 0 && id < 256) {
        out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
      } else if (id == kBeginId) {
        out += begin_;
      } else if (id == kEndId) {
        out += end_;
      } else {
        throw Error(ErrorCode::kTokenizer, "id " + std::to_string(id) + " is not in the byte vocabulary");
      }
    }
    return out;
  }

 private:
  std::string begin_;
  std::string end_;
};

namespace detail {

template <Tokenizer Tok>
std::vector<std::int32_t> encode_checked(const Tok& tok, std::string_view text) {
  std::vector<std::int32_t> ids;
  try {
    ids = tok.encode(text);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kTokenizer, e.what());
  }
  if (std::any_of(ids.begin(), ids.end(), [](std::int32_t id) { return id < 0; })) {
    throw Error(ErrorCode::kTokenizer, "tokenizer produced a negative id");
  }
  return ids;
}

}  // namespace detail

/// Tokenizes around every marker; each marker becomes one sentinel.
template <Tokenizer Tok>
std::vector<std::int32_t> tokenize_with_placeholders(std::string_view text, const Tok& tok,
                                                     std::string_view marker = "<image>") {
  std::vector<std::int32_t> out;
  std::size_t pos = 0;
  for (auto at : marker_offsets(text, marker)) {
    if (at > pos) {
      const auto ids = detail::encode_checked(tok, text.substr(pos, at - pos));
      out.insert(out.end(), ids.begin(), ids.end());
    }
    out.push_back(kImageSentinel);
    pos = at + marker.size();
  }
  if (pos < text.size()) {
    const auto ids = detail::encode_checked(tok, text.substr(pos));
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

template <Tokenizer Tok>
std::string detokenize_with_placeholders(std::span<const std::int32_t> ids, const Tok& tok,
                                         std::string_view marker = "<image>") {
  std::string out;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i <= ids.size(); ++i) {
    if (i == ids.size() || ids[i] == kImageSentinel) {
      if (i > run_start) out += tok.decode(ids.subspan(run_start, i - run_start));
      if (i < ids.size()) out += marker;
      run_start = i + 1;
    }
  }
  return out;
}

// --- packed sequences ------------------------------------------------------

struct Span {
  SpanKind kind = SpanKind::kScaffold;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::int32_t turn = -1;
  std::int32_t media = -1;

  std::uint32_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Token stream with sentinel positions for vision, a per-position loss
/// mask (1 = supervised) and a span table that partitions the positions.
struct PackedSequence {
  std::vector<std::int32_t> token_ids;
  std::vector<std::uint8_t> loss_mask;
  std::vector<Span> spans;

  std::size_t vision_span_count() const {
    return static_cast<std::size_t>(
        std::count_if(spans.begin(), spans.end(), [](const Span& s) { return s.kind == SpanKind::kVision; }));
  }

  friend bool operator==(const PackedSequence&, const PackedSequence&) = default;
};

/// Mask is 1 exactly on answer-span positions.
inline std::vector<std::uint8_t> build_loss_mask(std::span<const Span> spans, std::size_t length) {
  std::vector<std::uint8_t> mask(length, 0);
  for (const auto& s : spans) {
    if (s.kind != SpanKind::kAnswer) continue;
    if (s.end > length || s.begin > s.end) {
      throw Error(ErrorCode::kInvalidArgument, "span exceeds sequence length");
    }
    std::fill(mask.begin() + s.begin, mask.begin() + s.end, std::uint8_t{1});
  }
  return mask;
}

inline std::vector<std::uint8_t> build_loss_mask(const PackedSequence& seq) {
  return build_loss_mask(seq.spans, seq.token_ids.size());
}

/// Renders and tokenizes a conversation. Vision positions hold a single
/// sentinel each until expand().
template <Tokenizer Tok>
PackedSequence build_sequence(const Conversation& conv, const Tok& tok, const TemplateSpec& tmpl) {
  PackedSequence seq;
  for (const auto& piece : render_pieces(conv, tmpl)) {
    const auto begin = static_cast<std::uint32_t>(seq.token_ids.size());
    if (piece.kind == SpanKind::kVision) {
      seq.token_ids.push_back(kImageSentinel);
    } else {
      const auto ids = detail::encode_checked(tok, piece.text);
      seq.token_ids.insert(seq.token_ids.end(), ids.begin(), ids.end());
    }
    const auto end = static_cast<std::uint32_t>(seq.token_ids.size());
    if (end == begin) continue;
    if (!seq.spans.empty() && piece.kind != SpanKind::kVision && seq.spans.back().kind == piece.kind &&
        seq.spans.back().turn == piece.turn && seq.spans.back().end == begin) {
      seq.spans.back().end = end;
    } else {
      seq.spans.push_back(Span{piece.kind, begin, end, piece.turn, piece.media});
    }
  }
  seq.loss_mask = build_loss_mask(seq);
  return seq;
}

/// Replaces the i-th vision sentinel with plans[i].total vision positions.
inline PackedSequence expand(const PackedSequence& seq, std::span<const TokenPlan> plans) {
  if (seq.vision_span_count() != plans.size()) {
    throw Error(ErrorCode::kPlanMismatch, std::to_string(seq.vision_span_count()) + " vision sentinels but " +
                                              std::to_string(plans.size()) + " token plans");
  }
  PackedSequence out;
  out.spans.reserve(seq.spans.size());
  std::size_t plan_index = 0;
  for (const auto& span : seq.spans) {
    const auto begin = static_cast<std::uint32_t>(out.token_ids.size());
    if (span.kind == SpanKind::kVision) {
      const auto total = plans[plan_index++].total;
      if (total < 1) throw Error(ErrorCode::kPlanMismatch, "token plan with no tokens");
      out.token_ids.insert(out.token_ids.end(), static_cast<std::size_t>(total), kImageSentinel);
    } else {
      out.token_ids.insert(out.token_ids.end(), seq.token_ids.begin() + span.begin,
                           seq.token_ids.begin() + span.end);
    }
    out.spans.push_back(Span{span.kind, begin, static_cast<std::uint32_t>(out.token_ids.size()), span.turn,
                             span.media});
  }
  out.loss_mask = build_loss_mask(out);
  return out;
}

// --- marker sanitization ---------------------------------------------------

struct MarkerVerdict {
  bool clean = true;
  std::string reason;
};

/// Flags samples whose literal marker count disagrees with the attached
/// media count (stray HTML image tags in code data, missing markers).
inline MarkerVerdict sanitize_markers(std::span<const std::string> texts, std::size_t media_count,
                                      std::string_view marker = "<image>") {
  std::size_t markers = 0;
  for (const auto& t : texts) markers += marker_offsets(t, marker).size();
  if (markers == media_count) return {};
  return MarkerVerdict{false, std::to_string(markers) + " marker(s) for " + std::to_string(media_count) +
                                  " attached media"};
}

inline MarkerVerdict sanitize_markers(std::string_view text, std::size_t media_count,
                                      std::string_view marker = "<image>") {
  const std::string copy(text);
  return sanitize_markers(std::span<const std::string>(&copy, 1), media_count, marker);
}

}  // namespace ovprep
