// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary packed-sequence manifest. All integers little-endian.
//
//   header : "OVPK"  u32 version(=1)  u64 record_count
//   record : u32 id_len, id bytes
//            u32 n, n x i32 token ids
//            ceil(n / 8) bytes loss mask, bit (i % 8) of byte i / 8, LSB first
//            u32 n_spans, n_spans x { u8 kind, u32 begin, u32 end, i32 turn, i32 media }

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ovprep/error.hpp"
#include "ovprep/feature_grid.hpp"
#include "ovprep/sequence.hpp"

namespace ovprep {

inline constexpr std::array<char, 4> kPackedMagic{'O', 'V', 'P', 'K'};
inline constexpr std::uint32_t kPackedVersion = 1;

struct PackedRecord {
  std::string id;
  PackedSequence sequence;
  friend bool operator==(const PackedRecord&, const PackedRecord&) = default;
};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v & 0xffffffffULL));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64(std::istream& is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

inline std::uint8_t get_u8(std::istream& is) {
  char c = 0;
  if (!is.get(c)) throw Error(ErrorCode::kFormat, "truncated input while reading u8");
  return static_cast<std::uint8_t>(c);
}

}  // namespace detail

inline void write_packed_header(std::ostream& os, std::uint64_t record_count) {
  os.write(kPackedMagic.data(), kPackedMagic.size());
  detail::put_u32(os, kPackedVersion);
  detail::put_u64(os, record_count);
}

inline void write_packed_record(std::ostream& os, const PackedRecord& rec) {
  const auto& seq = rec.sequence;
  if (seq.loss_mask.size() != seq.token_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "loss mask length differs from token count");
  }
  detail::put_u32(os, static_cast<std::uint32_t>(rec.id.size()));
  os.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
  detail::put_u32(os, static_cast<std::uint32_t>(seq.token_ids.size()));
  for (auto id : seq.token_ids) detail::put_u32(os, static_cast<std::uint32_t>(id));
  std::vector<char> bits((seq.loss_mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < seq.loss_mask.size(); ++i) {
    if (seq.loss_mask[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1 << (i % 8)));
  }
  os.write(bits.data(), static_cast<std::streamsize>(bits.size()));
  detail::put_u32(os, static_cast<std::uint32_t>(seq.spans.size()));
  for (const auto& s : seq.spans) {
    os.put(static_cast<char>(s.kind));
    detail::put_u32(os, s.begin);
    detail::put_u32(os, s.end);
    detail::put_u32(os, static_cast<std::uint32_t>(s.turn));
    detail::put_u32(os, static_cast<std::uint32_t>(s.media));
  }
}

inline void write_packed_manifest(std::ostream& os, const std::vector<PackedRecord>& records) {
  write_packed_header(os, records.size());
  for (const auto& r : records) write_packed_record(os, r);
}

inline std::vector<PackedRecord> read_packed_manifest(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kPackedMagic) {
    throw Error(ErrorCode::kFormat, "not a packed manifest (bad magic)");
  }
  const auto version = detail::get_u32(is);
  if (version != kPackedVersion) {
    throw Error(ErrorCode::kFormat, "unsupported packed manifest version " + std::to_string(version));
  }
  const auto count = detail::get_u64(is);
  std::vector<PackedRecord> records;
  for (std::uint64_t r = 0; r < count; ++r) {
    PackedRecord rec;
    const auto id_len = detail::get_u32(is);
    rec.id.resize(id_len);
    if (!is.read(rec.id.data(), id_len)) throw Error(ErrorCode::kFormat, "truncated record id");
    const auto n = detail::get_u32(is);
    auto& seq = rec.sequence;
    seq.token_ids.resize(n);
    for (auto& id : seq.token_ids) id = static_cast<std::int32_t>(detail::get_u32(is));
    std::vector<char> bits((n + 7) / 8);
    if (!is.read(bits.data(), static_cast<std::streamsize>(bits.size()))) {
      throw Error(ErrorCode::kFormat, "truncated loss mask");
    }
    seq.loss_mask.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      seq.loss_mask[i] = static_cast<std::uint8_t>((static_cast<unsigned char>(bits[i / 8]) >> (i % 8)) & 1u);
    }
    const auto n_spans = detail::get_u32(is);
    seq.spans.resize(n_spans);
    for (auto& s : seq.spans) {
      const auto kind = detail::get_u8(is);
      if (kind > static_cast<std::uint8_t>(SpanKind::kVision)) {
        throw Error(ErrorCode::kFormat, "unknown span kind " + std::to_string(kind));
      }
      s.kind = static_cast<SpanKind>(kind);
      s.begin = detail::get_u32(is);
      s.end = detail::get_u32(is);
      s.turn = static_cast<std::int32_t>(detail::get_u32(is));
      s.media = static_cast<std::int32_t>(detail::get_u32(is));
      if (s.begin > s.end || s.end > n) throw Error(ErrorCode::kFormat, "span out of range");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace ovprep
