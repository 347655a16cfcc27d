// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dataset-mixture manifests: loading and validation, category
// distributions, seeded subsampling, cross-manifest duplicate detection,
// and formatting-prompt application.
//
// Manifest layout (YAML):
//
//   version: 1
//   name: table5-single-image
//   prompt_table: single-image      # single-image | onevision | none
//   seed: 0
//   target_total: 3200000           # optional, headline size
//   entries:
//     - {name: AOKVQA, category: General, count: 66160, prompt_id: 1, form: fixed}
//     - {name: RefCOCO, category: General, count: 50586, prompt_id: [7, 8], form: fixed}
//     - {name: LLaVA-158K, category: General, count: 158000, form: free, path: llava158k.jsonl}

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ovprep/error.hpp"
#include "ovprep/prompts.hpp"

namespace ovprep {

enum class Category {
  kGeneral,
  kDocChartScreen,
  kMathReasoning,
  kGeneralOcr,
  kLanguage,
  kSingleImage,
  kMultiImage,
  kVideo,
};

inline constexpr std::array<Category, 8> kAllCategories = {
    Category::kGeneral,     Category::kDocChartScreen, Category::kMathReasoning, Category::kGeneralOcr,
    Category::kLanguage,    Category::kSingleImage,    Category::kMultiImage,    Category::kVideo};

constexpr std::string_view category_name(Category c) {
  switch (c) {
    case Category::kGeneral: return "General";
    case Category::kDocChartScreen: return "Doc/Chart/Screen";
    case Category::kMathReasoning: return "Math/Reasoning";
    case Category::kGeneralOcr: return "General OCR";
    case Category::kLanguage: return "Language";
    case Category::kSingleImage: return "Single-Image";
    case Category::kMultiImage: return "Multi-Image";
    case Category::kVideo: return "Video";
  }
  return "?";
}

inline Category parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  throw Error(ErrorCode::kUnknownCategory, "unknown category \"" + std::string(name) + "\"");
}

enum class AnswerForm { kFixed, kFree };

struct DatasetEntry {
  std::string name;
  Category category = Category::kGeneral;
  std::int64_t sample_count = 0;
  /// Empty when no formatting prompt is assigned. Some datasets carry two.
  std::vector<int> prompt_ids;
  AnswerForm answer_form = AnswerForm::kFree;
  std::optional<std::string> path;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct MixtureSpec {
  int version = 1;
  std::string name;
  std::string prompt_table = "none";
  std::vector<DatasetEntry> entries;
  std::optional<std::int64_t> target_total;
  std::uint64_t seed = 0;

  std::int64_t total() const {
    return std::accumulate(entries.begin(), entries.end(), std::int64_t{0},
                           [](std::int64_t acc, const DatasetEntry& e) { return acc + e.sample_count; });
  }

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

/// Checks the invariants that do not depend on parsing: unique names,
/// non-negative counts, prompt ids resolving in the named table.
inline void validate_mixture(const MixtureSpec& spec) {
  const auto table = prompt_table_named(spec.prompt_table);
  std::set<std::string> seen;
  for (const auto& e : spec.entries) {
    if (e.name.empty()) throw Error(ErrorCode::kSchema, "entry with empty name");
    if (!seen.insert(e.name).second) {
      throw Error(ErrorCode::kDuplicateEntry, "entry \"" + e.name + "\" listed twice");
    }
    if (e.sample_count < 0) throw Error(ErrorCode::kSchema, "entry \"" + e.name + "\" has a negative count");
    for (int id : e.prompt_ids) {
      if (!table || table->get().find(id) == nullptr) {
        throw Error(ErrorCode::kDanglingPrompt, "entry \"" + e.name + "\" references prompt " + std::to_string(id) +
                                                    " missing from table \"" + spec.prompt_table + "\"");
      }
    }
  }
}

namespace detail {

template <typename T>
T yaml_as(const YAML::Node& node, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorCode::kSchema, "field \"" + std::string(what) + "\" has the wrong type");
  }
}

inline void reject_unknown_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kSchema, "unknown key \"" + key + "\" in " + std::string(where));
    }
  }
}

}  // namespace detail

inline MixtureSpec parse_mixture(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kSchema, std::string("manifest is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::kSchema, "manifest must be a mapping");
  detail::reject_unknown_keys(root, {"version", "name", "prompt_table", "seed", "target_total", "entries", "notes"},
                              "manifest");
  MixtureSpec spec;
  if (!root["version"]) throw Error(ErrorCode::kSchema, "manifest is missing \"version\"");
  spec.version = detail::yaml_as<int>(root["version"], "version");
  if (spec.version != 1) throw Error(ErrorCode::kSchema, "unsupported manifest version");
  if (root["name"]) spec.name = detail::yaml_as<std::string>(root["name"], "name");
  if (root["prompt_table"]) spec.prompt_table = detail::yaml_as<std::string>(root["prompt_table"], "prompt_table");
  if (root["seed"]) spec.seed = detail::yaml_as<std::uint64_t>(root["seed"], "seed");
  if (root["target_total"]) spec.target_total = detail::yaml_as<std::int64_t>(root["target_total"], "target_total");
  const auto entries = root["entries"];
  if (!entries) throw Error(ErrorCode::kSchema, "manifest is missing \"entries\"");
  if (!entries.IsSequence() && !entries.IsNull()) throw Error(ErrorCode::kSchema, "\"entries\" must be a list");
  for (const auto& node : entries) {
    if (!node.IsMap()) throw Error(ErrorCode::kSchema, "each entry must be a mapping");
    detail::reject_unknown_keys(node, {"name", "category", "count", "prompt_id", "form", "path"}, "entry");
    for (const char* key : {"name", "category", "count"}) {
      if (!node[key]) throw Error(ErrorCode::kSchema, std::string("entry is missing \"") + key + "\"");
    }
    DatasetEntry e;
    e.name = detail::yaml_as<std::string>(node["name"], "name");
    e.category = parse_category(detail::yaml_as<std::string>(node["category"], "category"));
    e.sample_count = detail::yaml_as<std::int64_t>(node["count"], "count");
    if (const auto p = node["prompt_id"]; p && !p.IsNull()) {
      if (p.IsSequence()) {
        for (const auto& id : p) e.prompt_ids.push_back(detail::yaml_as<int>(id, "prompt_id"));
      } else {
        e.prompt_ids.push_back(detail::yaml_as<int>(p, "prompt_id"));
      }
    }
    if (node["form"]) {
      const auto form = detail::yaml_as<std::string>(node["form"], "form");
      if (form == "fixed") {
        e.answer_form = AnswerForm::kFixed;
      } else if (form == "free") {
        e.answer_form = AnswerForm::kFree;
      } else {
        throw Error(ErrorCode::kSchema, "form must be fixed or free, got \"" + form + "\"");
      }
    }
    if (node["path"]) e.path = detail::yaml_as<std::string>(node["path"], "path");
    spec.entries.push_back(std::move(e));
  }
  validate_mixture(spec);
  return spec;
}

inline MixtureSpec load_mixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mixture(ss.str());
}

namespace detail {

inline std::string yaml_quote(std::string_view s) {
  const bool plain = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == ' ' || c == '/';
  }) && s.front() != ' ' && s.back() != ' ';
  if (plain) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace detail

/// Deterministic YAML rendering that parse_mixture reads back unchanged.
inline std::string emit_mixture(const MixtureSpec& spec) {
  std::ostringstream os;
  os << "version: " << spec.version << "\n";
  os << "name: " << detail::yaml_quote(spec.name.empty() ? "unnamed" : spec.name) << "\n";
  os << "prompt_table: " << spec.prompt_table << "\n";
  os << "seed: " << spec.seed << "\n";
  if (spec.target_total) os << "target_total: " << *spec.target_total << "\n";
  if (spec.entries.empty()) {
    os << "entries: []\n";
    return os.str();
  }
  os << "entries:\n";
  for (const auto& e : spec.entries) {
    os << "  - {name: " << detail::yaml_quote(e.name) << ", category: " << detail::yaml_quote(category_name(e.category))
       << ", count: " << e.sample_count;
    if (e.prompt_ids.size() == 1) {
      os << ", prompt_id: " << e.prompt_ids.front();
    } else if (!e.prompt_ids.empty()) {
      os << ", prompt_id: [";
      for (std::size_t i = 0; i < e.prompt_ids.size(); ++i) os << (i ? ", " : "") << e.prompt_ids[i];
      os << "]";
    }
    os << ", form: " << (e.answer_form == AnswerForm::kFixed ? "fixed" : "free");
    if (e.path) os << ", path: " << detail::yaml_quote(*e.path);
    os << "}\n";
  }
  return os.str();
}

/// Entries whose attached JSONL file line count differs from the declared
/// count. Entries without a path, or whose file is absent, are skipped.
struct CountMismatch {
  std::string name;
  std::int64_t declared = 0;
  std::int64_t found = 0;
};

inline std::vector<CountMismatch> check_attached_counts(const MixtureSpec& spec, const std::filesystem::path& base) {
  std::vector<CountMismatch> out;
  for (const auto& e : spec.entries) {
    if (!e.path) continue;
    const auto p = base / *e.path;
    std::ifstream in(p);
    if (!in) continue;
    std::int64_t lines = 0;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) ++lines;
    }
    if (lines != e.sample_count) out.push_back({e.name, e.sample_count, lines});
  }
  return out;
}

// --- distribution ----------------------------------------------------------

struct DistributionRow {
  Category category = Category::kGeneral;
  std::int64_t count = 0;
  double percent = 0.0;
};

struct DistributionReport {
  std::vector<DistributionRow> rows;  // canonical category order, present categories only
  std::int64_t total = 0;

  const DistributionRow* find(Category c) const {
    auto it = std::find_if(rows.begin(), rows.end(), [c](const auto& r) { return r.category == c; });
    return it == rows.end() ? nullptr : &*it;
  }
};

inline DistributionReport distribution(const MixtureSpec& spec) {
  std::map<Category, std::int64_t> counts;
  for (const auto& e : spec.entries) counts[e.category] += e.sample_count;
  DistributionReport report;
  report.total = spec.total();
  for (auto c : kAllCategories) {
    auto it = counts.find(c);
    if (it == counts.end()) continue;
    const double pct = report.total > 0 ? 100.0 * static_cast<double>(it->second) / static_cast<double>(report.total) : 0.0;
    report.rows.push_back({c, it->second, pct});
  }
  return report;
}

/// One-decimal percentage rendering used by every report surface.
inline std::string format_percent(double pct) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), pct, std::chars_format::fixed, 1);
  return std::string(buf.data(), res.ptr);
}

inline std::string render_distribution_text(const DistributionReport& report, std::string_view title) {
  std::ostringstream os;
  os << "mixture: " << title << "\n";
  os << "total: " << report.total << "\n";
  std::size_t width = 8;
  for (const auto& r : report.rows) width = std::max(width, category_name(r.category).size());
  for (const auto& r : report.rows) {
    const auto name = category_name(r.category);
    os << "  " << name << std::string(width - name.size(), ' ') << "  " << r.count << "  "
       << format_percent(r.percent) << "%\n";
  }
  return os.str();
}

inline std::string render_distribution_csv(const DistributionReport& report) {
  std::ostringstream os;
  os << "category,count,percent\n";
  for (const auto& r : report.rows) {
    os << "\"" << category_name(r.category) << "\"," << r.count << "," << format_percent(r.percent) << "\n";
  }
  os << "\"total\"," << report.total << ",100.0\n";
  return os.str();
}

// --- seeded subsampling ----------------------------------------------------

enum class SampleStrategy { kProportional, kBalanced };

inline SampleStrategy parse_strategy(std::string_view s) {
  if (s == "proportional") return SampleStrategy::kProportional;
  if (s == "balanced") return SampleStrategy::kBalanced;
  throw Error(ErrorCode::kInvalidArgument, "unknown sampling strategy \"" + std::string(s) + "\"");
}

namespace detail {

/// Unbiased index in [0, n) from a 64-bit engine, identical on every
/// standard library (std::uniform_int_distribution is not).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % bound);
}

/// Seeded tie-break ranks: a Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> seeded_ranks(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[perm[i]] = i;
  return rank;
}

/// Largest-remainder apportionment of `n` across `weights` (sum > 0).
inline std::vector<std::int64_t> largest_remainder(const std::vector<std::int64_t>& weights, std::int64_t n,
                                                   std::uint64_t seed) {
  const __int128 total = std::accumulate(weights.begin(), weights.end(), __int128{0});
  std::vector<std::int64_t> out(weights.size(), 0);
  if (total == 0 || n == 0) return out;
  std::vector<__int128> rem(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const __int128 scaled = static_cast<__int128>(weights[i]) * n;
    out[i] = static_cast<std::int64_t>(scaled / total);
    rem[i] = scaled % total;
    assigned += out[i];
  }
  const auto rank = seeded_ranks(weights.size(), seed);
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return rank[a] < rank[b];
  });
  for (std::size_t k = 0; assigned < n; ++k) {
    ++out[order[k % order.size()]];
    ++assigned;
  }
  return out;
}

/// Equal shares capped by availability (water filling); the leftover below
/// one unit per open category goes to seeded-ranked categories with room.
inline std::vector<std::int64_t> water_fill(const std::vector<std::int64_t>& avail, std::int64_t n,
                                            std::uint64_t seed) {
  std::vector<std::int64_t> out(avail.size(), 0);
  if (avail.empty() || n == 0) return out;
  // Largest level L with sum(min(avail, L)) <= n.
  std::int64_t lo = 0;
  std::int64_t hi = *std::max_element(avail.begin(), avail.end());
  auto filled = [&](std::int64_t level) {
    __int128 s = 0;
    for (auto a : avail) s += std::min(a, level);
    return s;
  };
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo + 1) / 2;
    if (filled(mid) <= n) lo = mid; else hi = mid - 1;
  }
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < avail.size(); ++i) {
    out[i] = std::min(avail[i], lo);
    assigned += out[i];
  }
  const auto rank = seeded_ranks(avail.size(), seed);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < avail.size(); ++i) {
    if (avail[i] > out[i]) open.push_back(i);
  }
  std::sort(open.begin(), open.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  for (std::size_t k = 0; assigned < n && k < open.size(); ++k) {
    ++out[open[k]];
    ++assigned;
  }
  return out;
}

}  // namespace detail

/// Picks n samples' worth of per-entry counts. Proportional keeps category
/// ratios (largest remainder at category level, then across entries);
/// balanced gives categories equal shares up to what they hold.
inline MixtureSpec sample_subset(const MixtureSpec& spec, std::int64_t n, SampleStrategy strategy,
                                 std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be non-negative");
  const auto total = spec.total();
  if (n > total) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot sample " + std::to_string(n) + " from a mixture of " + std::to_string(total));
  }
  std::vector<Category> cats;
  std::vector<std::int64_t> cat_counts;
  for (auto c : kAllCategories) {
    std::int64_t sum = 0;
    bool present = false;
    for (const auto& e : spec.entries) {
      if (e.category == c) {
        sum += e.sample_count;
        present = true;
      }
    }
    if (present) {
      cats.push_back(c);
      cat_counts.push_back(sum);
    }
  }
  const auto quotas = strategy == SampleStrategy::kProportional
                          ? detail::largest_remainder(cat_counts, n, seed)
                          : detail::water_fill(cat_counts, n, seed);

  MixtureSpec out = spec;
  out.target_total = n;
  out.seed = seed;
  for (std::size_t ci = 0; ci < cats.size(); ++ci) {
    std::vector<std::size_t> members;
    std::vector<std::int64_t> weights;
    for (std::size_t i = 0; i < spec.entries.size(); ++i) {
      if (spec.entries[i].category == cats[ci]) {
        members.push_back(i);
        weights.push_back(spec.entries[i].sample_count);
      }
    }
    const auto split = detail::largest_remainder(weights, quotas[ci], seed ^ (0x9e3779b97f4a7c15ULL * (ci + 1)));
    for (std::size_t k = 0; k < members.size(); ++k) out.entries[members[k]].sample_count = split[k];
  }
  return out;
}

// --- duplicate scan ----------------------------------------------------------

struct Occurrence {
  std::size_t manifest_index = 0;
  std::string manifest_name;
  std::string entry_name;
  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

struct Collision {
  std::string key;
  std::vector<Occurrence> occurrences;
};

/// Lowercased alphanumerics only, so "Doc-VQA" and "DocVQA" match.
inline std::string dataset_key(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

/// Dataset names present in more than one of the given manifests (by list
/// position, so passing the same manifest twice reports every entry).
inline std::vector<Collision> dedupe_scan(const std::vector<MixtureSpec>& specs) {
  std::map<std::string, Collision> by_key;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    for (const auto& e : specs[m].entries) {
      auto& col = by_key[dataset_key(e.name)];
      col.key = dataset_key(e.name);
      col.occurrences.push_back({m, specs[m].name, e.name});
    }
  }
  std::vector<Collision> out;
  for (auto& [key, col] : by_key) {
    std::set<std::size_t> manifests;
    for (const auto& o : col.occurrences) manifests.insert(o.manifest_index);
    if (manifests.size() > 1) out.push_back(std::move(col));
  }
  return out;
}

// --- formatting prompts ------------------------------------------------------

struct InstructionSample {
  std::string instruction;
  std::string answer;
  friend bool operator==(const InstructionSample&, const InstructionSample&) = default;
};

namespace detail {

struct SplitInstruction {
  std::string media_prefix;  // leading markers, each with its trailing newline
  std::string body;
};

inline SplitInstruction split_media_prefix(std::string_view text, std::string_view marker) {
  std::size_t pos = 0;
  while (!marker.empty() && text.substr(pos, marker.size()) == marker) {
    pos += marker.size();
    if (pos < text.size() && text[pos] == '\n') ++pos;
  }
  return {std::string(text.substr(0, pos)), std::string(text.substr(pos))};
}

}  // namespace detail

/// Attaches a formatting prompt to the instruction. Head puts the variant
/// and a newline before the question, Tail a newline and the variant after
/// it, All replaces the question text. Leading media markers stay in front
/// and inline markers survive an All replacement, so the marker count never
/// changes. The answer is untouched.
inline InstructionSample apply_prompt(const InstructionSample& sample, const FormattingPrompt& prompt,
                                      std::mt19937_64& rng, std::string_view marker = "<image>") {
  if (prompt.variants.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "prompt " + std::to_string(prompt.id) + " has no variants");
  }
  const auto& variant = prompt.variants[detail::uniform_index(rng, prompt.variants.size())];
  auto [prefix, body] = detail::split_media_prefix(sample.instruction, marker);
  InstructionSample out{prefix, sample.answer};
  switch (prompt.position) {
    case PromptPosition::kHead:
      out.instruction += variant + "\n" + body;
      break;
    case PromptPosition::kTail:
      out.instruction += body + "\n" + variant;
      break;
    case PromptPosition::kAll: {
      std::size_t inline_markers = 0;
      for (auto p = body.find(marker); !marker.empty() && p != std::string::npos; p = body.find(marker, p + marker.size())) {
        ++inline_markers;
      }
      for (std::size_t i = 0; i < inline_markers; ++i) out.instruction += std::string(marker) + "\n";
      out.instruction += variant;
      break;
    }
  }
  return out;
}

}  // namespace ovprep
