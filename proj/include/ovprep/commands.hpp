// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Subcommand bodies behind the ovprep tool. Each takes a plain options
// struct plus output streams and returns the process exit code:
// 0 success, 1 partial result or failed check, 2 usage or input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ovprep/curriculum.hpp"
#include "ovprep/datamix.hpp"
#include "ovprep/error.hpp"
#include "ovprep/packed_manifest.hpp"
#include "ovprep/parallel.hpp"
#include "ovprep/pipeline.hpp"
#include "ovprep/token_budget.hpp"

namespace ovprep {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  f << text;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline nlohmann::json rect_json(const Rect& r) { return {r.x, r.y, r.width, r.height}; }

inline nlohmann::json plan_json(const TokenPlan& plan) {
  return {{"scenario", scenario_name(plan.scenario)},
          {"views", plan.per_view_tokens.size()},
          {"per_view_tokens", plan.per_view_tokens},
          {"total", plan.total}};
}

}  // namespace detail

// --- plan --------------------------------------------------------------------

struct PlanOptions {
  std::vector<ImageShape> images;
  std::optional<std::int64_t> video_frames;
  std::optional<std::int64_t> tau;
  std::optional<int> max_frames;
  std::optional<int> max_images;
};

inline nlohmann::json plan_document(const PlanOptions& opt) {
  const EncoderGeom geom;
  const auto catalog = default_catalog();
  if (opt.video_frames && !opt.images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give either image sizes or a frame count, not both");
  }
  if (opt.video_frames) {
    auto policy = video_policy(geom);
    if (opt.max_frames) policy.max_views = *opt.max_frames;
    if (opt.tau) throw Error(ErrorCode::kInvalidArgument, "--tau applies to single images only");
    return {{"token_plan", detail::plan_json(plan_video(*opt.video_frames, policy))}};
  }
  if (opt.images.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to plan: give --width/--height, --image or --video-frames");
  if (opt.images.size() == 1) {
    auto policy = single_image_policy(geom);
    if (opt.tau) policy.tau = *opt.tau;
    const auto& shape = opt.images.front();
    const auto crops = plan_crops(shape, catalog);
    const auto tokens = plan_single_image(shape, catalog, geom, policy);
    nlohmann::json crop_rects = nlohmann::json::array();
    for (const auto& r : crops.crop_rects) crop_rects.push_back(detail::rect_json(r));
    return {{"image", {shape.width_px, shape.height_px}},
            {"crop_plan",
             {{"grid", to_string(crops.config)},
              {"canvas", {crops.canvas_w_px, crops.canvas_h_px}},
              {"content", detail::rect_json(crops.content)},
              {"base_view", crops.base_view},
              {"crops", crop_rects}}},
            {"token_plan", detail::plan_json(tokens)}};
  }
  auto policy = multi_image_policy(geom);
  if (opt.max_images) policy.max_views = *opt.max_images;
  if (opt.tau) throw Error(ErrorCode::kInvalidArgument, "--tau applies to single images only");
  nlohmann::json images = nlohmann::json::array();
  for (const auto& s : opt.images) images.push_back({s.width_px, s.height_px});
  return {{"images", images},
          {"token_plan", detail::plan_json(plan_multi_image(std::span<const ImageShape>(opt.images), geom, policy))}};
}

inline int cmd_plan(const PlanOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    out << plan_document(opt).dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "ovprep plan: " << e.what() << "\n";
    return kExitUsage;
  }
}

// --- pack --------------------------------------------------------------------

struct PackOptions {
  std::string input;
  std::string output;
  std::optional<std::string> features_out;
  int feature_dim = 8;
  int jobs = 1;
  bool strict = false;
};

struct PackSummary {
  std::size_t records = 0;
  std::size_t packed = 0;
  std::size_t flagged = 0;
  std::size_t malformed = 0;
  std::vector<std::size_t> lengths;
  std::vector<std::string> notes;  // one per skipped record

  std::string render() const {
    std::ostringstream os;
    os << "records: " << records << "\n";
    os << "packed: " << packed << "\n";
    os << "flagged: " << flagged << "\n";
    os << "malformed: " << malformed << "\n";
    os << "length histogram:\n";
    for (const auto& [bound, count] : length_histogram(lengths)) os << "  <=" << bound << ": " << count << "\n";
    if (!notes.empty()) {
      os << "skipped:\n";
      for (const auto& n : notes) os << "  " << n << "\n";
    }
    return os.str();
  }
};

/// Packs every non-blank JSONL line. Output order follows input order for
/// any job count.
inline PackSummary pack_file(const PackOptions& opt, std::vector<PackResult>* results_out = nullptr) {
  const auto lines = detail::read_lines(opt.input);
  struct Item {
    std::size_t line_number;
    const std::string* text;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") != std::string::npos) items.push_back({i + 1, &lines[i]});
  }
  PipelineConfig cfg;
  cfg.feature_dim = opt.features_out ? opt.feature_dim : 0;
  const ByteTokenizer tok;
  auto results = ordered_parallel_map(std::span<const Item>(items), opt.jobs, [&](const Item& item) {
    return pack_line(*item.text, item.line_number, tok, cfg);
  });

  PackSummary summary;
  summary.records = results.size();
  std::vector<PackedRecord> records;
  std::vector<const FeatureGrid*> grids;
  for (const auto& r : results) {
    switch (r.status) {
      case PackStatus::kPacked:
        ++summary.packed;
        summary.lengths.push_back(r.sequence.token_ids.size());
        records.push_back({r.id, r.sequence});
        for (const auto& g : r.features) grids.push_back(&g);
        break;
      case PackStatus::kFlagged:
        ++summary.flagged;
        summary.notes.push_back("line " + std::to_string(r.line_number) + " flagged (" + r.id + "): " + r.reason);
        break;
      case PackStatus::kMalformed:
        ++summary.malformed;
        summary.notes.push_back("line " + std::to_string(r.line_number) + " malformed: " + r.reason);
        break;
    }
  }

  std::ofstream os(opt.output, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + opt.output);
  write_packed_manifest(os, records);
  if (opt.features_out) {
    std::ofstream fs(*opt.features_out, std::ios::binary);
    if (!fs) throw Error(ErrorCode::kIo, "cannot write " + *opt.features_out);
    detail::put_u64(fs, grids.size());
    for (const auto* g : grids) write_grid(fs, *g);
  }
  if (results_out) *results_out = std::move(results);
  return summary;
}

inline int cmd_pack(const PackOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.jobs < 1) {
    err << "ovprep pack: --jobs must be at least 1\n";
    return kExitUsage;
  }
  if (opt.features_out && opt.feature_dim < 2) {
    err << "ovprep pack: --feature-dim must be at least 2\n";
    return kExitUsage;
  }
  try {
    const auto summary = pack_file(opt);
    out << summary.render();
    const bool skipped = summary.flagged + summary.malformed > 0;
    return opt.strict && skipped ? kExitPartial : kExitOk;
  } catch (const Error& e) {
    err << "ovprep pack: " << e.what() << "\n";
    return kExitUsage;
  }
}

// --- mix ---------------------------------------------------------------------

struct MixOptions {
  std::string manifest;
  bool stats = false;
  bool csv = false;
  std::optional<std::int64_t> sample;
  std::string strategy = "proportional";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> dedupe;
  bool check_files = false;
  std::string output;
  int jobs = 1;
};

inline int cmd_mix(const MixOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.jobs < 1) {
    err << "ovprep mix: --jobs must be at least 1\n";
    return kExitUsage;
  }
  if (!opt.stats && !opt.sample && opt.dedupe.empty() && !opt.check_files) {
    err << "ovprep mix: choose --stats, --sample, --dedupe or --check-files\n";
    return kExitUsage;
  }
  try {
    std::vector<std::string> paths{opt.manifest};
    paths.insert(paths.end(), opt.dedupe.begin(), opt.dedupe.end());
    const auto specs = ordered_parallel_map(std::span<const std::string>(paths), opt.jobs,
                                            [](const std::string& p) { return load_mixture(p); });
    const auto& spec = specs.front();
    std::ostringstream report;
    int code = kExitOk;
    if (opt.stats) {
      const auto dist = distribution(spec);
      report << (opt.csv ? render_distribution_csv(dist) : render_distribution_text(dist, spec.name));
    }
    if (!opt.dedupe.empty()) {
      const auto collisions = dedupe_scan(specs);
      report << "duplicates: " << collisions.size() << "\n";
      for (const auto& c : collisions) {
        report << "  " << c.key << ":";
        for (const auto& o : c.occurrences) report << " [" << o.manifest_index << "] " << o.manifest_name << "/" << o.entry_name;
        report << "\n";
      }
    }
    if (opt.check_files) {
      const auto base = std::filesystem::path(opt.manifest).parent_path();
      const auto mismatches = check_attached_counts(spec, base);
      report << "count mismatches: " << mismatches.size() << "\n";
      for (const auto& m : mismatches) {
        report << "  " << m.name << ": declared " << m.declared << ", found " << m.found << "\n";
      }
      if (!mismatches.empty()) code = kExitPartial;
    }
    if (opt.sample) {
      const auto subset =
          sample_subset(spec, *opt.sample, parse_strategy(opt.strategy), opt.seed.value_or(spec.seed));
      if (opt.output.empty() || opt.output == "-") {
        report << emit_mixture(subset);
      } else {
        detail::write_text(opt.output, emit_mixture(subset), out);
      }
    }
    out << report.str();
    return code;
  } catch (const Error& e) {
    err << "ovprep mix: " << e.what() << "\n";
    return kExitUsage;
  }
}

// --- stages ------------------------------------------------------------------

struct StagesOptions {
  std::optional<std::string> validate;
  std::optional<std::string> emit;
  std::optional<std::string> estimate;
  std::string manifest_dir;
  std::string output;
  bool force = false;
};

inline std::string render_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " violations\n";
  for (const auto& v : violations) {
    os << "  [" << rule_name(v.rule) << "] " << (v.stage.empty() ? "plan" : v.stage) << ": " << v.message << "\n";
  }
  return os.str();
}

inline MixtureIndex load_mixture_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".yaml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  MixtureIndex index;
  for (const auto& f : files) {
    auto spec = load_mixture(f);
    auto key = spec.name;
    index.insert_or_assign(std::move(key), std::move(spec));
  }
  return index;
}

inline int cmd_stages(const StagesOptions& opt, std::ostream& out, std::ostream& err) {
  const int modes = int{opt.validate.has_value()} + int{opt.emit.has_value()} + int{opt.estimate.has_value()};
  if (modes != 1) {
    err << "ovprep stages: choose exactly one of --validate, --emit, --estimate\n";
    return kExitUsage;
  }
  try {
    if (opt.validate) {
      const auto violations = validate_plan(load_plan(*opt.validate));
      out << render_violations(violations);
      return violations.empty() ? kExitOk : kExitPartial;
    }
    if (opt.emit) {
      detail::write_text(opt.output, emit_manifest(shipped_plan(*opt.emit), opt.force), out);
      return kExitOk;
    }
    if (opt.manifest_dir.empty()) {
      err << "ovprep stages: --estimate needs --manifests DIR\n";
      return kExitUsage;
    }
    const auto estimates = token_cost_estimate(load_plan(*opt.estimate), load_mixture_dir(opt.manifest_dir));
    std::ostringstream os;
    os << "stage,samples,tokens_per_sample,total_tokens\n";
    for (const auto& e : estimates) {
      os << e.stage << "," << e.samples << "," << detail::shortest_double(e.tokens_per_sample) << ","
         << detail::shortest_double(e.total_tokens) << "\n";
    }
    detail::write_text(opt.output, os.str(), out);
    return kExitOk;
  } catch (const Error& e) {
    err << "ovprep stages: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ovprep
