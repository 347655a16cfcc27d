// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Staged training curriculum as data: the four stages, their resolution
// catalogs, visual-token ceilings, datasets and optimiser settings, plus a
// validator, a YAML round trip and visual-token cost estimates.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ovprep/datamix.hpp"
#include "ovprep/error.hpp"
#include "ovprep/geometry.hpp"
#include "ovprep/token_budget.hpp"

namespace ovprep {

enum class Module { kProjector, kVision, kLlm };

constexpr std::string_view module_name(Module m) {
  switch (m) {
    case Module::kProjector: return "projector";
    case Module::kVision: return "vision";
    case Module::kLlm: return "llm";
  }
  return "?";
}

inline Module parse_module(std::string_view s) {
  for (auto m : {Module::kProjector, Module::kVision, Module::kLlm}) {
    if (module_name(m) == s) return m;
  }
  throw Error(ErrorCode::kSchema, "unknown trainable module \"" + std::string(s) + "\"");
}

inline constexpr std::array<std::string_view, 4> kStageNames = {"Stage-1", "Stage-1.5", "Stage-2-SingleImage",
                                                                "Stage-2-OneVision"};

struct StageConfig {
  std::string name;
  /// False means the base view only, with no crops.
  bool anyres = true;
  GridCatalog catalog = GridCatalog(384, {{1, 1}});
  std::int64_t max_visual_tokens = 0;
  std::string dataset_ref;
  std::int64_t sample_count = 0;
  /// Sorted, unique.
  std::vector<Module> trainable;
  int batch_size = 0;
  double lr_vision = 0.0;
  double lr_proj_llm = 0.0;
  int epochs = 1;
  /// Informational only, never validated.
  std::string tunable_params;

  bool trains_full_model() const {
    return trainable == std::vector<Module>{Module::kProjector, Module::kVision, Module::kLlm};
  }

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct TrainingPlan {
  std::string profile;
  std::string llm_size;
  std::vector<StageConfig> stages;

  const StageConfig* find(std::string_view name) const {
    auto it = std::find_if(stages.begin(), stages.end(), [&](const auto& s) { return s.name == name; });
    return it == stages.end() ? nullptr : &*it;
  }

  friend bool operator==(const TrainingPlan&, const TrainingPlan&) = default;
};

// --- shipped curriculum ------------------------------------------------------

struct ModelProfile {
  std::string_view name;
  std::string_view llm_size;
  int batch_size;  // for every stage after alignment
  std::string_view projector_params;
  std::string_view full_params;
};

inline constexpr std::array<ModelProfile, 3> kModelProfiles = {{
    {"0.5b", "0.5B", 512, "1.8M", "0.8B"},
    {"7b", "7.6B", 256, "20.0M", "8.0B"},
    {"72b", "72.7B", 256, "72.0M", "73.2B"},
}};

inline const ModelProfile& model_profile(std::string_view name) {
  for (const auto& p : kModelProfiles) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model profile \"" + std::string(name) + "\" (use 0.5b, 7b or 72b)");
}

inline GridCatalog knowledge_stage_catalog() {
  return GridCatalog::with_fallback({{2, 2}, {1, 2}, {1, 3}, {2, 1}, {3, 1}});
}

inline TrainingPlan shipped_plan(std::string_view profile_name) {
  const auto& profile = model_profile(profile_name);
  constexpr std::int64_t kT = 729;
  const std::vector<Module> projector{Module::kProjector};
  const std::vector<Module> full{Module::kProjector, Module::kVision, Module::kLlm};
  const std::string full_params(profile.full_params);

  TrainingPlan plan;
  plan.profile = std::string(profile.name);
  plan.llm_size = std::string(profile.llm_size);
  plan.stages.push_back({"Stage-1", false, GridCatalog(384, {{1, 1}}), kT, "lcs558k", 558'000, projector, 512, 1e-3,
                         1e-3, 1, std::string(profile.projector_params)});
  plan.stages.push_back({"Stage-1.5", true, knowledge_stage_catalog(), kT * 5, "knowledge", 4'000'000, full,
                         profile.batch_size, 2e-6, 1e-5, 1, full_params});
  plan.stages.push_back({"Stage-2-SingleImage", true, default_catalog(), kT * 10, "table5", 3'200'000, full,
                         profile.batch_size, 2e-6, 1e-5, 1, full_params});
  plan.stages.push_back({"Stage-2-OneVision", true, default_catalog(), kT * 10, "onevision", 1'600'000, full,
                         profile.batch_size, 2e-6, 1e-5, 1, full_params});
  return plan;
}

// --- validation --------------------------------------------------------------

enum class Rule { kEmptyPlan, kStageOrder, kTrainable, kLrRatio, kLrPositive, kTokenCeiling, kCeilingOrder, kEpochs };

constexpr std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::kEmptyPlan: return "empty-plan";
    case Rule::kStageOrder: return "stage-order";
    case Rule::kTrainable: return "trainable";
    case Rule::kLrRatio: return "lr-ratio";
    case Rule::kLrPositive: return "lr-positive";
    case Rule::kTokenCeiling: return "token-ceiling";
    case Rule::kCeilingOrder: return "ceiling-order";
    case Rule::kEpochs: return "epochs";
  }
  return "?";
}

struct Violation {
  Rule rule = Rule::kEmptyPlan;
  std::string stage;
  std::string message;
};

inline constexpr double kVisionLrDivisor = 5.0;

/// Every way the plan departs from the curriculum. Empty means valid.
inline std::vector<Violation> validate_plan(const TrainingPlan& plan, const EncoderGeom& geom = {}) {
  std::vector<Violation> out;
  if (plan.stages.empty()) {
    out.push_back({Rule::kEmptyPlan, "", "plan has no stages"});
    return out;
  }
  const std::int64_t t = geom.tokens_per_view();
  const std::array<std::int64_t, 4> ceilings{t, t * 5, t * 10, t * 10};

  if (plan.stages.size() != kStageNames.size()) {
    out.push_back({Rule::kStageOrder, "",
                   "expected " + std::to_string(kStageNames.size()) + " stages, found " +
                       std::to_string(plan.stages.size())});
  }
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& s = plan.stages[i];
    if (i < kStageNames.size() && s.name != kStageNames[i]) {
      out.push_back({Rule::kStageOrder, s.name,
                     "position " + std::to_string(i + 1) + " should be " + std::string(kStageNames[i])});
    }
    const bool alignment = s.name == kStageNames[0];
    if (alignment && s.trainable != std::vector<Module>{Module::kProjector}) {
      out.push_back({Rule::kTrainable, s.name, "alignment stage must train the projector only"});
    }
    if (!alignment && !s.trains_full_model()) {
      out.push_back({Rule::kTrainable, s.name, "stage must train the full model"});
    }
    if (!(s.lr_vision > 0.0) || !(s.lr_proj_llm > 0.0)) {
      out.push_back({Rule::kLrPositive, s.name, "learning rates must be positive"});
    } else if (s.trains_full_model()) {
      const double expected = s.lr_proj_llm / kVisionLrDivisor;
      if (std::abs(s.lr_vision - expected) > 1e-9 * expected) {
        out.push_back({Rule::kLrRatio, s.name, "vision learning rate must be the projector/LLM rate divided by 5"});
      }
    }
    if (i < ceilings.size() && s.max_visual_tokens != ceilings[i]) {
      out.push_back({Rule::kTokenCeiling, s.name,
                     "visual-token ceiling " + std::to_string(s.max_visual_tokens) + " should be " +
                         std::to_string(ceilings[i])});
    }
    if (i > 0 && s.max_visual_tokens < plan.stages[i - 1].max_visual_tokens) {
      out.push_back({Rule::kCeilingOrder, s.name, "visual-token ceiling decreases from the previous stage"});
    }
    if (s.epochs != 1) {
      out.push_back({Rule::kEpochs, s.name, "epochs must be 1, found " + std::to_string(s.epochs)});
    }
  }
  return out;
}

// --- YAML round trip ---------------------------------------------------------

namespace detail {

inline std::string shortest_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline SpatialConfig parse_grid(const std::string& s) {
  SpatialConfig c{};
  const auto x = s.find('x');
  if (x == std::string::npos) throw Error(ErrorCode::kSchema, "grid \"" + s + "\" is not of the form AxB");
  const auto* first = s.data();
  const auto* mid = s.data() + x;
  const auto* last = s.data() + s.size();
  const auto ra = std::from_chars(first, mid, c.a);
  const auto rb = std::from_chars(mid + 1, last, c.b);
  if (ra.ec != std::errc{} || ra.ptr != mid || rb.ec != std::errc{} || rb.ptr != last) {
    throw Error(ErrorCode::kSchema, "grid \"" + s + "\" is not of the form AxB");
  }
  return c;
}

}  // namespace detail

/// Deterministic YAML for a plan. Invalid plans are refused unless forced.
inline std::string emit_manifest(const TrainingPlan& plan, bool force = false) {
  if (!force) {
    const auto violations = validate_plan(plan);
    if (!violations.empty()) {
      throw Error(ErrorCode::kInvalidPlan, "refusing to emit a plan with " + std::to_string(violations.size()) +
                                               " violation(s); first: " + violations.front().message);
    }
  }
  std::ostringstream os;
  os << "version: 1\n";
  os << "profile: " << detail::yaml_quote(plan.profile) << "\n";
  os << "llm: " << detail::yaml_quote(plan.llm_size) << "\n";
  os << "stages:\n";
  for (const auto& s : plan.stages) {
    os << "  - name: " << detail::yaml_quote(s.name) << "\n";
    os << "    resolution: " << (s.anyres ? "anyres" : "base") << "\n";
    os << "    base_edge: " << s.catalog.base_edge_px() << "\n";
    os << "    grids: [";
    for (std::size_t i = 0; i < s.catalog.configs().size(); ++i) {
      os << (i ? ", " : "") << to_string(s.catalog.configs()[i]);
    }
    os << "]\n";
    os << "    max_visual_tokens: " << s.max_visual_tokens << "\n";
    os << "    dataset: " << detail::yaml_quote(s.dataset_ref) << "\n";
    os << "    samples: " << s.sample_count << "\n";
    os << "    trainable: [";
    for (std::size_t i = 0; i < s.trainable.size(); ++i) os << (i ? ", " : "") << module_name(s.trainable[i]);
    os << "]\n";
    os << "    batch_size: " << s.batch_size << "\n";
    os << "    lr_vision: " << detail::shortest_double(s.lr_vision) << "\n";
    os << "    lr_proj_llm: " << detail::shortest_double(s.lr_proj_llm) << "\n";
    os << "    epochs: " << s.epochs << "\n";
    if (!s.tunable_params.empty()) os << "    tunable_params: " << detail::yaml_quote(s.tunable_params) << "\n";
  }
  return os.str();
}

inline TrainingPlan parse_plan(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kSchema, std::string("plan is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::kSchema, "plan must be a mapping");
  detail::reject_unknown_keys(root, {"version", "profile", "llm", "stages"}, "plan");
  if (!root["version"] || detail::yaml_as<int>(root["version"], "version") != 1) {
    throw Error(ErrorCode::kSchema, "plan needs version: 1");
  }
  TrainingPlan plan;
  if (root["profile"]) plan.profile = detail::yaml_as<std::string>(root["profile"], "profile");
  if (root["llm"]) plan.llm_size = detail::yaml_as<std::string>(root["llm"], "llm");
  const auto stages = root["stages"];
  if (!stages || !stages.IsSequence()) throw Error(ErrorCode::kSchema, "plan needs a \"stages\" list");
  for (const auto& node : stages) {
    if (!node.IsMap()) throw Error(ErrorCode::kSchema, "each stage must be a mapping");
    detail::reject_unknown_keys(node,
                                {"name", "resolution", "base_edge", "grids", "max_visual_tokens", "dataset", "samples",
                                 "trainable", "batch_size", "lr_vision", "lr_proj_llm", "epochs", "tunable_params"},
                                "stage");
    for (const char* key : {"name", "resolution", "grids", "max_visual_tokens", "dataset", "samples", "trainable",
                            "batch_size", "lr_vision", "lr_proj_llm", "epochs"}) {
      if (!node[key]) throw Error(ErrorCode::kSchema, std::string("stage is missing \"") + key + "\"");
    }
    StageConfig s;
    s.name = detail::yaml_as<std::string>(node["name"], "name");
    const auto resolution = detail::yaml_as<std::string>(node["resolution"], "resolution");
    if (resolution != "anyres" && resolution != "base") {
      throw Error(ErrorCode::kSchema, "resolution must be anyres or base");
    }
    s.anyres = resolution == "anyres";
    const auto edge = node["base_edge"] ? detail::yaml_as<std::int64_t>(node["base_edge"], "base_edge") : 384;
    std::vector<SpatialConfig> grids;
    for (const auto& g : node["grids"]) grids.push_back(detail::parse_grid(detail::yaml_as<std::string>(g, "grids")));
    try {
      s.catalog = GridCatalog(edge, std::move(grids));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchema, "stage " + s.name + ": " + e.what());
    }
    s.max_visual_tokens = detail::yaml_as<std::int64_t>(node["max_visual_tokens"], "max_visual_tokens");
    s.dataset_ref = detail::yaml_as<std::string>(node["dataset"], "dataset");
    s.sample_count = detail::yaml_as<std::int64_t>(node["samples"], "samples");
    for (const auto& m : node["trainable"]) s.trainable.push_back(parse_module(detail::yaml_as<std::string>(m, "trainable")));
    std::sort(s.trainable.begin(), s.trainable.end());
    s.trainable.erase(std::unique(s.trainable.begin(), s.trainable.end()), s.trainable.end());
    s.batch_size = detail::yaml_as<int>(node["batch_size"], "batch_size");
    s.lr_vision = detail::yaml_as<double>(node["lr_vision"], "lr_vision");
    s.lr_proj_llm = detail::yaml_as<double>(node["lr_proj_llm"], "lr_proj_llm");
    s.epochs = detail::yaml_as<int>(node["epochs"], "epochs");
    if (node["tunable_params"]) s.tunable_params = detail::yaml_as<std::string>(node["tunable_params"], "tunable_params");
    plan.stages.push_back(std::move(s));
  }
  return plan;
}

inline TrainingPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

// --- cost estimates ----------------------------------------------------------

struct StageEstimate {
  std::string stage;
  std::int64_t samples = 0;
  double tokens_per_sample = 0.0;
  double total_tokens = 0.0;
};

using MixtureIndex = std::map<std::string, MixtureSpec, std::less<>>;

struct WeightedShape {
  ImageShape shape;
  double weight = 1.0;
};

namespace detail {

inline const MixtureSpec& resolve_dataset(const MixtureIndex& manifests, const StageConfig& s) {
  auto it = manifests.find(s.dataset_ref);
  if (it == manifests.end()) {
    throw Error(ErrorCode::kUnresolvedDataset, "stage " + s.name + " references unknown dataset \"" + s.dataset_ref + "\"");
  }
  return it->second;
}

/// Worst-case visual tokens for one sample of the stage. Mixtures that carry
/// multi-image or video data are weighted by their modality counts, with the
/// stage ceiling standing in for every image-only category.
inline double per_sample_bound(const StageConfig& s, const MixtureSpec& mix, const EncoderGeom& geom) {
  const double image_max = s.anyres ? static_cast<double>(s.max_visual_tokens)
                                    : static_cast<double>(std::min(s.max_visual_tokens, geom.tokens_per_view()));
  std::int64_t multi = 0;
  std::int64_t video = 0;
  for (const auto& e : mix.entries) {
    if (e.category == Category::kMultiImage) multi += e.sample_count;
    if (e.category == Category::kVideo) video += e.sample_count;
  }
  const auto total = mix.total();
  if (multi + video == 0 || total == 0) return image_max;
  const auto single = total - multi - video;
  const double multi_max = static_cast<double>(scenario_maximum(multi_image_policy(geom), geom));
  const double video_max = static_cast<double>(scenario_maximum(video_policy(geom), geom));
  return (static_cast<double>(single) * image_max + static_cast<double>(multi) * multi_max +
          static_cast<double>(video) * video_max) /
         static_cast<double>(total);
}

}  // namespace detail

/// Upper bound on visual tokens each stage consumes.
inline std::vector<StageEstimate> token_cost_estimate(const TrainingPlan& plan, const MixtureIndex& manifests,
                                                      const EncoderGeom& geom = {}) {
  std::vector<StageEstimate> out;
  for (const auto& s : plan.stages) {
    const auto& mix = detail::resolve_dataset(manifests, s);
    const double per = detail::per_sample_bound(s, mix, geom);
    out.push_back({s.name, s.sample_count, per, per * static_cast<double>(s.sample_count)});
  }
  return out;
}

/// Expected visual tokens when image sizes follow the given distribution,
/// planned under each stage's own catalog and ceiling.
inline std::vector<StageEstimate> token_cost_estimate(const TrainingPlan& plan, const MixtureIndex& manifests,
                                                      std::span<const WeightedShape> shapes,
                                                      const EncoderGeom& geom = {}) {
  double weight_sum = 0.0;
  for (const auto& ws : shapes) {
    if (!(ws.weight >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "shape weights must be non-negative");
    weight_sum += ws.weight;
  }
  if (shapes.empty() || weight_sum <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "shape distribution needs positive total weight");
  }
  std::vector<StageEstimate> out;
  for (const auto& s : plan.stages) {
    detail::resolve_dataset(manifests, s);
    double acc = 0.0;
    for (const auto& ws : shapes) {
      std::int64_t tokens = 0;
      if (s.anyres) {
        auto policy = single_image_policy(geom);
        policy.tau = s.max_visual_tokens;
        tokens = plan_single_image(ws.shape, s.catalog, geom, policy).total;
      } else {
        require_valid(ws.shape);
        tokens = std::min(s.max_visual_tokens, plan_base_only(geom).total);
      }
      acc += ws.weight * static_cast<double>(tokens);
    }
    const double per = acc / weight_sum;
    out.push_back({s.name, s.sample_count, per, per * static_cast<double>(s.sample_count)});
  }
  return out;
}

}  // namespace ovprep
