// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ovprep/commands.hpp"

namespace {

ovprep::ImageShape parse_dims(const std::string& s) {
  const auto c = ovprep::detail::parse_grid(s);  // same AxB syntax
  return {c.a, c.b};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ovprep: visual-token planning, sequence packing, data mixtures and curriculum manifests"};
  app.require_subcommand(1);

  ovprep::PlanOptions plan;
  std::optional<std::int64_t> width;
  std::optional<std::int64_t> height;
  std::vector<std::string> image_dims;
  auto* plan_cmd = app.add_subcommand("plan", "Plan crops and visual tokens for an image, image set or video");
  plan_cmd->add_option("--width", width, "Image width in pixels");
  plan_cmd->add_option("--height", height, "Image height in pixels");
  plan_cmd->add_option("--image", image_dims, "Image size as WIDTHxHEIGHT; repeat for a multi-image sample");
  plan_cmd->add_option("--video-frames", plan.video_frames, "Number of sampled video frames");
  plan_cmd->add_option("--tau", plan.tau, "Single-image token threshold");
  plan_cmd->add_option("--max-frames", plan.max_frames, "Video frame cap");
  plan_cmd->add_option("--max-images", plan.max_images, "Multi-image count cap");

  ovprep::PackOptions pack;
  auto* pack_cmd = app.add_subcommand("pack", "Pack JSONL conversations into a binary sequence manifest");
  pack_cmd->add_option("input", pack.input, "Input JSONL")->required();
  pack_cmd->add_option("-o,--output", pack.output, "Output packed manifest")->required();
  pack_cmd->add_option("--features-out", pack.features_out, "Also write stand-in encoder features here");
  pack_cmd->add_option("--feature-dim", pack.feature_dim, "Channels of the stand-in features");
  pack_cmd->add_option("-j,--jobs", pack.jobs, "Worker threads");
  pack_cmd->add_flag("--strict", pack.strict, "Exit 1 when any record is skipped");

  ovprep::MixOptions mix;
  auto* mix_cmd = app.add_subcommand("mix", "Inspect, subsample or cross-check a data-mixture manifest");
  mix_cmd->add_option("manifest", mix.manifest, "Mixture manifest (YAML)")->required();
  mix_cmd->add_flag("--stats", mix.stats, "Print the category distribution");
  mix_cmd->add_flag("--csv", mix.csv, "Distribution as CSV");
  mix_cmd->add_option("--sample", mix.sample, "Draw a subset of this many samples");
  mix_cmd->add_option("--strategy", mix.strategy, "proportional or balanced")
      ->check(CLI::IsMember({"proportional", "balanced"}));
  mix_cmd->add_option("--seed", mix.seed, "Tie-break seed (defaults to the manifest's)");
  mix_cmd->add_option("--dedupe", mix.dedupe, "Other manifests to check for shared datasets");
  mix_cmd->add_flag("--check-files", mix.check_files, "Compare declared counts with attached JSONL files");
  mix_cmd->add_option("-o,--output", mix.output, "Where to write the sampled manifest");
  mix_cmd->add_option("-j,--jobs", mix.jobs, "Worker threads");

  ovprep::StagesOptions stages;
  auto* stages_cmd = app.add_subcommand("stages", "Validate, emit or cost a training-curriculum plan");
  stages_cmd->add_option("--validate", stages.validate, "Plan manifest to validate");
  stages_cmd->add_option("--emit", stages.emit, "Emit the shipped plan for a model profile (0.5b, 7b, 72b)");
  stages_cmd->add_option("--estimate", stages.estimate, "Plan manifest to cost");
  stages_cmd->add_option("--manifests", stages.manifest_dir, "Directory of mixture manifests for --estimate");
  stages_cmd->add_option("-o,--output", stages.output, "Output file");
  stages_cmd->add_flag("--force", stages.force, "Emit even if the plan fails validation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ovprep::kExitOk : ovprep::kExitUsage;
  }

  if (plan_cmd->parsed()) {
    try {
      if (width || height) {
        if (!width || !height) throw ovprep::Error(ovprep::ErrorCode::kInvalidArgument, "--width and --height go together");
        plan.images.push_back({*width, *height});
      }
      for (const auto& d : image_dims) plan.images.push_back(parse_dims(d));
    } catch (const ovprep::Error& e) {
      std::cerr << "ovprep plan: " << e.what() << "\n";
      return ovprep::kExitUsage;
    }
    return ovprep::cmd_plan(plan, std::cout, std::cerr);
  }
  if (pack_cmd->parsed()) return ovprep::cmd_pack(pack, std::cout, std::cerr);
  if (mix_cmd->parsed()) return ovprep::cmd_mix(mix, std::cout, std::cerr);
  return ovprep::cmd_stages(stages, std::cout, std::cerr);
}
