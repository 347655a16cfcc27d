// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ovprep/commands.hpp"
#include "support/oracles.hpp"

namespace ovprep {
namespace {

namespace fs = std::filesystem;
const std::string kData = OVPREP_DATA_DIR;

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(OVPREP_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (const auto n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("ovprep-test-" + std::to_string(::getpid()) + "-" +
                                                  std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

TEST(CliPlan, SingleImageWorkedValue) {
  const auto r = run_cli("plan --width 2304 --height 2304");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["crop_plan"]["grid"], "6x6");
  EXPECT_EQ(j["token_plan"]["views"], 37);
  EXPECT_EQ(j["token_plan"]["per_view_tokens"][0], 197);
  EXPECT_EQ(j["token_plan"]["total"], 7289);
}

TEST(CliPlan, VideoClampsToCap) {
  const auto r = run_cli("plan --video-frames 100");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["token_plan"]["views"], 32);
  EXPECT_EQ(j["token_plan"]["per_view_tokens"][0], 196);
}

TEST(CliPlan, MultiImageAndOverrides) {
  const auto r = run_cli("plan --image 384x384 --image 768x384");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["token_plan"]["total"], 1080);
  const auto t = run_cli("plan --width 2304 --height 2304 --tau 3700");
  ASSERT_EQ(t.code, 0);
  EXPECT_EQ(nlohmann::json::parse(t.out)["token_plan"]["per_view_tokens"][0], 100);
}

TEST(CliPlan, InvalidInputExitsTwo) {
  EXPECT_EQ(run_cli("plan --width 0 --height 5").code, 2);
  EXPECT_EQ(run_cli("plan --width 10").code, 2);
  EXPECT_EQ(run_cli("plan").code, 2);
  EXPECT_EQ(run_cli("plan --image 12by4").code, 2);
  EXPECT_EQ(run_cli("plan --width 2304 --height 2304 --tau 5").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
}

TEST(CliPack, ThreeSampleFixture) {
  TempDir tmp;
  const auto r = run_cli("pack " + kData + "/fixtures/three_samples.jsonl -o " + (tmp / "out.ovpk").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("packed: 3"), std::string::npos);
  std::ifstream in(tmp / "out.ovpk", std::ios::binary);
  const auto records = read_packed_manifest(in);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1].id, "multi-0");
}

TEST(CliPack, StrayMarkerFlaggedAndStrictExitsOne) {
  TempDir tmp;
  const auto in = kData + "/fixtures/html_stray_marker.jsonl";
  const auto r = run_cli("pack " + in + " -o " + (tmp / "a.ovpk").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("flagged: 1"), std::string::npos);
  EXPECT_NE(r.out.find("web-0"), std::string::npos);
  EXPECT_EQ(run_cli("pack " + in + " --strict -o " + (tmp / "b.ovpk").string()).code, 1);
}

TEST(CliPack, EmptyFileGivesEmptyManifest) {
  TempDir tmp;
  const auto r = run_cli("pack " + kData + "/fixtures/empty.jsonl -o " + (tmp / "e.ovpk").string());
  ASSERT_EQ(r.code, 0);
  std::ifstream in(tmp / "e.ovpk", std::ios::binary);
  EXPECT_TRUE(read_packed_manifest(in).empty());
  EXPECT_EQ(fs::file_size(tmp / "e.ovpk"), 16u);
}

TEST(CliPack, MissingInputExitsTwo) {
  TempDir tmp;
  EXPECT_EQ(run_cli("pack /nonexistent.jsonl -o " + (tmp / "x").string()).code, 2);
  EXPECT_EQ(run_cli("pack " + kData + "/fixtures/empty.jsonl").code, 2);
}

TEST(CliPack, OutputIndependentOfJobCount) {
  TempDir tmp;
  {
    std::ofstream corpus(tmp / "corpus.jsonl");
    for (const auto& s : testing::make_corpus(60, 3)) corpus << s.record.dump() << "\n";
    corpus << "{broken\n";
  }
  PackOptions opt;
  opt.input = (tmp / "corpus.jsonl").string();
  opt.features_out = (tmp / "f1.bin").string();
  opt.output = (tmp / "p1.ovpk").string();
  std::ostringstream s1;
  std::ostringstream err;
  EXPECT_EQ(cmd_pack(opt, s1, err), 0);
  opt.jobs = 8;
  opt.output = (tmp / "p8.ovpk").string();
  opt.features_out = (tmp / "f8.bin").string();
  std::ostringstream s8;
  EXPECT_EQ(cmd_pack(opt, s8, err), 0);
  EXPECT_EQ(s1.str(), s8.str());
  EXPECT_EQ(slurp(tmp / "p1.ovpk"), slurp(tmp / "p8.ovpk"));
  EXPECT_EQ(slurp(tmp / "f1.bin"), slurp(tmp / "f8.bin"));
  EXPECT_NE(s1.str().find("malformed: 1"), std::string::npos);
}

TEST(CliMix, StatsReportsCategoryShares) {
  const auto r = run_cli("mix " + kData + "/manifests/table5.yaml --stats");
  ASSERT_EQ(r.code, 0);
  for (const char* pct : {"36.1%", "20.6%", "20.1%", "8.9%", "14.3%"}) {
    EXPECT_NE(r.out.find(pct), std::string::npos) << pct;
  }
  const auto csv = run_cli("mix " + kData + "/manifests/onevision.yaml --stats --csv");
  EXPECT_EQ(csv.out.rfind("category,count,percent\n", 0), 0u);
}

TEST(CliMix, SampleIsDeterministic) {
  const auto args = "mix " + kData + "/manifests/table5.yaml --sample 800000 --strategy proportional --seed 7";
  const auto a = run_cli(args);
  const auto b = run_cli(args + " --jobs 8");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(parse_mixture(a.out).total(), 800000);
}

TEST(CliMix, DedupeAndErrors) {
  const auto r = run_cli("mix " + kData + "/manifests/table5.yaml --dedupe " + kData + "/manifests/onevision.yaml");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sharegpt4v"), std::string::npos);
  EXPECT_EQ(run_cli("mix " + kData + "/manifests/table5.yaml").code, 2);
  EXPECT_EQ(run_cli("mix /nope.yaml --stats").code, 2);
  EXPECT_EQ(run_cli("mix " + kData + "/manifests/lcs558k.yaml --sample 9999999").code, 2);
}

TEST(CliMix, AttachedFileCountCheck) {
  TempDir tmp;
  {
    std::ofstream m(tmp / "m.yaml");
    m << "version: 1\nname: tiny\nentries:\n  - {name: A, category: General, count: 2, path: a.jsonl}\n";
    std::ofstream a(tmp / "a.jsonl");
    a << "{}\n{}\n{}\n";
  }
  const auto r = run_cli("mix " + (tmp / "m.yaml").string() + " --check-files");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("declared 2, found 3"), std::string::npos);
}

TEST(CliStages, ValidateShippedPlan) {
  const auto r = run_cli("stages --validate " + kData + "/plans/7b.yaml");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0 violations\n");
}

TEST(CliStages, EmitMatchesGolden) {
  for (const char* profile : {"0.5b", "7b", "72b"}) {
    const auto r = run_cli(std::string("stages --emit ") + profile);
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, slurp(kData + "/plans/" + profile + ".yaml"));
  }
  EXPECT_EQ(run_cli("stages --emit 13b").code, 2);
}

TEST(CliStages, MutatedPlanFails) {
  TempDir tmp;
  auto text = slurp(kData + "/plans/7b.yaml");
  const auto at = text.rfind("epochs: 1");
  text.replace(at, 9, "epochs: 2");
  std::ofstream(tmp / "bad.yaml") << text;
  const auto r = run_cli("stages --validate " + (tmp / "bad.yaml").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("1 violations"), std::string::npos);
  EXPECT_NE(r.out.find("[epochs]"), std::string::npos);
}

TEST(CliStages, EstimateAndUsageErrors) {
  const auto r = run_cli("stages --estimate " + kData + "/plans/7b.yaml --manifests " + kData + "/manifests");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Stage-1,558000,729,406782000"), std::string::npos);
  EXPECT_EQ(run_cli("stages").code, 2);
  EXPECT_EQ(run_cli("stages --estimate " + kData + "/plans/7b.yaml").code, 2);
  EXPECT_EQ(run_cli("stages --validate /missing.yaml").code, 2);
}

}  // namespace
}  // namespace ovprep
