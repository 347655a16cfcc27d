// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "ovprep/datamix.hpp"
#include "ovprep/sequence.hpp"
#include "support/oracles.hpp"

namespace ovprep {
namespace {

const std::string kData = OVPREP_DATA_DIR;

ErrorCode code_of(const std::string& yaml) {
  try {
    parse_mixture(yaml);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error for:\n" << yaml;
  return ErrorCode::kIo;
}

TEST(Manifest, ShippedManifestsLoad) {
  for (const char* name : {"table5", "onevision", "knowledge", "lcs558k"}) {
    const auto spec = load_mixture(kData + "/manifests/" + name + ".yaml");
    EXPECT_EQ(spec.name, name);
    EXPECT_FALSE(spec.entries.empty());
  }
}

TEST(Manifest, Table5ExactTotalAndDualPrompts) {
  const auto spec = load_mixture(kData + "/manifests/table5.yaml");
  EXPECT_EQ(spec.total(), 3147325);
  EXPECT_EQ(spec.target_total, 3200000);
  const auto it = std::find_if(spec.entries.begin(), spec.entries.end(), [](const auto& e) { return e.name == "RefCOCO"; });
  ASSERT_NE(it, spec.entries.end());
  EXPECT_EQ(it->prompt_ids, (std::vector<int>{7, 8}));
  EXPECT_EQ(it->answer_form, AnswerForm::kFixed);
}

TEST(Manifest, DistinctErrorsPerFailureKind) {
  EXPECT_EQ(code_of("version: 1\nentries:\n  - {name: A, category: Astrology, count: 1}\n"),
            ErrorCode::kUnknownCategory);
  EXPECT_EQ(code_of("version: 1\nprompt_table: single-image\nentries:\n  - {name: A, category: General, count: 1, "
                    "prompt_id: 99}\n"),
            ErrorCode::kDanglingPrompt);
  EXPECT_EQ(code_of("version: 1\nentries:\n  - {name: A, category: General, count: 1}\n  - {name: A, category: "
                    "General, count: 2}\n"),
            ErrorCode::kDuplicateEntry);
  EXPECT_EQ(code_of("version: 1\nentries:\n  - {name: A, count: 1}\n"), ErrorCode::kSchema);
  EXPECT_EQ(code_of("version: 2\nentries: []\n"), ErrorCode::kSchema);
  EXPECT_EQ(code_of("version: 1\nentries:\n  - {name: A, category: General, count: 1, colour: red}\n"),
            ErrorCode::kSchema);
  EXPECT_EQ(code_of("[unclosed"), ErrorCode::kSchema);
  EXPECT_EQ(code_of("version: 1\nprompt_table: none\nentries:\n  - {name: A, category: General, count: 1, prompt_id: 1}\n"),
            ErrorCode::kDanglingPrompt);
  try {
    load_mixture(kData + "/manifests/missing.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Manifest, EmitParseRoundTrip) {
  for (const char* name : {"table5", "onevision", "knowledge"}) {
    const auto spec = load_mixture(kData + "/manifests/" + name + ".yaml");
    EXPECT_EQ(parse_mixture(emit_mixture(spec)), spec);
    EXPECT_EQ(emit_mixture(parse_mixture(emit_mixture(spec))), emit_mixture(spec));
  }
}

TEST(Distribution, Table5CategoryShares) {
  const auto d = distribution(load_mixture(kData + "/manifests/table5.yaml"));
  EXPECT_EQ(d.find(Category::kGeneral)->count, 1137626);
  EXPECT_EQ(format_percent(d.find(Category::kGeneral)->percent), "36.1");
  EXPECT_EQ(format_percent(d.find(Category::kDocChartScreen)->percent), "20.6");
  EXPECT_EQ(format_percent(d.find(Category::kMathReasoning)->percent), "20.1");
  EXPECT_EQ(format_percent(d.find(Category::kGeneralOcr)->percent), "8.9");
  EXPECT_EQ(format_percent(d.find(Category::kLanguage)->percent), "14.3");
}

TEST(Distribution, PercentagesSumToHundred) {
  const auto d = distribution(load_mixture(kData + "/manifests/onevision.yaml"));
  double sum = 0;
  for (const auto& r : d.rows) sum += r.percent;
  EXPECT_NEAR(sum, 100.0, 1e-9);
  EXPECT_EQ(d.total, 1323500);
}

TEST(Distribution, RendersTextAndCsv) {
  const auto d = distribution(load_mixture(kData + "/manifests/table5.yaml"));
  const auto csv = render_distribution_csv(d);
  EXPECT_NE(csv.find("\"General\",1137626,36.1"), std::string::npos);
  EXPECT_NE(render_distribution_text(d, "table5").find("Doc/Chart/Screen"), std::string::npos);
}

// Proportional allocation property oracle: exact quota via rationals,
// every allocation within one of it, the total exact, and no entry that
// received the extra unit has a smaller remainder than one that did not.
void check_largest_remainder(const std::vector<std::int64_t>& w, std::int64_t n, std::uint64_t seed) {
  using testing::Q;
  const auto alloc = detail::largest_remainder(w, n, seed);
  std::int64_t total_w = 0;
  for (auto x : w) total_w += x;
  ASSERT_EQ(std::accumulate(alloc.begin(), alloc.end(), std::int64_t{0}), n);
  Q min_bumped(2);
  Q max_unbumped(-1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Q exact = Q(w[i]) * n / total_w;
    const auto fl = static_cast<std::int64_t>(testing::floor_q(exact));
    ASSERT_TRUE(alloc[i] == fl || alloc[i] == fl + 1);
    const Q rem = exact - fl;
    if (alloc[i] == fl + 1) {
      min_bumped = std::min(min_bumped, rem);
    } else {
      max_unbumped = std::max(max_unbumped, rem);
    }
  }
  ASSERT_GE(min_bumped, max_unbumped);
}

TEST(Sampling, LargestRemainderOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> weight(0, 100000);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::int64_t> w(1 + trial % 17);
    for (auto& x : w) x = weight(rng);
    if (std::accumulate(w.begin(), w.end(), std::int64_t{0}) == 0) w[0] = 1;
    const auto total = std::accumulate(w.begin(), w.end(), std::int64_t{0});
    check_largest_remainder(w, std::uniform_int_distribution<std::int64_t>(0, total)(rng), rng());
  }
  check_largest_remainder({1, 1, 1}, 2, 5);  // pure tie, broken by seed
}

TEST(Sampling, ProportionalKeepsCategoryRatiosAndIsDeterministic) {
  const auto spec = load_mixture(kData + "/manifests/table5.yaml");
  const auto a = sample_subset(spec, 800000, SampleStrategy::kProportional, 7);
  const auto b = sample_subset(spec, 800000, SampleStrategy::kProportional, 7);
  EXPECT_EQ(emit_mixture(a), emit_mixture(b));
  EXPECT_EQ(a.total(), 800000);
  const auto full = distribution(spec);
  const auto part = distribution(a);
  for (const auto& row : full.rows) {
    const double exact = static_cast<double>(row.count) * 800000.0 / static_cast<double>(full.total);
    EXPECT_LE(std::abs(static_cast<double>(part.find(row.category)->count) - exact), 1.0);
  }
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    EXPECT_LE(a.entries[i].sample_count, spec.entries[i].sample_count);
  }
}

TEST(Sampling, SeedOnlyAffectsTies) {
  MixtureSpec spec;
  spec.entries = {{"a", Category::kGeneral, 1, {}, AnswerForm::kFree, {}},
                  {"b", Category::kGeneral, 1, {}, AnswerForm::kFree, {}},
                  {"c", Category::kGeneral, 1, {}, AnswerForm::kFree, {}}};
  std::set<std::string> winners;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = sample_subset(spec, 1, SampleStrategy::kProportional, seed);
    for (const auto& e : s.entries) {
      if (e.sample_count == 1) winners.insert(e.name);
    }
  }
  EXPECT_GT(winners.size(), 1u);
}

TEST(Sampling, BalancedWaterFills) {
  const auto spec = load_mixture(kData + "/manifests/table5.yaml");
  const auto s = sample_subset(spec, 1500000, SampleStrategy::kBalanced, 1);
  const auto d = distribution(s);
  EXPECT_EQ(d.total, 1500000);
  // General OCR (280,991) is exhausted; the other four split the rest evenly.
  EXPECT_EQ(d.find(Category::kGeneralOcr)->count, 280991);
  const auto share = d.find(Category::kGeneral)->count;
  for (auto c : {Category::kDocChartScreen, Category::kMathReasoning, Category::kLanguage}) {
    EXPECT_LE(std::abs(d.find(c)->count - share), 1);
  }
}

TEST(Sampling, RejectsOversizedRequests) {
  const auto spec = load_mixture(kData + "/manifests/lcs558k.yaml");
  EXPECT_THROW(sample_subset(spec, 558001, SampleStrategy::kProportional, 0), Error);
  EXPECT_EQ(sample_subset(spec, 0, SampleStrategy::kBalanced, 0).total(), 0);
  EXPECT_THROW(parse_strategy("random"), Error);
}

TEST(Dedupe, FindsSharedDatasetsAcrossManifests) {
  const auto t5 = load_mixture(kData + "/manifests/table5.yaml");
  const auto ov = load_mixture(kData + "/manifests/onevision.yaml");
  const auto collisions = dedupe_scan({t5, ov});
  const auto has = [&](const std::string& key) {
    return std::any_of(collisions.begin(), collisions.end(), [&](const auto& c) { return c.key == key; });
  };
  EXPECT_TRUE(has("sharegpt4v"));
  EXPECT_TRUE(has("tabmwp"));
  EXPECT_FALSE(has("magpiepro"));  // table5 splits it into three named subsets
  EXPECT_TRUE(dedupe_scan({t5}).empty());
  EXPECT_EQ(dedupe_scan({t5, t5}).size(), t5.entries.size());
  EXPECT_EQ(dataset_key("Doc-VQA"), dataset_key("DocVQA"));
}

TEST(ApplyPrompt, PositionsAndMarkerPreservation) {
  std::mt19937_64 rng(0);
  const auto& table = single_image_prompts();
  const InstructionSample s{"<image>\nWhat color is the car?", "Red"};
  EXPECT_EQ(apply_prompt(s, table.at(1), rng).instruction,
            "<image>\nWhat color is the car?\nAnswer the question with a single word (or phrase).");
  EXPECT_EQ(apply_prompt(s, table.at(2), rng).instruction,
            "<image>\nHint: Please answer the question and provide the final answer at the end.\nWhat color is the car?");
  EXPECT_EQ(apply_prompt(s, table.at(7), rng).instruction, "<image>\nProvide a short description for this region.");
  EXPECT_EQ(apply_prompt(s, table.at(1), rng).answer, "Red");
  for (const auto& p : table.prompts()) {
    for (const auto& text : {std::string("<image>\n<image>\nq"), std::string("q with <image> inline"),
                             std::string("plain")}) {
      const auto out = apply_prompt({text, "a"}, p, rng);
      ASSERT_EQ(marker_offsets(out.instruction, "<image>").size(), marker_offsets(text, "<image>").size());
    }
  }
}

TEST(ApplyPrompt, VariantChoiceFollowsSeed) {
  const auto& p = single_image_prompts().at(11);
  std::set<std::string> seen;
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) seen.insert(apply_prompt({"q", "a"}, p, rng).instruction);
  EXPECT_EQ(seen.size(), p.variants.size());
  std::mt19937_64 r1(9);
  std::mt19937_64 r2(9);
  EXPECT_EQ(apply_prompt({"q", "a"}, p, r1), apply_prompt({"q", "a"}, p, r2));
}

TEST(Prompts, TablesAreComplete) {
  EXPECT_EQ(single_image_prompts().prompts().size(), 24u);
  EXPECT_EQ(onevision_prompts().prompts().size(), 26u);
  EXPECT_THROW(single_image_prompts().at(25), Error);
  EXPECT_THROW(prompt_table_named("other"), Error);
  EXPECT_FALSE(prompt_table_named("none").has_value());
}

}  // namespace
}  // namespace ovprep
