// Copyright 2026 The kiwb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kiwb/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

namespace kiwb {
namespace {

using testing::TempDir;
using testing::ToyWorld;

struct World {
  TempDir dir;
  RunSpec spec;

  explicit World(const ToyWorld& w) {
    spec.corpus_path = dir.Write("corpus.jsonl", w.corpus);
    spec.kg_triples_path = dir.Write("triples.tsv", w.triples);
    spec.kg_entities_path = dir.Write("entities.jsonl", w.entities);
    spec.taxonomy_path = dir.Write("taxonomy.tsv", w.taxonomy);
    spec.output_dir = dir.file("out");
    spec.seeds = {1};
  }

  std::vector<nlohmann::json> Records(const std::string& rel) const {
    std::vector<nlohmann::json> out;
    const std::string content = ReadFile(dir.file("out/" + rel));
    for (auto line : SplitLines(content)) out.push_back(nlohmann::json::parse(line));
    return out;
  }
};

std::vector<nlohmann::json> BuildRecords(World& w, InjectionKind kind, double level,
                                         std::uint64_t seed = 1) {
  w.spec.variant = InjectionVariant{kind, level, 1.0, 8};
  w.spec.seeds = {seed};
  const auto files = MakeDatasets(w.spec);
  return w.Records(files.at(0).path);
}

nlohmann::json Without(nlohmann::json j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) j.erase(k);
  return j;
}

TEST(MakeDatasetsTest, NoInjectionKeepsText) {
  World w(testing::MakeToyWorld());
  for (const auto& r : BuildRecords(w, InjectionKind::kNoInjection, 1.0)) {
    EXPECT_EQ(r["injected_text"], r["text"]);
    for (const auto& list : r["knowledge"]) EXPECT_TRUE(list.empty());
  }
}

TEST(MakeDatasetsTest, AlignedLevelZeroEqualsNoInjection) {
  World w(testing::MakeToyWorld());
  const auto none = BuildRecords(w, InjectionKind::kNoInjection, 0.0);
  const auto aligned = BuildRecords(w, InjectionKind::kAligned, 0.0);
  const auto random = BuildRecords(w, InjectionKind::kRandom, 0.0);
  ASSERT_EQ(none.size(), aligned.size());
  for (std::size_t i = 0; i < none.size(); ++i) {
    EXPECT_EQ(Without(none[i], {"variant"}), Without(aligned[i], {"variant"}));
    EXPECT_EQ(Without(none[i], {"variant"}), Without(random[i], {"variant"}));
  }
}

TEST(MakeDatasetsTest, AlignedAndRandomDifferOnlyInKnowledge) {
  World w(testing::MakeToyWorld());
  const auto aligned = BuildRecords(w, InjectionKind::kAligned, 1.0);
  const auto random = BuildRecords(w, InjectionKind::kRandom, 1.0);
  ASSERT_EQ(aligned.size(), 10u);
  bool any_difference = false;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const auto& a = aligned[i];
    const auto& r = random[i];
    EXPECT_EQ(Without(a, {"variant", "knowledge", "injected_text"}),
              Without(r, {"variant", "knowledge", "injected_text"}));
    // Marker prefix and original text coincide; only the suffix may differ.
    const std::string at = a["injected_text"], rt = r["injected_text"], text = a["text"];
    const std::size_t body_end = at.find(text) + text.size();
    EXPECT_EQ(at.substr(0, body_end), rt.substr(0, body_end));
    ASSERT_EQ(a["knowledge"].size(), r["knowledge"].size());
    for (std::size_t m = 0; m < a["knowledge"].size(); ++m) {
      EXPECT_EQ(a["knowledge"][m].size(), r["knowledge"][m].size());
    }
    any_difference = any_difference || a["knowledge"] != r["knowledge"];
  }
  EXPECT_TRUE(any_difference);
}

TEST(MakeDatasetsTest, GrumpyCatConceptualAndAligned) {
  ToyWorld tw;
  tw.entities = R"({"id":"E1","title":"Grumpy Cat","type":"cat"})"
                "\n";
  tw.triples = "E1\ttype\tcat\n";
  tw.taxonomy = "cat\tanimal\n";
  tw.corpus = nlohmann::json({{"id", "g"}, {"text", testing::kGrumpyText}, {"label", "x"}}).dump();
  World w(tw);
  EXPECT_EQ(BuildRecords(w, InjectionKind::kAligned, 1.0)[0]["injected_text"],
            "*Grumpy Cat* Grumpy Cat, the internet's most famous cat, died at 7 years old. "
            "(Grumpy Cat type cat)");
  EXPECT_EQ(BuildRecords(w, InjectionKind::kConceptual, 1.0)[0]["injected_text"],
            "*Grumpy Cat* Grumpy Cat, the internet's most famous cat, died at 7 years old. "
            "(Grumpy Cat cat animal)");
}

TEST(MakeDatasetsTest, MissingTaxonomy) {
  World w(testing::MakeToyWorld());
  w.spec.taxonomy_path.reset();
  w.spec.variant = InjectionVariant{InjectionKind::kConceptual, 1.0};
  try {
    MakeDatasets(w.spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTaxonomy);
  }
  EXPECT_FALSE(std::filesystem::exists(w.spec.output_dir));
}

TEST(MakeDatasetsTest, NoiseWritesSidecar) {
  World w(testing::MakeToyWorld());
  w.spec.variant = InjectionVariant{InjectionKind::kNoise, 1.0, 0.5, 16};
  w.spec.seeds = {4, 5};
  const auto files = MakeDatasets(w.spec);
  ASSERT_EQ(files.size(), 2u);
  for (const auto& f : files) {
    ASSERT_FALSE(f.noise_path.empty());
    const auto records = w.Records(f.path);
    const auto noise = w.Records(f.noise_path);
    ASSERT_EQ(records.size(), noise.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      EXPECT_EQ(records[i]["injected_text"], records[i]["text"]);
      EXPECT_EQ(noise[i]["id"], records[i]["id"]);
      EXPECT_EQ(noise[i]["vec"].size(), 16u);
    }
  }
  EXPECT_NE(ReadFile(w.dir.file("out/" + files[0].noise_path)),
            ReadFile(w.dir.file("out/" + files[1].noise_path)));
}

TEST(MakeDatasetsTest, ByteIdenticalAcrossRunsAndJobs) {
  World w(testing::MakeToyWorld(200));
  w.spec.variant = InjectionVariant{InjectionKind::kRandom, 0.5};
  w.spec.seeds = {1, 2, 3, 4, 5};
  w.spec.jobs = 1;
  std::vector<std::string> first;
  for (const auto& f : MakeDatasets(w.spec)) first.push_back(ReadFile(w.dir.file("out/" + f.path)));
  w.spec.jobs = 4;
  std::vector<std::string> second;
  for (const auto& f : MakeDatasets(w.spec))
    second.push_back(ReadFile(w.dir.file("out/" + f.path)));
  EXPECT_EQ(first, second);
  EXPECT_NE(first[0], first[1]);
}

// Corpus where every example mentions all four entities once.
ToyWorld FourMentionWorld(std::size_t examples) {
  ToyWorld tw;
  const char* names[] = {"alpha", "beta", "gamma", "delta"};
  for (int i = 0; i < 4; ++i) {
    tw.entities +=
        nlohmann::json({{"id", "A" + std::to_string(i)}, {"title", names[i]}}).dump() + "\n";
    for (int r = 0; r < 3; ++r) {
      tw.triples +=
          "A" + std::to_string(i) + "\tr" + std::to_string(r) + "\tv" + std::to_string(r) + "\n";
    }
  }
  for (std::size_t e = 0; e < examples; ++e) {
    tw.corpus += nlohmann::json({{"id", "x" + std::to_string(e)},
                                 {"text", "alpha meets beta, gamma and delta."},
                                 {"label", "l"}})
                     .dump() +
                 "\n";
  }
  return tw;
}

std::size_t CountGroups(const nlohmann::json& record) {
  std::size_t n = 0;
  for (const auto& list : record["knowledge"]) n += list.size();
  return n;
}

TEST(SweepQuantityTest, ManifestAndLevels) {
  World w(FourMentionWorld(250));
  w.spec.seeds = {9};
  const auto entries = SweepQuantity(w.spec, {0.0, 0.1, 2.0});
  ASSERT_EQ(entries.size(), 6u);
  const std::string manifest = ReadFile(w.dir.file("out/manifest.csv"));
  EXPECT_EQ(manifest,
            "level,setup,path,seed\n"
            "0,aligned,aligned_level0_seed9.jsonl,9\n"
            "0,random,random_level0_seed9.jsonl,9\n"
            "0.1,aligned,aligned_level0.1_seed9.jsonl,9\n"
            "0.1,random,random_level0.1_seed9.jsonl,9\n"
            "2,aligned,aligned_level2_seed9.jsonl,9\n"
            "2,random,random_level2_seed9.jsonl,9\n");

  const auto a0 = w.Records("aligned_level0_seed9.jsonl");
  const auto r0 = w.Records("random_level0_seed9.jsonl");
  for (std::size_t i = 0; i < a0.size(); ++i) {
    EXPECT_EQ(Without(a0[i], {"variant"}), Without(r0[i], {"variant"}));
    EXPECT_EQ(a0[i]["injected_text"], a0[i]["text"]);
  }

  for (const char* name : {"aligned_level2_seed9.jsonl", "random_level2_seed9.jsonl"}) {
    for (const auto& r : w.Records(name)) {
      ASSERT_EQ(r["mentions"].size(), 4u);
      EXPECT_EQ(CountGroups(r), 8u);
      const std::string injected = r["injected_text"];
      std::size_t parens = 0;
      for (std::size_t p = injected.find(") ("); p != std::string::npos;
           p = injected.find(") (", p + 1)) {
        ++parens;
      }
      EXPECT_EQ(parens, 7u);
    }
  }

  std::size_t aligned_groups = 0, random_groups = 0, mentions = 0;
  const auto a1 = w.Records("aligned_level0.1_seed9.jsonl");
  const auto r1 = w.Records("random_level0.1_seed9.jsonl");
  for (std::size_t i = 0; i < a1.size(); ++i) {
    mentions += a1[i]["mentions"].size();
    aligned_groups += CountGroups(a1[i]);
    random_groups += CountGroups(r1[i]);
    EXPECT_EQ(a1[i]["quota"], r1[i]["quota"]);
  }
  EXPECT_EQ(mentions, 1000u);
  EXPECT_GE(aligned_groups, 80u);
  EXPECT_LE(aligned_groups, 120u);
  EXPECT_EQ(aligned_groups, random_groups);
}

TEST(SweepQuantityTest, EmptyLevels) {
  World w(testing::MakeToyWorld());
  EXPECT_THROW(SweepQuantity(w.spec, {}), Error);
}

std::vector<RunResult> Concat(std::vector<RunResult> a, const std::vector<RunResult>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(AggregateRunsTest, IdenticalValues) {
  std::vector<RunResult> results;
  for (int i = 0; i < 5; ++i) results.push_back({"s", static_cast<std::uint64_t>(i), "F1", 71.25});
  const auto report = AggregateRuns(results);
  ASSERT_EQ(report.setups.size(), 1u);
  EXPECT_EQ(report.setups[0].mean, 71.25);
  EXPECT_EQ(report.setups[0].stddev, 0.0);
  EXPECT_TRUE(report.deltas.empty());
}

TEST(AggregateRunsTest, SmallNegativeDeltaIsNotSuperior) {
  const auto report = AggregateRuns(Concat(testing::ReconstructRuns("aligned", 75.33, 0.41),
                                           testing::ReconstructRuns("random", 75.37, 0.31)),
                                    1.0);
  EXPECT_NEAR(report.setups[0].mean, 75.33, 1e-9);
  EXPECT_NEAR(report.setups[0].stddev, 0.41, 1e-9);
  EXPECT_NEAR(report.setups[1].stddev, 0.31, 1e-9);
  ASSERT_EQ(report.deltas.size(), 1u);
  EXPECT_NEAR(report.deltas[0].delta, -0.04, 1e-9);
  EXPECT_EQ(report.deltas[0].verdict, Verdict::kNotSuperior);
}

TEST(AggregateRunsTest, LargePositiveDeltaIsSuperior) {
  const auto report =
      AggregateRuns(Concat(testing::ReconstructRuns("conceptual-aligned", 87.34, 0.06),
                           testing::ReconstructRuns("conceptual-random", 83.43, 0.62)));
  EXPECT_NEAR(report.deltas[0].delta, 3.91, 1e-9);
  EXPECT_EQ(report.deltas[0].verdict, Verdict::kSuperior);
  const auto reversed =
      AggregateRuns(Concat(testing::ReconstructRuns("conceptual-random", 83.43, 0.62),
                           testing::ReconstructRuns("conceptual-aligned", 87.34, 0.06)));
  EXPECT_EQ(reversed.deltas[0].verdict, Verdict::kInferior);
}

TEST(AggregateRunsTest, MatchesTwoPassOracle) {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> value(50, 95);
  for (int round = 0; round < 200; ++round) {
    std::vector<RunResult> results;
    std::map<std::string, std::vector<double>> by_setup;
    for (const char* setup : {"a", "b", "c"}) {
      for (int i = 0; i < 5; ++i) {
        const double v = value(gen);
        results.push_back({setup, static_cast<std::uint64_t>(i), "F1", v});
        by_setup[setup].push_back(v);
      }
    }
    const auto report = AggregateRuns(results);
    std::map<std::string, double> means;
    for (const auto& s : report.setups) {
      const auto& xs = by_setup[s.setup];
      double sum = 0;
      for (double x : xs) sum += x;
      const double mean = sum / xs.size();
      double ss = 0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      EXPECT_NEAR(s.mean, mean, 1e-12);
      EXPECT_NEAR(s.stddev, std::sqrt(ss / (xs.size() - 1)), 1e-12);
      means[s.setup] = s.mean;
    }
    ASSERT_EQ(report.deltas.size(), 3u);
    for (const auto& d : report.deltas) {
      EXPECT_NEAR(d.delta, means[d.first] - means[d.second], 1e-9);
      EXPECT_EQ(d.verdict == Verdict::kNotSuperior, std::abs(d.delta) <= 1.0);
    }
  }
}

TEST(AggregateRunsTest, Errors) {
  try {
    AggregateRuns({{"a", 1, "F1", 1.0}, {"a", 2, "acc", 2.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistentMetric);
  }
  try {
    AggregateRuns({{"a", 1, "F1", 1.0}, {"a", 2, "F1", 2.0}, {"b", 1, "F1", 2.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewRuns);
  }
  EXPECT_THROW(AggregateRuns({}), Error);
}

TEST(ResultsCsvTest, ParseAndRender) {
  const auto results =
      ParseResultsCsv("setup,seed,metric,value\naligned,1,F1,75.5\nrandom,2,F1,-1e-3\n");
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[1].value, -1e-3);
  EXPECT_EQ(SerializeResultsCsv(results),
            "setup,seed,metric,value\naligned,1,F1,75.5\nrandom,2,F1,-0.001\n");
  EXPECT_THROW(ParseResultsCsv("setup,metric,value\n"), Error);
  EXPECT_THROW(ParseResultsCsv("setup,seed,metric,value\na,x,F1,1\n"), Error);
  EXPECT_THROW(ParseResultsCsv("setup,seed,metric,value\na,1,F1,nan\n"), Error);
}

TEST(RenderReportTest, MarkdownWithJsonBlock) {
  const auto report = AggregateRuns(Concat(testing::ReconstructRuns("aligned", 75.33, 0.41),
                                           testing::ReconstructRuns("random", 75.37, 0.31)));
  const std::string md = RenderReport(report);
  EXPECT_EQ(md, RenderReport(report));
  EXPECT_NE(md.find("| aligned | random | -0.0400 | not_superior |"), std::string::npos);
  const auto start = md.find("```json\n") + 8;
  const auto j = nlohmann::json::parse(md.substr(start, md.rfind("```") - start));
  EXPECT_NEAR(j["deltas"][0]["delta"].get<double>(), -0.04, 1e-9);
  EXPECT_EQ(j["deltas"][0]["verdict"], "not_superior");
}

std::vector<LlmResponse> Answers(std::size_t correct, std::size_t total,
                                 std::map<std::string, std::string, std::less<>>& key) {
  std::vector<LlmResponse> out;
  for (std::size_t i = 0; i < total; ++i) {
    const std::string id = "q" + std::to_string(i);
    key[id] = "Place of Birth";
    out.push_back(
        {id, i < correct ? "Yes. The relationship is PLACE  of birth." : "No relation.", ""});
  }
  return out;
}

TEST(ScoreLlmAnswersTest, ReportedAccuracies) {
  std::map<std::string, std::string, std::less<>> key;
  EXPECT_EQ(ScoreLlmAnswers(Answers(44, 50, key), key), 0.88);
  EXPECT_EQ(ScoreLlmAnswers(Answers(46, 50, key), key), 0.92);
}

TEST(ScoreLlmAnswersTest, Errors) {
  std::map<std::string, std::string, std::less<>> key{{"a", "born in"}};
  try {
    ScoreLlmAnswers({}, key);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewRuns);
  }
  try {
    ScoreLlmAnswers({{"zzz", "born in", ""}}, key);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownExample);
  }
}

TEST(ScoreLlmAnswersTest, PerGroup) {
  std::map<std::string, std::string, std::less<>> key{{"a", "born in"}, {"b", "works for"}};
  const auto groups = ScoreLlmGroups({{"a", "He was born in X", "G1"},
                                      {"b", "no", "G1"},
                                      {"a", "born in", "G3"},
                                      {"b", "WORKS FOR", "G3"}},
                                     key);
  EXPECT_EQ(groups.at("G1"), 0.5);
  EXPECT_EQ(groups.at("G3"), 1.0);
}

}  // namespace
}  // namespace kiwb
