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

#pragma once

// Ablation harness: per-seed dataset emission for each setup, quantity
// sweeps, seeded-run aggregation and LLM answer scoring.
//
// Every example draws from its own streams derived from the run seed and
// the example's corpus index (see ExampleStreams), so the output bytes do
// not depend on scheduling or on --jobs.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kiwb/aligner.hpp"
#include "kiwb/concept_builder.hpp"
#include "kiwb/error.hpp"
#include "kiwb/injector.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/knowledge_source.hpp"
#include "kiwb/rng.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

// ---------------------------------------------------------------------------
// Corpus and dataset emission

struct CorpusExample {
  std::string id;
  std::string text;
  std::string label;
  std::vector<std::string> task_entities;
};

inline std::vector<CorpusExample> ParseCorpus(std::string_view content) {
  std::vector<CorpusExample> corpus;
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line_no = std::to_string(i + 1);
    if (!IsValidUtf8(lines[i])) throw Error(ErrorCode::kInvalidEncoding, "line " + line_no);
    if (IsBlankOrComment(lines[i])) continue;
    auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedLine, line_no);
    auto string_field = [&](const char* key) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) throw Error(ErrorCode::kMalformedLine, line_no);
      return it->get<std::string>();
    };
    CorpusExample ex{string_field("id"), string_field("text"), string_field("label"), {}};
    if (auto it = j.find("task_entities"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) throw Error(ErrorCode::kMalformedLine, line_no);
      for (const auto& e : *it) {
        if (!e.is_string()) throw Error(ErrorCode::kMalformedLine, line_no);
        ex.task_entities.push_back(e.get<std::string>());
      }
    }
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

inline std::vector<CorpusExample> LoadCorpus(const std::string& path) {
  return ParseCorpus(ReadFile(path));
}

// Independent streams of one example: quantity draws, knowledge picks and
// noise. Aligned and random runs with the same seed share the quantity
// stream, hence the same marked mentions.
struct ExampleStreams {
  SeededRng quantity;
  SeededRng picks;
  SeededRng noise;

  ExampleStreams(std::uint64_t run_seed, std::uint64_t example_index)
      : quantity(MixSeed(MixSeed(run_seed, example_index), 0)),
        picks(MixSeed(MixSeed(run_seed, example_index), 1)),
        noise(MixSeed(MixSeed(run_seed, example_index), 2)) {}
};

struct BuildOptions {
  InjectionVariant variant;
  std::uint64_t seed = 0;
  std::size_t concept_depth = 1;
  const Taxonomy* taxonomy = nullptr;  // required for conceptual
};

struct BuiltExample {
  InjectedExample example;
  std::vector<double> noise;  // noise variant only
};

inline BuiltExample BuildExample(const CorpusExample& input, std::uint64_t index,
                                 const KnowledgeGraph& kg, const BuildOptions& opts) {
  const InjectionKind kind = opts.variant.kind;
  if (kind == InjectionKind::kConceptual && opts.taxonomy == nullptr) {
    throw Error(ErrorCode::kMissingTaxonomy, "conceptual variant needs a taxonomy");
  }
  ExampleStreams streams(opts.seed, index);
  BuiltExample out;
  InjectedExample& ex = out.example;
  ex.example_id = input.id;
  ex.original_text = input.text;
  ex.label = input.label;
  ex.variant = opts.variant;
  ex.seed = opts.seed;
  ex.task_entities = input.task_entities;
  ex.mentions = Align(input.text, kg);
  ex.quota.assign(ex.mentions.size(), 0);
  ex.knowledge.assign(ex.mentions.size(), {});

  const bool textual = kind == InjectionKind::kAligned || kind == InjectionKind::kRandom ||
                       kind == InjectionKind::kConceptual;
  std::vector<Mention> marked;
  std::vector<KnowledgeList> marked_knowledge;
  if (textual) {
    for (std::size_t i = 0; i < ex.mentions.size(); ++i) {
      const Mention& m = ex.mentions[i];
      std::size_t quota = TriplesPerMention(opts.variant.level, streams.quantity);
      KnowledgeList& list = ex.knowledge[i];
      if (kind == InjectionKind::kAligned) {
        for (auto& t : AlignedTriples(m, kg, quota)) list.emplace_back(std::move(t));
      } else if (kind == InjectionKind::kRandom) {
        for (auto& t : RandomTriples(kg, streams.picks, quota)) list.emplace_back(std::move(t));
      } else {
        // One conceptual triple per mention at most; untyped entities get none.
        const Entity* entity = kg.FindEntity(m.entity_id);
        if (quota > 0 && entity != nullptr && !entity->type_label.empty()) {
          quota = 1;
          list.emplace_back(BuildConceptual(*entity, *opts.taxonomy, opts.concept_depth));
        } else {
          quota = 0;
        }
      }
      ex.quota[i] = quota;
      if (quota > 0) {
        marked.push_back(m);
        marked_knowledge.push_back(list);
      }
    }
    ex.injected_text = InjectForVariant(kind, ex.original_text, marked, marked_knowledge, kg);
  } else {
    ex.injected_text = ex.original_text;
  }
  if (kind == InjectionKind::kNoise) {
    out.noise = NoiseVector(opts.variant.dim, opts.variant.sigma, streams.noise);
  }
  return out;
}

struct DatasetBytes {
  std::string records;  // dataset JSONL
  std::string noise;    // sidecar JSONL, empty unless noise variant
};

inline DatasetBytes BuildDataset(const std::vector<CorpusExample>& corpus, const KnowledgeGraph& kg,
                                 const BuildOptions& opts) {
  opts.variant.Validate();
  DatasetBytes out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    BuiltExample built = BuildExample(corpus[i], i, kg, opts);
    out.records += ExampleToJson(built.example).dump();
    out.records += '\n';
    if (opts.variant.kind == InjectionKind::kNoise) {
      out.noise += "{\"id\":";
      out.noise += nlohmann::json(built.example.example_id).dump();
      out.noise += ",\"vec\":";
      AppendVector(out.noise, built.noise);
      out.noise += "}\n";
    }
  }
  return out;
}

struct RunSpec {
  std::string corpus_path;
  std::string kg_triples_path;
  std::string kg_entities_path;
  std::optional<std::string> taxonomy_path;
  InjectionVariant variant;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  std::size_t concept_depth = 1;
  std::size_t jobs = 1;

  void Validate() const {
    if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one seed required");
    if (variant.kind == InjectionKind::kConceptual && !taxonomy_path) {
      throw Error(ErrorCode::kMissingTaxonomy, "conceptual variant needs --taxonomy");
    }
    if (concept_depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
    variant.Validate();
  }
};

// Runs task(i) for i in [0, n) on up to `jobs` threads. The first failure
// in index order is rethrown.
inline void ParallelFor(std::size_t n, std::size_t jobs,
                        const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct LoadedInputs {
  std::vector<CorpusExample> corpus;
  KnowledgeGraph kg;
  std::optional<Taxonomy> taxonomy;
};

inline LoadedInputs LoadInputs(const RunSpec& spec) {
  LoadedInputs in{LoadCorpus(spec.corpus_path),
                  Seal(LoadEntities(spec.kg_entities_path), LoadTriples(spec.kg_triples_path)),
                  std::nullopt};
  if (spec.taxonomy_path) in.taxonomy = LoadTaxonomy(*spec.taxonomy_path);
  return in;
}

inline std::string DatasetFileName(InjectionKind kind, std::uint64_t seed,
                                   std::optional<double> level = std::nullopt) {
  std::string name(InjectionKindName(kind));
  if (level) name += "_level" + FormatDouble(*level);
  name += "_seed" + std::to_string(seed);
  return name;
}

struct DatasetFile {
  std::string path;        // relative to the output directory
  std::string noise_path;  // empty unless noise
  std::uint64_t seed = 0;
};

inline DatasetFile WriteDataset(const LoadedInputs& in, const RunSpec& spec,
                                const InjectionVariant& variant, std::uint64_t seed,
                                std::optional<double> level) {
  BuildOptions opts{variant, seed, spec.concept_depth, in.taxonomy ? &*in.taxonomy : nullptr};
  DatasetBytes bytes = BuildDataset(in.corpus, in.kg, opts);
  const std::string stem = DatasetFileName(variant.kind, seed, level);
  const std::filesystem::path dir(spec.output_dir);
  DatasetFile file{stem + ".jsonl", "", seed};
  WriteFile((dir / file.path).string(), bytes.records);
  if (variant.kind == InjectionKind::kNoise) {
    file.noise_path = stem + ".noise.jsonl";
    WriteFile((dir / file.noise_path).string(), bytes.noise);
  }
  return file;
}

// One dataset file (plus a noise sidecar for the noise setup) per seed.
inline std::vector<DatasetFile> MakeDatasets(const RunSpec& spec) {
  spec.Validate();
  const LoadedInputs in = LoadInputs(spec);
  std::filesystem::create_directories(spec.output_dir);
  std::vector<DatasetFile> files(spec.seeds.size());
  ParallelFor(spec.seeds.size(), spec.jobs, [&](std::size_t i) {
    files[i] = WriteDataset(in, spec, spec.variant, spec.seeds[i], std::nullopt);
  });
  return files;
}

struct SweepEntry {
  double level = 0;
  InjectionKind setup = InjectionKind::kAligned;
  DatasetFile file;
};

inline constexpr std::string_view kManifestName = "manifest.csv";

// Aligned and random datasets for every (level, seed), plus manifest.csv
// with columns level,setup,path,seed.
inline std::vector<SweepEntry> SweepQuantity(const RunSpec& spec,
                                             const std::vector<double>& levels) {
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one level required");
  spec.Validate();
  for (double level : levels) {
    InjectionVariant v{InjectionKind::kAligned, level};
    v.Validate();
  }
  const LoadedInputs in = LoadInputs(spec);
  std::filesystem::create_directories(spec.output_dir);

  std::vector<SweepEntry> entries;
  for (double level : levels) {
    for (auto kind : {InjectionKind::kAligned, InjectionKind::kRandom}) {
      for (std::uint64_t seed : spec.seeds) entries.push_back({level, kind, {"", "", seed}});
    }
  }
  ParallelFor(entries.size(), spec.jobs, [&](std::size_t i) {
    SweepEntry& e = entries[i];
    InjectionVariant v{e.setup, e.level, spec.variant.sigma, spec.variant.dim};
    e.file = WriteDataset(in, spec, v, e.file.seed, e.level);
  });

  std::string manifest = "level,setup,path,seed\n";
  for (const auto& e : entries) {
    manifest += FormatDouble(e.level) + "," + std::string(InjectionKindName(e.setup)) + "," +
                e.file.path + "," + std::to_string(e.file.seed) + "\n";
  }
  WriteFile((std::filesystem::path(spec.output_dir) / kManifestName).string(), manifest);
  return entries;
}

// ---------------------------------------------------------------------------
// Seeded-run aggregation

struct RunResult {
  std::string setup;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0;
};

inline std::vector<RunResult> ParseResultsCsv(std::string_view content) {
  const auto lines = SplitLines(content);
  if (lines.empty() || lines[0] != "setup,seed,metric,value") {
    throw Error(ErrorCode::kFormatError, "results CSV must start with setup,seed,metric,value");
  }
  std::vector<RunResult> results;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (IsBlankOrComment(lines[i])) continue;
    const std::string line_no = std::to_string(i + 1);
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = lines[i].find(',', start);
      f.push_back(lines[i].substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 4 || f[0].empty() || f[2].empty()) {
      throw Error(ErrorCode::kMalformedLine, line_no);
    }
    RunResult r;
    r.setup = std::string(f[0]);
    r.metric = std::string(f[2]);
    auto s = std::from_chars(f[1].data(), f[1].data() + f[1].size(), r.seed);
    auto v = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.value);
    if (s.ec != std::errc() || s.ptr != f[1].data() + f[1].size() || v.ec != std::errc() ||
        v.ptr != f[3].data() + f[3].size() || !std::isfinite(r.value)) {
      throw Error(ErrorCode::kMalformedLine, line_no);
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline std::string SerializeResultsCsv(const std::vector<RunResult>& results) {
  std::string out = "setup,seed,metric,value\n";
  for (const auto& r : results) {
    out += r.setup + "," + std::to_string(r.seed) + "," + r.metric + "," + FormatDouble(r.value) +
           "\n";
  }
  return out;
}

enum class Verdict { kSuperior, kNotSuperior, kInferior };

constexpr std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kSuperior:
      return "superior";
    case Verdict::kNotSuperior:
      return "not_superior";
    case Verdict::kInferior:
      return "inferior";
  }
  return "not_superior";
}

struct SetupStats {
  std::string setup;
  std::size_t runs = 0;
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n - 1)
};

struct PairwiseDelta {
  std::string first;
  std::string second;
  double delta = 0;  // mean(first) - mean(second)
  Verdict verdict = Verdict::kNotSuperior;
};

struct ComparisonReport {
  std::string metric;
  double threshold = 1.0;
  std::vector<SetupStats> setups;  // first-appearance order
  std::vector<PairwiseDelta> deltas;
};

inline constexpr double kDefaultVerdictThreshold = 1.0;

// Mean and sample deviation per setup by Welford's update; deltas for every
// pair (i < j) in first-appearance order. |delta| <= threshold is
// not_superior, otherwise the sign picks superior or inferior.
inline ComparisonReport AggregateRuns(const std::vector<RunResult>& results,
                                      double threshold = kDefaultVerdictThreshold) {
  if (results.empty()) throw Error(ErrorCode::kTooFewRuns, "no results");
  if (!(threshold >= 0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be >= 0");
  ComparisonReport report;
  report.metric = results.front().metric;
  report.threshold = threshold;
  std::vector<double> m2;
  for (const auto& r : results) {
    if (r.metric != report.metric) {
      throw Error(ErrorCode::kInconsistentMetric, report.metric + " vs " + r.metric);
    }
    auto it = std::find_if(report.setups.begin(), report.setups.end(),
                           [&](const SetupStats& s) { return s.setup == r.setup; });
    if (it == report.setups.end()) {
      report.setups.push_back({r.setup, 0, 0, 0});
      m2.push_back(0);
      it = report.setups.end() - 1;
    }
    double& acc = m2[static_cast<std::size_t>(it - report.setups.begin())];
    ++it->runs;
    const double d = r.value - it->mean;
    it->mean += d / static_cast<double>(it->runs);
    acc += d * (r.value - it->mean);
  }
  for (std::size_t i = 0; i < report.setups.size(); ++i) {
    auto& s = report.setups[i];
    if (s.runs < 2) throw Error(ErrorCode::kTooFewRuns, s.setup + " has fewer than 2 runs");
    s.stddev = std::sqrt(m2[i] / static_cast<double>(s.runs - 1));
  }
  for (std::size_t i = 0; i < report.setups.size(); ++i) {
    for (std::size_t j = i + 1; j < report.setups.size(); ++j) {
      PairwiseDelta d{report.setups[i].setup, report.setups[j].setup,
                      report.setups[i].mean - report.setups[j].mean, Verdict::kNotSuperior};
      if (std::abs(d.delta) > threshold) {
        d.verdict = d.delta > 0 ? Verdict::kSuperior : Verdict::kInferior;
      }
      report.deltas.push_back(std::move(d));
    }
  }
  return report;
}

inline nlohmann::ordered_json ReportToJson(const ComparisonReport& report) {
  nlohmann::ordered_json j;
  j["metric"] = report.metric;
  j["threshold"] = report.threshold;
  j["setups"] = nlohmann::ordered_json::array();
  for (const auto& s : report.setups) {
    j["setups"].push_back(
        {{"setup", s.setup}, {"runs", s.runs}, {"mean", s.mean}, {"std", s.stddev}});
  }
  j["deltas"] = nlohmann::ordered_json::array();
  for (const auto& d : report.deltas) {
    j["deltas"].push_back({{"first", d.first},
                           {"second", d.second},
                           {"delta", d.delta},
                           {"verdict", VerdictName(d.verdict)}});
  }
  return j;
}

inline std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Markdown tables followed by a fenced JSON block with the same numbers at
// full precision.
inline std::string RenderReport(const ComparisonReport& report) {
  std::string md = "# Ablation comparison\n\n";
  md +=
      "Metric: `" + report.metric + "`, verdict threshold: " + Fixed(report.threshold, 4) + "\n\n";
  md += "| setup | runs | mean | std |\n|---|---:|---:|---:|\n";
  for (const auto& s : report.setups) {
    md += "| " + s.setup + " | " + std::to_string(s.runs) + " | " + Fixed(s.mean, 4) + " | " +
          Fixed(s.stddev, 4) + " |\n";
  }
  md += "\n| first | second | delta | verdict |\n|---|---|---:|---|\n";
  for (const auto& d : report.deltas) {
    md += "| " + d.first + " | " + d.second + " | " + Fixed(d.delta, 4) + " | " +
          std::string(VerdictName(d.verdict)) + " |\n";
  }
  md += "\n```json\n" + ReportToJson(report).dump(2) + "\n```\n";
  return md;
}

// ---------------------------------------------------------------------------
// LLM answer scoring

struct LlmResponse {
  std::string example_id;
  std::string answer;
  std::string group;  // optional grouping key, e.g. G1
};

// Fraction of answers whose normalized text contains the normalized gold
// relation.
inline double ScoreLlmAnswers(const std::vector<LlmResponse>& responses,
                              const std::map<std::string, std::string, std::less<>>& key) {
  if (responses.empty()) throw Error(ErrorCode::kTooFewRuns, "no responses to score");
  std::size_t correct = 0;
  for (const auto& r : responses) {
    auto it = key.find(r.example_id);
    if (it == key.end()) throw Error(ErrorCode::kUnknownExample, r.example_id);
    const std::string gold = NormalizeSurface(it->second);
    if (NormalizeSurface(r.answer).find(gold) != std::string::npos) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(responses.size());
}

inline std::map<std::string, double> ScoreLlmGroups(
    const std::vector<LlmResponse>& responses,
    const std::map<std::string, std::string, std::less<>>& key) {
  std::map<std::string, std::vector<LlmResponse>> by_group;
  for (const auto& r : responses) by_group[r.group].push_back(r);
  std::map<std::string, double> out;
  for (const auto& [group, rs] : by_group) out[group] = ScoreLlmAnswers(rs, key);
  if (out.empty()) throw Error(ErrorCode::kTooFewRuns, "no responses to score");
  return out;
}

}  // namespace kiwb
