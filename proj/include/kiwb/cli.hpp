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

// Command-line front end. RunCommand() is the whole program minus main():
// it parses argv, runs one subcommand and reports failures as a single JSON
// line {"error":..,"detail":..} on `err`. Exit codes: 0 success, 1 runtime
// failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kiwb/aligner.hpp"
#include "kiwb/analysis.hpp"
#include "kiwb/concept_builder.hpp"
#include "kiwb/embeddings.hpp"
#include "kiwb/error.hpp"
#include "kiwb/harness.hpp"
#include "kiwb/injector.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/knowledge_source.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

inline constexpr std::string_view kToolkitVersion = "0.3.0";
inline constexpr std::string_view kFormatVersion = "dataset/1 dump/1 table/1 kg-index/1";

namespace cli {

class UsageError : public Error {
 public:
  using Error::Error;
};

inline void WriteOutput(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    WriteFile(path, content);
  }
}

inline std::vector<double> ParseLevelList(const std::vector<std::string>& raw) {
  std::vector<double> levels;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      try {
        levels.push_back(ParseLevel(part));
      } catch (const Error& e) {
        throw UsageError(ErrorCode::kInvalidArgument, e.detail());
      }
    }
  }
  return levels;
}

inline nlohmann::ordered_json MentionsToJson(const std::vector<Mention>& mentions) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : mentions) {
    arr.push_back(
        {{"surface", m.surface}, {"start", m.start}, {"end", m.end}, {"entity", m.entity_id}});
  }
  return arr;
}

struct Options {
  // shared inputs
  std::string triples, entities, corpus, taxonomy, out = "-", out_dir;
  std::string text;
  // make-datasets / sweep
  std::string variant = "aligned";
  double level = 1.0;
  std::vector<std::string> levels;
  std::vector<std::uint64_t> seeds;
  double sigma = 1.0;
  std::size_t noise_dim = 0;
  std::size_t depth = 1;
  std::size_t jobs = 1;
  std::optional<std::size_t> prune;
  // train-transe
  TransEConfig transe;
  std::string loss_out;
  // aggregate
  std::string results;
  double threshold = kDefaultVerdictThreshold;
  // analysis
  std::string dump_a, dump_b, preds_a, preds_b, loss_curve, csv_out;
  std::vector<std::string> positions;
  std::string dump;
  // llm
  std::string responses, key, dataset, group = "G1";
};

inline InjectionVariant VariantFromOptions(const Options& o) {
  auto kind = ParseInjectionKind(o.variant);
  if (!kind) throw UsageError(ErrorCode::kInvalidArgument, "unknown variant " + o.variant);
  InjectionVariant v{*kind, o.level, o.sigma, o.noise_dim};
  try {
    v.Validate();
  } catch (const Error& e) {
    throw UsageError(e.code(), e.detail());
  }
  return v;
}

inline RunSpec RunSpecFromOptions(const Options& o) {
  RunSpec spec;
  spec.corpus_path = o.corpus;
  spec.kg_triples_path = o.triples;
  spec.kg_entities_path = o.entities;
  if (!o.taxonomy.empty()) spec.taxonomy_path = o.taxonomy;
  spec.variant = VariantFromOptions(o);
  spec.seeds = o.seeds;
  spec.output_dir = o.out_dir;
  spec.concept_depth = o.depth;
  spec.jobs = o.jobs;
  try {
    spec.Validate();
  } catch (const Error& e) {
    throw UsageError(e.code(), e.detail());
  }
  return spec;
}

inline KnowledgeGraph LoadGraph(const Options& o) {
  return Seal(LoadEntities(o.entities), LoadTriples(o.triples));
}

inline int CmdBuildKg(const Options& o, std::ostream& out) {
  const KnowledgeGraph kg = LoadGraph(o);
  WriteOutput(o.out, SerializeIndex(kg), out);
  return 0;
}

inline int CmdAlign(const Options& o, std::ostream& out) {
  const KnowledgeGraph kg = LoadGraph(o);
  std::string result;
  if (!o.corpus.empty()) {
    for (const auto& ex : LoadCorpus(o.corpus)) {
      nlohmann::ordered_json j;
      j["id"] = ex.id;
      j["mentions"] = MentionsToJson(Align(ex.text, kg));
      result += j.dump() + "\n";
    }
  } else {
    if (!IsValidUtf8(o.text)) throw Error(ErrorCode::kInvalidEncoding, "--text");
    nlohmann::ordered_json j;
    j["mentions"] = MentionsToJson(Align(o.text, kg));
    result = j.dump() + "\n";
  }
  WriteOutput(o.out, result, out);
  return 0;
}

inline int CmdBuildConcepts(const Options& o, std::ostream& out, std::ostream& err) {
  const EntityMap entities = LoadEntities(o.entities);
  Taxonomy taxonomy = LoadTaxonomy(o.taxonomy);
  if (o.prune) taxonomy = PruneTaxonomy(taxonomy, *o.prune);
  std::string result;
  std::size_t skipped = 0;
  for (const auto& [id, entity] : entities) {
    if (entity.type_label.empty()) {
      ++skipped;
      continue;
    }
    const ConceptualTriple c = BuildConceptual(entity, taxonomy, o.depth);
    nlohmann::ordered_json j;
    j["title"] = c.title;
    j["type"] = c.type_label;
    j["concept"] = c.hypernym;
    result += j.dump() + "\n";
  }
  WriteOutput(o.out, result, out);
  if (skipped > 0) err << "skipped " << skipped << " entities without a type\n";
  return 0;
}

inline int CmdTrainTransE(const Options& o, std::ostream& out) {
  TransEHistory history;
  const EmbeddingTable table = TrainTransE(LoadTriples(o.triples), o.transe, &history);
  WriteOutput(o.out, SerializeEmbeddingTable(table), out);
  if (!o.loss_out.empty()) {
    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < history.epoch_loss.size(); ++i) {
      csv += std::to_string(i + 1) + "," + FormatDouble(history.epoch_loss[i]) + "\n";
    }
    WriteFile(o.loss_out, csv);
  }
  return 0;
}

inline int CmdMakeDatasets(const RunSpec& spec, std::ostream& out) {
  for (const auto& f : MakeDatasets(spec)) {
    out << (std::filesystem::path(spec.output_dir) / f.path).string() << "\n";
    if (!f.noise_path.empty()) {
      out << (std::filesystem::path(spec.output_dir) / f.noise_path).string() << "\n";
    }
  }
  return 0;
}

inline int CmdSweep(const RunSpec& spec, const std::vector<double>& levels, std::ostream& out) {
  SweepQuantity(spec, levels);
  out << (std::filesystem::path(spec.output_dir) / kManifestName).string() << "\n";
  return 0;
}

inline int CmdAggregate(const Options& o, std::ostream& out) {
  const auto report = AggregateRuns(ParseResultsCsv(ReadFile(o.results)), o.threshold);
  WriteOutput(o.out, RenderReport(report), out);
  return 0;
}

inline int CmdAnalyzeDumps(const Options& o, std::ostream& out) {
  std::string md = "# Hidden-state analysis\n";
  std::string csv = "position,layer,similarity\n";
  if (!o.dump_a.empty() || !o.dump_b.empty()) {
    if (o.dump_a.empty() || o.dump_b.empty()) {
      throw UsageError(ErrorCode::kInvalidArgument, "--a and --b go together");
    }
    const HiddenStateDump a = LoadDump(o.dump_a);
    const HiddenStateDump b = LoadDump(o.dump_b);
    CheckComparable(a, b);
    const std::vector<std::string> positions = o.positions.empty() ? DumpPositions(a) : o.positions;
    md += "\nModels: `" + a.model + "` vs `" + b.model + "`\n";
    for (const auto& pos : positions) {
      const auto series = LayerCosine(a, b, pos);
      md += "\n## Position `" + pos + "`\n\n| layer | mean abs cosine |\n|---:|---:|\n";
      for (std::size_t l = 0; l < series.size(); ++l) {
        md += "| " + std::to_string(l + 1) + " | " + Fixed(series[l], 6) + " |\n";
        csv += pos + "," + std::to_string(l + 1) + "," + FormatDouble(series[l]) + "\n";
      }
    }
  }
  if (!o.preds_a.empty() || !o.preds_b.empty()) {
    if (o.preds_a.empty() || o.preds_b.empty()) {
      throw UsageError(ErrorCode::kInvalidArgument, "--preds-a and --preds-b go together");
    }
    const Agreement agree = PredictionAgreement(ParsePredictionsCsv(ReadFile(o.preds_a)),
                                                ParsePredictionsCsv(ReadFile(o.preds_b)));
    md += "\n## Prediction agreement\n\n| same | different | agreement |\n|---:|---:|---:|\n";
    md += "| " + std::to_string(agree.same) + " | " + std::to_string(agree.different) + " | " +
          Fixed(100.0 * agree.fraction(), 2) + "% |\n";
  }
  if (!o.loss_curve.empty()) {
    const LossGapReport gap = LossGap(ParseLossCurveCsv(ReadFile(o.loss_curve)));
    md += "\n## Loss gap\n\nFinal-epoch |dev - train|: " + Fixed(gap.final_gap, 6) +
          "\n\n| epoch | gap |\n|---:|---:|\n";
    for (std::size_t i = 0; i < gap.series.size(); ++i) {
      md += "| " + std::to_string(i + 1) + " | " + Fixed(gap.series[i], 6) + " |\n";
    }
  }
  WriteOutput(o.out, md, out);
  if (!o.csv_out.empty()) WriteFile(o.csv_out, csv);
  return 0;
}

inline int CmdValidateDump(const Options& o, std::ostream& out) {
  const auto violations = ValidateDump(ReadFile(o.dump));
  if (violations.empty()) {
    out << "ok\n";
    return 0;
  }
  for (const auto& v : violations) out << v << "\n";
  throw Error(ErrorCode::kFormatError, std::to_string(violations.size()) + " violation(s)");
}

inline std::vector<nlohmann::json> ReadJsonl(const std::string& path) {
  std::vector<nlohmann::json> rows;
  const std::string content = ReadFile(path);
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (IsBlankOrComment(lines[i])) continue;
    auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (!j.is_object()) {
      throw Error(ErrorCode::kMalformedLine, path + ":" + std::to_string(i + 1));
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

inline std::string StringField(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kFormatError, where + ": missing string field " + key);
  }
  return it->get<std::string>();
}

inline int CmdScoreLlm(const Options& o, std::ostream& out) {
  std::map<std::string, std::string, std::less<>> key;
  for (const auto& j : ReadJsonl(o.key)) {
    key[StringField(j, "id", o.key)] = StringField(j, "relation", o.key);
  }
  std::vector<LlmResponse> responses;
  for (const auto& j : ReadJsonl(o.responses)) {
    LlmResponse r{StringField(j, "id", o.responses), StringField(j, "answer", o.responses), ""};
    if (j.contains("group")) r.group = StringField(j, "group", o.responses);
    responses.push_back(std::move(r));
  }
  nlohmann::ordered_json result;
  result["responses"] = responses.size();
  result["accuracy"] = ScoreLlmAnswers(responses, key);
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [g, acc] : ScoreLlmGroups(responses, key)) {
    if (!g.empty()) groups[g] = acc;
  }
  result["groups"] = std::move(groups);
  WriteOutput(o.out, result.dump() + "\n", out);
  return 0;
}

// Examples without task entities have no relation question and are skipped.
inline int CmdBuildPrompts(const Options& o, std::ostream& out, std::ostream& err) {
  PromptGroup group;
  if (o.group == "G1") {
    group = PromptGroup::kTextOnly;
  } else if (o.group == "G2") {
    group = PromptGroup::kWikiTriples;
  } else if (o.group == "G3") {
    group = PromptGroup::kConceptual;
  } else {
    throw UsageError(ErrorCode::kInvalidArgument, "group must be G1, G2 or G3");
  }
  const KnowledgeGraph kg = LoadGraph(o);
  std::string result;
  std::size_t skipped = 0;
  for (const auto& j : ReadJsonl(o.dataset)) {
    const InjectedExample ex = ExampleFromJson(j);
    if (ex.task_entities.empty()) {
      ++skipped;
      continue;
    }
    nlohmann::ordered_json row;
    row["id"] = ex.example_id;
    row["group"] = o.group;
    row["prompt"] = BuildLlmPrompt(ex, group, kg);
    result += row.dump() + "\n";
  }
  WriteOutput(o.out, result, out);
  if (skipped > 0) err << "skipped " << skipped << " examples without task entities\n";
  return 0;
}

inline void PrintError(std::ostream& err, std::string_view code, const std::string& detail) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["detail"] = detail;
  err << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
}

}  // namespace cli

// `args` excludes the program name.
inline int RunCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli;
  Options o;
  CLI::App app{"kiwb: knowledge-injection ablation workbench", "kiwb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("kiwb ") + std::string(kToolkitVersion) +
                                        " (formats: " + std::string(kFormatVersion) + ")");

  auto add_kg = [&](CLI::App* sub, bool prefixed) {
    sub->add_option(prefixed ? "--kg-triples" : "--triples", o.triples, "Triples TSV")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option(prefixed ? "--kg-entities" : "--entities", o.entities, "Entities JSONL")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output file ('-' for stdout)");
  };

  auto* build_kg = app.add_subcommand("build-kg", "Load and seal a KG, write its alias index");
  add_kg(build_kg, false);
  add_out(build_kg);

  auto* align = app.add_subcommand("align", "Link KG entity mentions in text");
  add_kg(align, true);
  auto* align_src = align->add_option_group("source");
  align_src->add_option("--corpus", o.corpus, "Corpus JSONL")->check(CLI::ExistingFile);
  align_src->add_option("--text", o.text, "A single input text");
  align_src->require_option(1);
  add_out(align);

  auto* concepts = app.add_subcommand("build-concepts", "Emit conceptual triples per entity");
  concepts->add_option("--entities", o.entities, "Entities JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  concepts->add_option("--taxonomy", o.taxonomy, "Taxonomy TSV child<TAB>parent")
      ->required()
      ->check(CLI::ExistingFile);
  concepts->add_option("--depth", o.depth, "Hypernym steps")->check(CLI::PositiveNumber);
  concepts->add_option("--prune", o.prune, "Prune the taxonomy to this depth first")
      ->check(CLI::PositiveNumber);
  add_out(concepts);

  auto* transe = app.add_subcommand("train-transe", "Train TransE embeddings");
  transe->add_option("--triples", o.triples, "Triples TSV")->required()->check(CLI::ExistingFile);
  transe->add_option("--dim", o.transe.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  transe->add_option("--margin", o.transe.margin, "Ranking margin")->check(CLI::PositiveNumber);
  transe->add_option("--lr", o.transe.learning_rate, "SGD learning rate")
      ->check(CLI::PositiveNumber);
  transe->add_option("--epochs", o.transe.epochs, "Epochs")->check(CLI::PositiveNumber);
  transe->add_option("--negatives", o.transe.negatives_per_positive, "Negatives per positive")
      ->check(CLI::PositiveNumber);
  transe->add_option("--seed", o.transe.seed, "Random seed");
  transe->add_option("--loss-out", o.loss_out, "Write per-epoch loss CSV here");
  add_out(transe);

  auto add_dataset_flags = [&](CLI::App* sub, bool sweep) {
    sub->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    add_kg(sub, true);
    sub->add_option("--taxonomy", o.taxonomy, "Taxonomy TSV (conceptual variant)")
        ->check(CLI::ExistingFile);
    if (sweep) {
      sub->add_option("--levels", o.levels, "Comma-separated quantity levels")->required();
    } else {
      sub->add_option("--variant", o.variant, "aligned|random|conceptual|noise|none")
          ->check(CLI::IsMember({"aligned", "random", "conceptual", "noise", "none"}));
      sub->add_option("--level", o.level, "Triples per mention (probability below 1)")
          ->check(CLI::NonNegativeNumber);
    }
    sub->add_option("--seed", o.seeds, "Run seed (repeatable)")->required();
    sub->add_option("--out-dir", o.out_dir, "Output directory")->required();
    sub->add_option("--sigma", o.sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
    sub->add_option("--dim", o.noise_dim, "Noise vector dimension")->check(CLI::PositiveNumber);
    sub->add_option("--depth", o.depth, "Hypernym steps for conceptual knowledge")
        ->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "Parallel dataset builds")->check(CLI::PositiveNumber);
  };
  auto* make = app.add_subcommand("make-datasets", "Emit one injected dataset per seed");
  add_dataset_flags(make, false);
  auto* sweep = app.add_subcommand("sweep", "Aligned and random datasets per quantity level");
  add_dataset_flags(sweep, true);

  auto* aggregate = app.add_subcommand("aggregate", "Aggregate seeded results into a report");
  aggregate->add_option("--results", o.results, "Results CSV setup,seed,metric,value")
      ->required()
      ->check(CLI::ExistingFile);
  aggregate->add_option("--threshold", o.threshold, "Verdict threshold on |delta|")
      ->check(CLI::NonNegativeNumber);
  add_out(aggregate);

  auto* analyze = app.add_subcommand("analyze-dumps", "Per-layer similarity, agreement, loss gap");
  analyze->add_option("--a", o.dump_a, "First hidden-state dump")->check(CLI::ExistingFile);
  analyze->add_option("--b", o.dump_b, "Second hidden-state dump")->check(CLI::ExistingFile);
  analyze->add_option("--position", o.positions, "Tracked position (repeatable; default all)");
  analyze->add_option("--preds-a", o.preds_a, "Predictions CSV id,prediction")
      ->check(CLI::ExistingFile);
  analyze->add_option("--preds-b", o.preds_b, "Predictions CSV id,prediction")
      ->check(CLI::ExistingFile);
  analyze->add_option("--loss-curve", o.loss_curve, "Loss CSV epoch,train_loss,dev_loss")
      ->check(CLI::ExistingFile);
  analyze->add_option("--csv", o.csv_out, "Also write the similarity series as CSV");
  add_out(analyze);

  auto* validate = app.add_subcommand("validate-dump", "Check a hidden-state dump");
  validate->add_option("--dump", o.dump, "Dump JSONL")->required()->check(CLI::ExistingFile);

  auto* score = app.add_subcommand("score-llm", "Score LLM answers against gold relations");
  score->add_option("--responses", o.responses, "JSONL {id, answer, group?}")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--key", o.key, "JSONL {id, relation}")->required()->check(CLI::ExistingFile);
  add_out(score);

  auto* prompts = app.add_subcommand("build-prompts", "Relation-question prompts for an LLM");
  prompts->add_option("--dataset", o.dataset, "Dataset JSONL from make-datasets")
      ->required()
      ->check(CLI::ExistingFile);
  add_kg(prompts, true);
  prompts->add_option("--group", o.group, "G1 (text only), G2 (wiki triples), G3 (conceptual)");
  add_out(prompts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    PrintError(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*build_kg) return CmdBuildKg(o, out);
    if (*align) return CmdAlign(o, out);
    if (*concepts) return CmdBuildConcepts(o, out, err);
    if (*transe) return CmdTrainTransE(o, out);
    if (*make) return CmdMakeDatasets(RunSpecFromOptions(o), out);
    if (*sweep) {
      const std::vector<double> levels = ParseLevelList(o.levels);
      if (levels.empty()) throw UsageError(ErrorCode::kInvalidArgument, "no levels given");
      return CmdSweep(RunSpecFromOptions(o), levels, out);
    }
    if (*aggregate) return CmdAggregate(o, out);
    if (*analyze) return CmdAnalyzeDumps(o, out);
    if (*validate) return CmdValidateDump(o, out);
    if (*score) return CmdScoreLlm(o, out);
    if (*prompts) return CmdBuildPrompts(o, out, err);
  } catch (const UsageError& e) {
    PrintError(err, ErrorCodeName(e.code()), e.detail());
    return 2;
  } catch (const Error& e) {
    PrintError(err, ErrorCodeName(e.code()), e.detail());
    return 1;
  } catch (const std::exception& e) {
    PrintError(err, "InternalError", e.what());
    return 1;
  }
  PrintError(err, "UsageError", "no subcommand");
  return 2;
}

}  // namespace kiwb
