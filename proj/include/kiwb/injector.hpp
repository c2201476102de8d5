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

// Text-based knowledge injection and LLM prompt construction.
//
// Injected form, for marked mentions m_1..m_k with knowledge items:
//
//   *title(m_1)* *title(m_2)* ... <original text> (a b c) (d e f) ...
//
// Each item renders as its three elements joined by single spaces inside
// parentheses. KG triples render the head as its entity title and the tail
// as its title when it resolves, else as the literal.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "kiwb/aligner.hpp"
#include "kiwb/concept_builder.hpp"
#include "kiwb/error.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/knowledge_source.hpp"

namespace kiwb {

using KnowledgeItem = std::variant<Triple, ConceptualTriple>;
using KnowledgeList = std::vector<KnowledgeItem>;

inline std::string RenderItem(const KnowledgeItem& item, const KnowledgeGraph& kg) {
  std::string out = "(";
  if (const auto* t = std::get_if<Triple>(&item)) {
    out += kg.DisplayName(t->head);
    out += ' ';
    out += t->relation;
    out += ' ';
    out += kg.DisplayName(t->tail);
  } else {
    const auto& c = std::get<ConceptualTriple>(item);
    out += c.title;
    out += ' ';
    out += c.type_label;
    out += ' ';
    out += c.hypernym;
  }
  out += ')';
  return out;
}

inline std::string InjectText(std::string_view text, const std::vector<Mention>& mentions,
                              const std::vector<KnowledgeList>& knowledge,
                              const KnowledgeGraph& kg) {
  if (mentions.size() != knowledge.size()) {
    throw Error(ErrorCode::kIndexMismatch, std::to_string(mentions.size()) + " mentions, " +
                                               std::to_string(knowledge.size()) +
                                               " knowledge lists");
  }
  std::string out;
  for (const auto& m : mentions) {
    out += '*';
    out += kg.DisplayName(m.entity_id);
    out += "* ";
  }
  out += text;
  for (const auto& list : knowledge) {
    for (const auto& item : list) {
      out += ' ';
      out += RenderItem(item, kg);
    }
  }
  return out;
}

// Textual variants route through InjectText; noise exists only in
// embedding space and is refused.
inline std::string InjectForVariant(InjectionKind kind, std::string_view text,
                                    const std::vector<Mention>& mentions,
                                    const std::vector<KnowledgeList>& knowledge,
                                    const KnowledgeGraph& kg) {
  if (kind == InjectionKind::kNoise) {
    throw Error(ErrorCode::kNoiseNotTextual, "noise variant has no text form");
  }
  if (kind == InjectionKind::kNoInjection) return std::string(text);
  return InjectText(text, mentions, knowledge, kg);
}

struct InjectedExample {
  std::string example_id;
  std::string original_text;
  std::string injected_text;
  std::string label;
  std::vector<Mention> mentions;
  // Scheduled knowledge count per mention; a mention is marked iff > 0.
  std::vector<std::size_t> quota;
  std::vector<KnowledgeList> knowledge;
  InjectionVariant variant;
  std::uint64_t seed = 0;
  std::vector<std::string> task_entities;
};

enum class PromptGroup { kTextOnly, kWikiTriples, kConceptual };

inline constexpr std::string_view kQuestionTemplateHead =
    "Question: Is there a relationship between ";
inline constexpr std::string_view kQuestionTemplateTail =
    "? If is, what is the relationship between them?";

inline std::string RelationQuestion(std::string_view a, std::string_view b) {
  std::string q(kQuestionTemplateHead);
  q += a;
  q += " and ";
  q += b;
  q += kQuestionTemplateTail;
  return q;
}

// Group 1: marked text without trailing triples (built from any textual
// variant). Group 2: wiki triples, requires an aligned example. Group 3:
// conceptual triples, requires a conceptual example.
inline std::string BuildLlmPrompt(const InjectedExample& example, PromptGroup group,
                                  const KnowledgeGraph& kg) {
  const InjectionKind kind = example.variant.kind;
  std::string body;
  switch (group) {
    case PromptGroup::kTextOnly: {
      if (kind != InjectionKind::kAligned && kind != InjectionKind::kRandom &&
          kind != InjectionKind::kConceptual) {
        throw Error(ErrorCode::kWrongVariantForGroup, "G1 needs a marked textual example");
      }
      std::vector<Mention> marked;
      for (std::size_t i = 0; i < example.mentions.size(); ++i) {
        if (i < example.quota.size() && example.quota[i] > 0) {
          marked.push_back(example.mentions[i]);
        }
      }
      body =
          InjectText(example.original_text, marked, std::vector<KnowledgeList>(marked.size()), kg);
      break;
    }
    case PromptGroup::kWikiTriples:
      if (kind != InjectionKind::kAligned) {
        throw Error(ErrorCode::kWrongVariantForGroup, "G2 needs an aligned example");
      }
      body = example.injected_text;
      break;
    case PromptGroup::kConceptual:
      if (kind != InjectionKind::kConceptual) {
        throw Error(ErrorCode::kWrongVariantForGroup, "G3 needs a conceptual example");
      }
      body = example.injected_text;
      break;
  }
  if (example.task_entities.size() != 2) {
    throw Error(ErrorCode::kMissingTaskEntities, example.example_id);
  }
  return body + " " + RelationQuestion(example.task_entities[0], example.task_entities[1]);
}

// Dataset record serialization. Field order is fixed:
// id, variant{kind, level[, sigma, dim]}, seed, label, text, injected_text,
// mentions[{surface, start, end, entity}], quota, knowledge, task_entities.
inline nlohmann::ordered_json ExampleToJson(const InjectedExample& ex) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["id"] = ex.example_id;
  ordered_json variant;
  variant["kind"] = InjectionKindName(ex.variant.kind);
  variant["level"] = ex.variant.level;
  if (ex.variant.kind == InjectionKind::kNoise) {
    variant["sigma"] = ex.variant.sigma;
    variant["dim"] = ex.variant.dim;
  }
  j["variant"] = std::move(variant);
  j["seed"] = ex.seed;
  j["label"] = ex.label;
  j["text"] = ex.original_text;
  j["injected_text"] = ex.injected_text;
  ordered_json mentions = ordered_json::array();
  for (const auto& m : ex.mentions) {
    ordered_json mj;
    mj["surface"] = m.surface;
    mj["start"] = m.start;
    mj["end"] = m.end;
    mj["entity"] = m.entity_id;
    mentions.push_back(std::move(mj));
  }
  j["mentions"] = std::move(mentions);
  j["quota"] = ex.quota;
  ordered_json knowledge = ordered_json::array();
  for (const auto& list : ex.knowledge) {
    ordered_json lj = ordered_json::array();
    for (const auto& item : list) {
      ordered_json ij;
      if (const auto* t = std::get_if<Triple>(&item)) {
        ij["head"] = t->head;
        ij["relation"] = t->relation;
        ij["tail"] = t->tail;
      } else {
        const auto& c = std::get<ConceptualTriple>(item);
        ij["title"] = c.title;
        ij["type"] = c.type_label;
        ij["concept"] = c.hypernym;
      }
      lj.push_back(std::move(ij));
    }
    knowledge.push_back(std::move(lj));
  }
  j["knowledge"] = std::move(knowledge);
  j["task_entities"] = ex.task_entities;
  return j;
}

inline InjectedExample ExampleFromJson(const nlohmann::json& j) {
  try {
    InjectedExample ex;
    ex.example_id = j.at("id").get<std::string>();
    const auto& variant = j.at("variant");
    auto kind = ParseInjectionKind(variant.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kFormatError, "unknown variant kind");
    ex.variant.kind = *kind;
    ex.variant.level = variant.at("level").get<double>();
    if (variant.contains("sigma")) ex.variant.sigma = variant["sigma"].get<double>();
    if (variant.contains("dim")) ex.variant.dim = variant["dim"].get<std::size_t>();
    ex.seed = j.at("seed").get<std::uint64_t>();
    ex.label = j.at("label").get<std::string>();
    ex.original_text = j.at("text").get<std::string>();
    ex.injected_text = j.at("injected_text").get<std::string>();
    for (const auto& mj : j.at("mentions")) {
      ex.mentions.push_back(
          Mention{mj.at("surface").get<std::string>(), mj.at("start").get<std::size_t>(),
                  mj.at("end").get<std::size_t>(), mj.at("entity").get<std::string>()});
    }
    ex.quota = j.at("quota").get<std::vector<std::size_t>>();
    for (const auto& lj : j.at("knowledge")) {
      KnowledgeList list;
      for (const auto& ij : lj) {
        if (ij.contains("head")) {
          list.emplace_back(Triple{ij.at("head").get<std::string>(),
                                   ij.at("relation").get<std::string>(),
                                   ij.at("tail").get<std::string>()});
        } else {
          list.emplace_back(ConceptualTriple{ij.at("title").get<std::string>(),
                                             ij.at("type").get<std::string>(),
                                             ij.at("concept").get<std::string>()});
        }
      }
      ex.knowledge.push_back(std::move(list));
    }
    ex.task_entities = j.at("task_entities").get<std::vector<std::string>>();
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, e.what());
  }
}

}  // namespace kiwb
