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

// In-memory knowledge graph: triples, entities and a normalized alias index.
//
// Triples are read from TSV (`head<TAB>relation<TAB>tail`), entities from
// JSONL (`{"id":..,"title":..,"type":..,"aliases":[..]}`). Seal() validates
// the pair and builds the lookup structures; the resulting graph is
// immutable and may be shared between threads.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kiwb/error.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Entity {
  std::string id;
  std::string title;
  std::string type_label;
  std::vector<std::string> aliases;

  friend bool operator==(const Entity&, const Entity&) = default;
};

using EntityMap = std::map<std::string, Entity, std::less<>>;
using AliasIndex = std::map<std::string, std::vector<std::string>, std::less<>>;

inline std::vector<Triple> ParseTriples(std::string_view content) {
  std::vector<Triple> triples;
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (!IsValidUtf8(line)) {
      throw Error(ErrorCode::kInvalidEncoding, "line " + std::to_string(line_no));
    }
    if (IsBlankOrComment(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw Error(ErrorCode::kMalformedLine, std::to_string(line_no));
    }
    triples.push_back(
        Triple{std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  }
  return triples;
}

inline std::vector<Triple> LoadTriples(const std::string& path) {
  return ParseTriples(ReadFile(path));
}

inline EntityMap ParseEntities(std::string_view content) {
  EntityMap entities;
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line_no = std::to_string(i + 1);
    const std::string_view line = lines[i];
    if (!IsValidUtf8(line)) throw Error(ErrorCode::kInvalidEncoding, "line " + line_no);
    if (IsBlankOrComment(line)) continue;

    auto obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!obj.is_object()) throw Error(ErrorCode::kMalformedLine, line_no);
    auto id = obj.find("id");
    auto title = obj.find("title");
    if (id == obj.end() || !id->is_string() || id->get_ref<const std::string&>().empty() ||
        title == obj.end() || !title->is_string() || title->get_ref<const std::string&>().empty()) {
      throw Error(ErrorCode::kMalformedLine, line_no);
    }
    Entity e;
    e.id = id->get<std::string>();
    e.title = title->get<std::string>();
    if (auto type = obj.find("type"); type != obj.end() && !type->is_null()) {
      if (!type->is_string()) throw Error(ErrorCode::kMalformedLine, line_no);
      e.type_label = type->get<std::string>();
    }
    if (auto aliases = obj.find("aliases"); aliases != obj.end() && !aliases->is_null()) {
      if (!aliases->is_array()) throw Error(ErrorCode::kMalformedLine, line_no);
      std::vector<std::string> seen;
      for (const auto& a : *aliases) {
        if (!a.is_string()) throw Error(ErrorCode::kMalformedLine, line_no);
        const auto& surface = a.get_ref<const std::string&>();
        std::string key = NormalizeSurface(surface);
        if (key.empty() || std::find(seen.begin(), seen.end(), key) != seen.end()) {
          continue;
        }
        seen.push_back(std::move(key));
        e.aliases.push_back(surface);
      }
    }
    std::string key = e.id;
    if (!entities.emplace(std::move(key), std::move(e)).second) {
      throw Error(ErrorCode::kDuplicateEntity, id->get<std::string>());
    }
  }
  return entities;
}

inline EntityMap LoadEntities(const std::string& path) { return ParseEntities(ReadFile(path)); }

class KnowledgeGraph {
 public:
  const EntityMap& entities() const { return entities_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const AliasIndex& alias_index() const { return alias_index_; }
  const std::map<std::string, std::vector<std::size_t>, std::less<>>& triples_by_head() const {
    return triples_by_head_;
  }

  const Entity* FindEntity(std::string_view id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
  }

  // Entity ids registered under a normalized surface, or nullptr.
  const std::vector<std::string>* Candidates(std::string_view normalized) const {
    auto it = alias_index_.find(normalized);
    return it == alias_index_.end() ? nullptr : &it->second;
  }

  // True if some alias key starts with `prefix`.
  bool HasAliasWithPrefix(std::string_view prefix) const {
    auto it = alias_index_.lower_bound(prefix);
    return it != alias_index_.end() && std::string_view(it->first).starts_with(prefix);
  }

  // entity title if `id` resolves, else `id` itself (literal tails).
  const std::string& DisplayName(const std::string& id) const {
    const Entity* e = FindEntity(id);
    return e ? e->title : id;
  }

 private:
  friend KnowledgeGraph Seal(EntityMap entities, std::vector<Triple> triples);

  EntityMap entities_;
  std::vector<Triple> triples_;
  AliasIndex alias_index_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> triples_by_head_;
};

inline KnowledgeGraph Seal(EntityMap entities, std::vector<Triple> triples) {
  KnowledgeGraph kg;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (entities.find(triples[i].head) == entities.end()) {
      throw Error(ErrorCode::kDanglingHead, triples[i].head + " at triple " + std::to_string(i));
    }
    kg.triples_by_head_[triples[i].head].push_back(i);
  }
  for (const auto& [id, entity] : entities) {
    auto add = [&](const std::string& surface) {
      std::string key = NormalizeSurface(surface);
      if (key.empty()) return;
      auto& ids = kg.alias_index_[key];
      if (ids.empty() || ids.back() != id) ids.push_back(id);
    };
    add(entity.title);
    for (const auto& alias : entity.aliases) add(alias);
  }
  // Entities are visited in id order, so each list is already sorted.
  kg.entities_ = std::move(entities);
  kg.triples_ = std::move(triples);
  return kg;
}

// First `limit` triples whose head is `id`, in ingestion order.
inline std::vector<Triple> Neighbors(const KnowledgeGraph& kg, std::string_view id,
                                     std::size_t limit) {
  std::vector<Triple> out;
  auto it = kg.triples_by_head().find(id);
  if (it == kg.triples_by_head().end()) return out;
  for (std::size_t idx : it->second) {
    if (out.size() >= limit) break;
    out.push_back(kg.triples()[idx]);
  }
  return out;
}

// Canonical JSON rendering of the sealed index. Identical inputs give
// identical bytes.
inline std::string SerializeIndex(const KnowledgeGraph& kg) {
  nlohmann::ordered_json doc;
  doc["format"] = "kiwb-kg-index/1";
  doc["entities"] = kg.entities().size();
  doc["triples"] = kg.triples().size();
  nlohmann::ordered_json aliases = nlohmann::ordered_json::object();
  for (const auto& [key, ids] : kg.alias_index()) aliases[key] = ids;
  doc["alias_index"] = std::move(aliases);
  nlohmann::ordered_json by_head = nlohmann::ordered_json::object();
  for (const auto& [head, idx] : kg.triples_by_head()) by_head[head] = idx;
  doc["triples_by_head"] = std::move(by_head);
  return doc.dump() + "\n";
}

}  // namespace kiwb
