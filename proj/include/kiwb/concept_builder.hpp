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

// Conceptual knowledge: (title, type, concept) triples built by walking a
// hypernym taxonomy upward from an entity's type label.
//
// The taxonomy file is a TSV edge list `child<TAB>parent`; a child may list
// several parents and their file order is kept. When a node has several
// hypernyms only the first-listed one is followed. Depth is counted along
// first parents with roots at depth 1.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kiwb/error.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

struct ConceptualTriple {
  std::string title;
  std::string type_label;
  std::string hypernym;

  friend bool operator==(const ConceptualTriple&, const ConceptualTriple&) = default;
};

class Taxonomy {
 public:
  using ParentMap = std::map<std::string, std::vector<std::string>, std::less<>>;
  using AliasMap = std::map<std::string, std::string, std::less<>>;

  Taxonomy() = default;

  // Builds and validates: parents must be nodes, and the graph must be acyclic.
  Taxonomy(std::set<std::string, std::less<>> nodes, ParentMap parents, AliasMap aliases = {})
      : nodes_(std::move(nodes)), parents_(std::move(parents)), aliases_(std::move(aliases)) {
    for (const auto& [child, ps] : parents_) {
      nodes_.insert(child);
      for (const auto& p : ps) nodes_.insert(p);
    }
    CheckAcyclic();
  }

  const std::set<std::string, std::less<>>& nodes() const { return nodes_; }
  const ParentMap& parents() const { return parents_; }
  // Labels removed by pruning, mapped to the node that stands in for them.
  const AliasMap& aliases() const { return aliases_; }

  std::vector<std::string> roots() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
      if (IsRoot(n)) out.push_back(n);
    }
    return out;
  }

  bool Contains(std::string_view label) const { return nodes_.contains(label); }

  bool IsRoot(std::string_view label) const {
    auto it = parents_.find(label);
    return it == parents_.end() || it->second.empty();
  }

  const std::string* FirstParent(std::string_view label) const {
    auto it = parents_.find(label);
    if (it == parents_.end() || it->second.empty()) return nullptr;
    return &it->second.front();
  }

  // Node standing for `label`: itself, its pruning alias target, or nullptr
  // when the label is unknown.
  const std::string* Resolve(std::string_view label) const {
    if (auto it = nodes_.find(label); it != nodes_.end()) return &*it;
    if (auto it = aliases_.find(label); it != aliases_.end()) return &it->second;
    return nullptr;
  }

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;

 private:
  void CheckAcyclic() const {
    enum Color { kWhite, kGrey, kBlack };
    std::map<std::string_view, Color> color;
    for (const auto& n : nodes_) color[n] = kWhite;
    struct Frame {
      std::string_view node;
      std::size_t next;
    };
    for (const auto& start : nodes_) {
      if (color[start] != kWhite) continue;
      std::vector<Frame> stack{{start, 0}};
      color[start] = kGrey;
      while (!stack.empty()) {
        Frame& top = stack.back();
        auto it = parents_.find(top.node);
        if (it == parents_.end() || top.next >= it->second.size()) {
          color[top.node] = kBlack;
          stack.pop_back();
          continue;
        }
        std::string_view parent = it->second[top.next++];
        if (color[parent] == kGrey) {
          throw Error(ErrorCode::kCycleDetected, std::string(parent));
        }
        if (color[parent] == kWhite) {
          color[parent] = kGrey;
          stack.push_back({parent, 0});
        }
      }
    }
  }

  std::set<std::string, std::less<>> nodes_;
  ParentMap parents_;
  AliasMap aliases_;
};

inline Taxonomy ParseTaxonomy(std::string_view content) {
  std::set<std::string, std::less<>> nodes;
  Taxonomy::ParentMap parents;
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line_no = std::to_string(i + 1);
    if (!IsValidUtf8(lines[i])) throw Error(ErrorCode::kInvalidEncoding, "line " + line_no);
    if (IsBlankOrComment(lines[i])) continue;
    const auto fields = SplitTabs(lines[i]);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::kMalformedLine, line_no);
    }
    std::string child(fields[0]);
    std::string parent(fields[1]);
    if (child == parent) throw Error(ErrorCode::kCycleDetected, child);
    nodes.insert(child);
    nodes.insert(parent);
    auto& ps = parents[child];
    if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(std::move(parent));
  }
  return Taxonomy(std::move(nodes), std::move(parents));
}

inline Taxonomy LoadTaxonomy(const std::string& path) { return ParseTaxonomy(ReadFile(path)); }

// Walks up to `depth` first-parent steps from `type_label`. Unknown labels
// and roots come back unchanged.
inline std::string ConceptOf(std::string_view type_label, const Taxonomy& taxonomy,
                             std::size_t depth) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  const std::string* node = taxonomy.Resolve(type_label);
  if (node == nullptr) return std::string(type_label);
  // A pruned label stands for its representative, so a root representative
  // is returned as is.
  if (taxonomy.IsRoot(*node)) return *node;
  for (std::size_t step = 0; step < depth; ++step) {
    const std::string* parent = taxonomy.FirstParent(*node);
    if (parent == nullptr) break;
    node = parent;
  }
  return *node;
}

inline ConceptualTriple BuildConceptual(const Entity& entity, const Taxonomy& taxonomy,
                                        std::size_t depth) {
  if (entity.type_label.empty()) throw Error(ErrorCode::kMissingType, entity.id);
  return ConceptualTriple{entity.title, entity.type_label,
                          ConceptOf(entity.type_label, taxonomy, depth)};
}

// First-parent depth of every node, roots at 1.
inline std::map<std::string, std::size_t, std::less<>> NodeDepths(const Taxonomy& taxonomy) {
  std::map<std::string, std::size_t, std::less<>> depth;
  for (const auto& start : taxonomy.nodes()) {
    if (depth.contains(start)) continue;
    std::vector<std::string_view> chain;
    std::string_view cur = start;
    std::size_t base = 0;
    while (true) {
      if (auto it = depth.find(cur); it != depth.end()) {
        base = it->second;
        break;
      }
      chain.push_back(cur);
      const std::string* parent = taxonomy.FirstParent(cur);
      if (parent == nullptr) break;
      cur = *parent;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      depth.emplace(std::string(*it), ++base);
    }
  }
  return depth;
}

// Collapses every node deeper than `max_depth` into its first-parent
// ancestor at exactly `max_depth`. Collapsed labels stay resolvable through
// aliases(); surviving nodes keep only parents that survive.
inline Taxonomy PruneTaxonomy(const Taxonomy& taxonomy, std::size_t max_depth) {
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 1");
  const auto depth = NodeDepths(taxonomy);
  auto representative = [&](const std::string& label) -> std::string {
    std::string cur = label;
    std::size_t d = depth.find(cur)->second;
    while (d > max_depth) {
      cur = *taxonomy.FirstParent(cur);
      --d;
    }
    return cur;
  };

  std::set<std::string, std::less<>> nodes;
  Taxonomy::ParentMap parents;
  Taxonomy::AliasMap aliases;
  for (const auto& n : taxonomy.nodes()) {
    if (depth.find(n)->second <= max_depth) {
      nodes.insert(n);
    } else {
      aliases.emplace(n, representative(n));
    }
  }
  for (const auto& [child, ps] : taxonomy.parents()) {
    if (!nodes.contains(child)) continue;
    std::vector<std::string> kept;
    for (const auto& p : ps) {
      if (nodes.contains(p)) kept.push_back(p);
    }
    if (!kept.empty()) parents.emplace(child, std::move(kept));
  }
  for (const auto& [label, target] : taxonomy.aliases()) {
    aliases.emplace(label, nodes.contains(target) ? target : representative(target));
  }
  return Taxonomy(std::move(nodes), std::move(parents), std::move(aliases));
}

}  // namespace kiwb
