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

// Minimal TransE (Bordes et al.) trained by sequential SGD on the margin
// ranking loss
//
//   L = sum max(0, margin + d(h + r, t) - d(h' + r, t'))
//
// with d the L2 distance. Each positive is paired with
// `negatives_per_positive` corruptions that replace the head or the tail
// (seeded coin) by a uniformly drawn entity. Entity vectors are projected
// back onto the unit sphere after every epoch; relation vectors are not.
// Training is single-threaded and fully determined by (triples, config).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "kiwb/error.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/rng.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

struct TransEConfig {
  std::size_t dim = 50;
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 0;

  void Validate() const {
    if (dim < 1 || !(margin > 0) || !(learning_rate > 0) || epochs < 1 ||
        negatives_per_positive < 1) {
      throw Error(ErrorCode::kInvalidArgument, "TransE hyperparameters must be positive");
    }
  }
};

using VectorMap = std::map<std::string, std::vector<double>, std::less<>>;

struct EmbeddingTable {
  std::size_t dim = 0;
  VectorMap entity_vectors;
  VectorMap relation_vectors;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

namespace transe {

struct IndexedTriple {
  std::size_t head;
  std::size_t relation;
  std::size_t tail;
};

// Flat row-major parameter storage used by the trainer and by gradient
// checks.
struct Params {
  std::size_t dim = 0;
  std::vector<double> entities;
  std::vector<double> relations;

  double* entity(std::size_t i) { return entities.data() + i * dim; }
  const double* entity(std::size_t i) const { return entities.data() + i * dim; }
  double* relation(std::size_t i) { return relations.data() + i * dim; }
  const double* relation(std::size_t i) const { return relations.data() + i * dim; }
};

// Writes h + r - t into `diff` and returns its L2 norm.
inline double Residual(const Params& p, const IndexedTriple& t, std::vector<double>& diff) {
  diff.resize(p.dim);
  const double* h = p.entity(t.head);
  const double* r = p.relation(t.relation);
  const double* tl = p.entity(t.tail);
  double sq = 0;
  for (std::size_t k = 0; k < p.dim; ++k) {
    diff[k] = h[k] + r[k] - tl[k];
    sq += diff[k] * diff[k];
  }
  return std::sqrt(sq);
}

inline double Distance(const Params& p, const IndexedTriple& t) {
  std::vector<double> diff;
  return Residual(p, t, diff);
}

inline double PairLoss(const Params& p, const IndexedTriple& pos, const IndexedTriple& neg,
                       double margin) {
  return std::max(0.0, margin + Distance(p, pos) - Distance(p, neg));
}

// Adds d PairLoss / d params into `grad` (same shape as `p`). The gradient
// of a zero residual is taken as zero.
inline void AccumulatePairGradient(const Params& p, const IndexedTriple& pos,
                                   const IndexedTriple& neg, double margin, Params& grad) {
  std::vector<double> dpos, dneg;
  const double npos = Residual(p, pos, dpos);
  const double nneg = Residual(p, neg, dneg);
  if (margin + npos - nneg <= 0) return;
  auto add = [&](const IndexedTriple& t, const std::vector<double>& diff, double norm,
                 double sign) {
    if (norm == 0) return;
    double* gh = grad.entity(t.head);
    double* gr = grad.relation(t.relation);
    double* gt = grad.entity(t.tail);
    for (std::size_t k = 0; k < p.dim; ++k) {
      const double u = sign * diff[k] / norm;
      gh[k] += u;
      gr[k] += u;
      gt[k] -= u;
    }
  };
  add(pos, dpos, npos, 1.0);
  add(neg, dneg, nneg, -1.0);
}

inline void NormalizeRows(std::vector<double>& data, std::size_t dim) {
  for (std::size_t off = 0; off < data.size(); off += dim) {
    double sq = 0;
    for (std::size_t k = 0; k < dim; ++k) sq += data[off + k] * data[off + k];
    const double norm = std::sqrt(sq);
    if (norm == 0) continue;
    for (std::size_t k = 0; k < dim; ++k) data[off + k] /= norm;
  }
}

}  // namespace transe

struct TransEHistory {
  std::vector<double> epoch_loss;
};

inline EmbeddingTable TrainTransE(const std::vector<Triple>& triples, const TransEConfig& config,
                                  TransEHistory* history = nullptr) {
  using transe::IndexedTriple;
  config.Validate();
  if (triples.empty()) throw Error(ErrorCode::kEmptyInput, "no triples to train on");

  std::vector<std::string> entity_keys, relation_keys;
  std::unordered_map<std::string, std::size_t> entity_ix, relation_ix;
  auto intern = [](std::unordered_map<std::string, std::size_t>& ix, std::vector<std::string>& keys,
                   const std::string& key) {
    auto [it, inserted] = ix.emplace(key, keys.size());
    if (inserted) keys.push_back(key);
    return it->second;
  };
  std::vector<IndexedTriple> data;
  data.reserve(triples.size());
  for (const auto& t : triples) {
    const std::size_t h = intern(entity_ix, entity_keys, t.head);
    const std::size_t r = intern(relation_ix, relation_keys, t.relation);
    const std::size_t tl = intern(entity_ix, entity_keys, t.tail);
    data.push_back({h, r, tl});
  }

  const std::size_t dim = config.dim;
  SeededRng rng(config.seed);
  transe::Params p;
  p.dim = dim;
  p.entities.resize(entity_keys.size() * dim);
  p.relations.resize(relation_keys.size() * dim);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (auto& x : p.entities) x = rng.Uniform(-bound, bound);
  for (auto& x : p.relations) x = rng.Uniform(-bound, bound);
  transe::NormalizeRows(p.entities, dim);

  const std::size_t num_entities = entity_keys.size();
  std::vector<std::size_t> order(data.size());
  std::vector<double> dpos, dneg;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Below(i)]);
    }
    double epoch_loss = 0;
    for (std::size_t idx : order) {
      const IndexedTriple& pos = data[idx];
      for (std::size_t n = 0; n < config.negatives_per_positive; ++n) {
        IndexedTriple neg = pos;
        const bool corrupt_head = rng.Below(2) == 0;
        const std::size_t replacement = rng.Below(num_entities);
        (corrupt_head ? neg.head : neg.tail) = replacement;

        const double npos = transe::Residual(p, pos, dpos);
        const double nneg = transe::Residual(p, neg, dneg);
        const double loss = config.margin + npos - nneg;
        if (loss <= 0) continue;
        epoch_loss += loss;
        // Both residual directions are fixed before any parameter moves.
        const double lr = config.learning_rate;
        for (std::size_t k = 0; k < dim; ++k) {
          const double up = npos > 0 ? dpos[k] / npos : 0.0;
          const double un = nneg > 0 ? dneg[k] / nneg : 0.0;
          p.entity(pos.head)[k] -= lr * up;
          p.relation(pos.relation)[k] -= lr * up;
          p.entity(pos.tail)[k] += lr * up;
          p.entity(neg.head)[k] += lr * un;
          p.relation(neg.relation)[k] += lr * un;
          p.entity(neg.tail)[k] -= lr * un;
        }
      }
    }
    transe::NormalizeRows(p.entities, dim);
    if (history) history->epoch_loss.push_back(epoch_loss);
  }

  EmbeddingTable table;
  table.dim = dim;
  for (std::size_t i = 0; i < entity_keys.size(); ++i) {
    table.entity_vectors.emplace(entity_keys[i],
                                 std::vector<double>(p.entity(i), p.entity(i) + dim));
  }
  for (std::size_t i = 0; i < relation_keys.size(); ++i) {
    table.relation_vectors.emplace(relation_keys[i],
                                   std::vector<double>(p.relation(i), p.relation(i) + dim));
  }
  return table;
}

inline const std::vector<double>& LookupEntityVector(const EmbeddingTable& table,
                                                     std::string_view id) {
  auto it = table.entity_vectors.find(id);
  if (it == table.entity_vectors.end()) throw Error(ErrorCode::kNotFound, std::string(id));
  return it->second;
}

inline const std::vector<double>& LookupRelationVector(const EmbeddingTable& table,
                                                       std::string_view label) {
  auto it = table.relation_vectors.find(label);
  if (it == table.relation_vectors.end()) {
    throw Error(ErrorCode::kNotFound, std::string(label));
  }
  return it->second;
}

// ||h + r - t||_2
inline double TransEScore(const EmbeddingTable& table, std::string_view h, std::string_view r,
                          std::string_view t) {
  const auto& hv = LookupEntityVector(table, h);
  const auto& rv = LookupRelationVector(table, r);
  const auto& tv = LookupEntityVector(table, t);
  double sq = 0;
  for (std::size_t k = 0; k < table.dim; ++k) {
    const double x = hv[k] + rv[k] - tv[k];
    sq += x * x;
  }
  return std::sqrt(sq);
}

// JSONL, entities first then relations, each in key order:
//   {"kind":"entity","key":"E1","vec":[0.1,-0.2]}
inline std::string SerializeEmbeddingTable(const EmbeddingTable& table) {
  std::string out;
  auto emit = [&](std::string_view kind, const VectorMap& vectors) {
    for (const auto& [key, vec] : vectors) {
      out += "{\"kind\":\"";
      out += kind;
      out += "\",\"key\":";
      out += nlohmann::json(key).dump();
      out += ",\"vec\":";
      AppendVector(out, vec);
      out += "}\n";
    }
  };
  emit("entity", table.entity_vectors);
  emit("relation", table.relation_vectors);
  return out;
}

inline EmbeddingTable ParseEmbeddingTable(std::string_view content) {
  EmbeddingTable table;
  const auto lines = SplitLines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (IsBlankOrComment(lines[i])) continue;
    const std::string line_no = std::to_string(i + 1);
    auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string() || !j.contains("key") ||
        !j["key"].is_string() || !j.contains("vec") || !j["vec"].is_array()) {
      throw Error(ErrorCode::kMalformedLine, line_no);
    }
    std::vector<double> vec;
    for (const auto& x : j["vec"]) {
      if (!x.is_number()) throw Error(ErrorCode::kMalformedLine, line_no);
      vec.push_back(x.get<double>());
    }
    if (table.dim == 0) table.dim = vec.size();
    if (vec.empty() || vec.size() != table.dim) throw Error(ErrorCode::kMalformedLine, line_no);
    const std::string kind = j["kind"].get<std::string>();
    if (kind != "entity" && kind != "relation") throw Error(ErrorCode::kMalformedLine, line_no);
    auto& target = kind == "entity" ? table.entity_vectors : table.relation_vectors;
    target[j["key"].get<std::string>()] = std::move(vec);
  }
  return table;
}

}  // namespace kiwb
