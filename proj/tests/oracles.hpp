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

// Independent reference implementations shared by the unit suites and the
// acceptance binary.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "kiwb/kiwb.hpp"

namespace kiwb::testing {

inline std::vector<Mention> AlignWithAliases(
    const std::string& text, const std::vector<std::pair<std::string, std::string>>& aliases) {
  EntityMap entities;
  for (const auto& [id, surface] : aliases) {
    auto& e = entities[id];
    if (e.id.empty()) {
      e = Entity{id, surface, "", {}};
    } else {
      e.aliases.push_back(surface);
    }
  }
  return Align(text, Seal(std::move(entities), {}));
}

// Brute-force reference over the restricted fuzz alphabet below: enumerate
// every span on character boundaries, keep those that normalize to an alias
// and respect word boundaries, then pick leftmost-longest greedily.
namespace oracle {

inline bool IsLead(unsigned char b) { return (b & 0xC0) != 0x80; }

inline std::vector<std::size_t> Boundaries(const std::string& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (IsLead(static_cast<unsigned char>(s[i]))) out.push_back(i);
  }
  out.push_back(s.size());
  return out;
}

// Word characters in the fuzz alphabet: ASCII letters/digits and "é"/"É".
inline bool IsWordAt(const std::string& s, std::size_t byte) {
  const unsigned char c = static_cast<unsigned char>(s[byte]);
  return std::isalnum(c) || c == 0xC3;
}

inline bool IsSpaceAt(const std::string& s, std::size_t byte) {
  return s[byte] == ' ' || s[byte] == '\t';
}

inline std::string Normalize(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ' ' || s[i] == '\t') {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    if (static_cast<unsigned char>(s[i]) == 0xC3 && i + 1 < s.size() &&
        static_cast<unsigned char>(s[i + 1]) == 0x89) {
      out += "\xC3\xA9";
      ++i;
      continue;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  }
  return out;
}

inline std::vector<Mention> Align(const std::string& text,
                                  const std::vector<std::pair<std::string, std::string>>& aliases) {
  std::map<std::string, std::string> best_id;
  for (const auto& [id, a] : aliases) {
    const std::string key = Normalize(a);
    if (key.empty()) continue;
    auto it = best_id.find(key);
    if (it == best_id.end() || id < it->second) best_id[key] = id;
  }
  const auto b = Boundaries(text);
  auto boundary_ok = [&](std::size_t k) {  // k indexes b
    if (k == 0 || k + 1 == b.size()) return true;
    return !IsWordAt(text, b[k - 1]) || !IsWordAt(text, b[k]);
  };
  struct Cand {
    std::size_t start, end;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      if (IsSpaceAt(text, b[i]) || IsSpaceAt(text, b[j - 1])) continue;
      if (!boundary_ok(i) || !boundary_ok(j)) continue;
      if (best_id.count(Normalize(text.substr(b[i], b[j] - b[i])))) cands.push_back({b[i], b[j]});
    }
  }
  std::vector<Mention> out;
  std::size_t pos = 0;
  while (true) {
    const Cand* pick = nullptr;
    for (const auto& c : cands) {
      if (c.start < pos) continue;
      if (!pick || c.start < pick->start || (c.start == pick->start && c.end > pick->end)) {
        pick = &c;
      }
    }
    if (!pick) break;
    const std::string surface = text.substr(pick->start, pick->end - pick->start);
    out.push_back({surface, pick->start, pick->end, best_id.at(Normalize(surface))});
    pos = pick->end;
  }
  return out;
}

}  // namespace oracle

inline std::string RandomString(std::mt19937& gen, std::size_t max_chars) {
  static const std::vector<std::string> alphabet = {"a",  "b", "A", "B",        " ",        " ",
                                                    "\t", ",", "-", "\xC3\xA9", "\xC3\x89", "1"};
  std::uniform_int_distribution<std::size_t> len(0, max_chars), pick(0, alphabet.size() - 1);
  std::string s;
  const std::size_t n = len(gen);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(gen)];
  return s;
}

inline std::vector<std::pair<std::string, std::string>> RandomAliases(std::mt19937& gen) {
  std::uniform_int_distribution<int> count(1, 16), id(0, 5);
  std::vector<std::pair<std::string, std::string>> aliases;
  const int n = count(gen);
  for (int i = 0; i < n; ++i) {
    std::string a = RandomString(gen, 4);
    if (NormalizeSurface(a).empty()) a = "ab";
    aliases.emplace_back("E" + std::to_string(id(gen)), a);
  }
  return aliases;
}

// TransE toy graph. Two chains over 12 entities: r1 links e_i -> e_{i+1} inside each half,
// r2 links e_i -> e_{i+6}.
inline std::vector<Triple> TransEToyGraph() {
  std::vector<Triple> triples;
  for (int i = 0; i < 12; ++i) {
    if (i % 6 != 5) triples.push_back({"e" + std::to_string(i), "r1", "e" + std::to_string(i + 1)});
  }
  for (int i = 0; i < 6; ++i) {
    triples.push_back({"e" + std::to_string(i), "r2", "e" + std::to_string(i + 6)});
  }
  return triples;
}

// Central finite differences over every coordinate, compared norm-wise.
inline double GradientRelativeError(transe::Params p, const transe::IndexedTriple& pos,
                                    const transe::IndexedTriple& neg, double margin) {
  transe::Params analytic = p;
  std::fill(analytic.entities.begin(), analytic.entities.end(), 0.0);
  std::fill(analytic.relations.begin(), analytic.relations.end(), 0.0);
  transe::AccumulatePairGradient(p, pos, neg, margin, analytic);

  constexpr double kStep = 1e-5;
  double diff_sq = 0, norm_a = 0, norm_n = 0;
  auto probe = [&](std::vector<double>& values, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + kStep;
      const double up = transe::PairLoss(p, pos, neg, margin);
      values[i] = saved - kStep;
      const double down = transe::PairLoss(p, pos, neg, margin);
      values[i] = saved;
      const double numeric = (up - down) / (2 * kStep);
      diff_sq += (numeric - grad[i]) * (numeric - grad[i]);
      norm_a += grad[i] * grad[i];
      norm_n += numeric * numeric;
    }
  };
  probe(p.entities, analytic.entities);
  probe(p.relations, analytic.relations);
  const double scale = std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-12});
  return std::sqrt(diff_sq) / scale;
}

// Random transe parameters and a genuine corruption (neg != pos), away from
// the hinge kink and from zero residuals, where the loss is differentiable.
struct GradientPoint {
  transe::Params params;
  transe::IndexedTriple pos, neg;
};

inline GradientPoint RandomGradientPoint(std::mt19937& gen, double margin) {
  std::uniform_real_distribution<double> value(-1, 1);
  std::uniform_int_distribution<std::size_t> ent(0, 5), rel(0, 1);
  while (true) {
    GradientPoint g;
    g.params.dim = 5;
    g.params.entities.resize(6 * g.params.dim);
    g.params.relations.resize(2 * g.params.dim);
    for (auto& x : g.params.entities) x = value(gen);
    for (auto& x : g.params.relations) x = value(gen);
    g.pos = {ent(gen), rel(gen), ent(gen)};
    g.neg = g.pos;
    (gen() % 2 ? g.neg.head : g.neg.tail) = ent(gen);
    if (g.neg.head == g.pos.head && g.neg.tail == g.pos.tail) continue;
    const double dp = transe::Distance(g.params, g.pos), dn = transe::Distance(g.params, g.neg);
    if (std::abs(margin + dp - dn) >= 1e-3 && dp >= 1e-3 && dn >= 1e-3) return g;
  }
}

// Mean over triples of the score, and over every tail corruption that is not
// itself a true triple.
inline std::pair<double, double> TrueAndCorruptedScores(const EmbeddingTable& table,
                                                        const std::vector<Triple>& triples) {
  double true_sum = 0, corrupt_sum = 0;
  std::size_t corrupt_n = 0;
  for (const auto& t : triples) {
    true_sum += TransEScore(table, t.head, t.relation, t.tail);
    for (const auto& [tail, v] : table.entity_vectors) {
      if (std::find(triples.begin(), triples.end(), Triple{t.head, t.relation, tail}) !=
          triples.end()) {
        continue;
      }
      corrupt_sum += TransEScore(table, t.head, t.relation, tail);
      ++corrupt_n;
    }
  }
  return {true_sum / static_cast<double>(triples.size()),
          corrupt_sum / static_cast<double>(corrupt_n)};
}

// Five per-seed values with exactly the given mean and sample deviation.
inline std::vector<RunResult> ReconstructRuns(const std::string& setup, double mean, double sd) {
  // z has mean 0 and sample deviation 1.
  const double z[] = {-2, -1, 0, 1, 2};
  std::vector<RunResult> out;
  for (int i = 0; i < 5; ++i) {
    out.push_back(
        {setup, static_cast<std::uint64_t>(i + 1), "F1", mean + sd * z[i] / std::sqrt(2.5)});
  }
  return out;
}

}  // namespace kiwb::testing
