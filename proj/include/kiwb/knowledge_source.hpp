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

// Injectable knowledge for each ablation setup: aligned neighbours of a
// linked entity, uniformly random triples, Gaussian noise vectors, and the
// per-mention quantity schedule.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kiwb/aligner.hpp"
#include "kiwb/error.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/rng.hpp"

namespace kiwb {

enum class InjectionKind { kAligned, kRandom, kConceptual, kNoise, kNoInjection };

constexpr std::string_view InjectionKindName(InjectionKind kind) {
  switch (kind) {
    case InjectionKind::kAligned:
      return "aligned";
    case InjectionKind::kRandom:
      return "random";
    case InjectionKind::kConceptual:
      return "conceptual";
    case InjectionKind::kNoise:
      return "noise";
    case InjectionKind::kNoInjection:
      return "none";
  }
  return "none";
}

inline std::optional<InjectionKind> ParseInjectionKind(std::string_view name) {
  for (auto kind : {InjectionKind::kAligned, InjectionKind::kRandom, InjectionKind::kConceptual,
                    InjectionKind::kNoise, InjectionKind::kNoInjection}) {
    if (InjectionKindName(kind) == name) return kind;
  }
  return std::nullopt;
}

struct InjectionVariant {
  InjectionKind kind = InjectionKind::kNoInjection;
  double level = 1.0;   // triples per mention, or a probability when < 1
  double sigma = 1.0;   // noise only
  std::size_t dim = 0;  // noise only

  void Validate() const {
    if (!std::isfinite(level) || level < 0) {
      throw Error(ErrorCode::kInvalidArgument, "level must be >= 0");
    }
    if (kind == InjectionKind::kNoise) {
      if (!(sigma > 0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::kInvalidArgument, "noise sigma must be > 0");
      }
      if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "noise dim must be >= 1");
    }
  }
};

inline std::vector<Triple> AlignedTriples(const Mention& mention, const KnowledgeGraph& kg,
                                          std::size_t count) {
  return Neighbors(kg, mention.entity_id, count);
}

// `count` triples drawn uniformly with replacement from the whole graph.
inline std::vector<Triple> RandomTriples(const KnowledgeGraph& kg, SeededRng& rng,
                                         std::size_t count) {
  std::vector<Triple> out;
  if (count == 0) return out;
  const auto& all = kg.triples();
  if (all.empty()) throw Error(ErrorCode::kEmptyGraph, "graph has no triples");
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(all[rng.Below(all.size())]);
  return out;
}

// i.i.d. N(0, sigma^2) samples via SeededRng::Gaussian (Marsaglia polar).
inline std::vector<double> NoiseVector(std::size_t dim, double sigma, SeededRng& rng) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "dim must be >= 1");
  std::vector<double> v(dim);
  for (auto& x : v) x = sigma * rng.Gaussian();
  return v;
}

// Below 1 the level is a Bernoulli probability; from 1 up it is rounded
// half-up to a fixed count. Draws from `rng` only in the Bernoulli case.
inline std::size_t TriplesPerMention(double level, SeededRng& rng) {
  if (!(level >= 0)) throw Error(ErrorCode::kInvalidArgument, "level must be >= 0");
  if (level < 1.0) {
    if (level == 0.0) return 0;
    return rng.Uniform01() < level ? 1 : 0;
  }
  return static_cast<std::size_t>(std::floor(level + 0.5));
}

}  // namespace kiwb
