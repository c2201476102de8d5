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

// Hidden-state probing and run diagnostics: per-layer cosine similarity of
// tracked positions across two dumps, prediction agreement counts, and the
// train/dev loss gap.
//
// Dump format (JSONL):
//   {"kind":"header","model":"m","num_layers":L,"dim":D,"pooling":"first"}
//   {"kind":"rec","id":"x1","layer":1,"pos":"cls","vec":[...]}
// "pooling" is optional. Positions are "cls", "mention:<i>" or "entity:<i>";
// layers run from 1 to L and every (id, pos) must cover all of them.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kiwb/error.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

struct HiddenStateDump {
  std::string model;
  std::size_t num_layers = 0;
  std::size_t dim = 0;
  std::string pooling;  // empty when unrecorded
  // id -> position -> layer (1-based) -> vector
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::vector<double>>>> records;
};

inline bool IsTrackedPosition(std::string_view pos) {
  if (pos == "cls") return true;
  std::string_view digits;
  if (pos.starts_with("mention:")) {
    digits = pos.substr(8);
  } else if (pos.starts_with("entity:")) {
    digits = pos.substr(7);
  } else {
    return false;
  }
  if (digits.empty()) return false;
  for (char c : digits) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

namespace internal {

// Parses as much of a dump as possible, appending one message per contract
// violation.
inline HiddenStateDump ParseDumpLenient(std::string_view content,
                                        std::vector<std::string>& violations) {
  HiddenStateDump dump;
  const auto lines = SplitLines(content);
  bool have_header = false;
  auto violate = [&](std::size_t line_no, const std::string& what) {
    violations.push_back("line " + std::to_string(line_no) + ": " + what);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (IsBlankOrComment(lines[i])) continue;
    auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (!j.is_object()) {
      violate(line_no, "not a JSON object");
      continue;
    }
    auto kind = j.find("kind");
    if (kind == j.end() || !kind->is_string()) {
      violate(line_no, "missing kind");
      continue;
    }
    if (*kind == "header") {
      if (have_header) {
        violate(line_no, "duplicate header");
        continue;
      }
      if (i != 0) violate(line_no, "header must be the first line");
      have_header = true;
      auto model = j.find("model");
      auto layers = j.find("num_layers");
      auto dim = j.find("dim");
      if (model == j.end() || !model->is_string())
        violate(line_no, "header model missing");
      else
        dump.model = model->get<std::string>();
      if (layers == j.end() || !layers->is_number_unsigned() || layers->get<std::size_t>() < 1) {
        violate(line_no, "header num_layers must be a positive integer");
      } else {
        dump.num_layers = layers->get<std::size_t>();
      }
      if (dim == j.end() || !dim->is_number_unsigned() || dim->get<std::size_t>() < 1) {
        violate(line_no, "header dim must be a positive integer");
      } else {
        dump.dim = dim->get<std::size_t>();
      }
      if (auto pooling = j.find("pooling"); pooling != j.end()) {
        if (!pooling->is_string() || (*pooling != "first" && *pooling != "mean")) {
          violate(line_no, "pooling must be \"first\" or \"mean\"");
        } else {
          dump.pooling = pooling->get<std::string>();
        }
      }
      continue;
    }
    if (*kind != "rec") {
      violate(line_no, "unknown kind");
      continue;
    }
    if (!have_header) violate(line_no, "record before header");
    auto id = j.find("id");
    auto layer = j.find("layer");
    auto pos = j.find("pos");
    auto vec = j.find("vec");
    if (id == j.end() || !id->is_string()) {
      violate(line_no, "record id missing");
      continue;
    }
    if (layer == j.end() || !layer->is_number_integer()) {
      violate(line_no, "record layer missing");
      continue;
    }
    const auto layer_value = layer->get<long long>();
    if (layer_value < 1 ||
        (dump.num_layers > 0 && static_cast<std::size_t>(layer_value) > dump.num_layers)) {
      violate(line_no, "layer " + std::to_string(layer_value) + " outside [1, num_layers]");
      continue;
    }
    if (pos == j.end() || !pos->is_string() ||
        !IsTrackedPosition(pos->get_ref<const std::string&>())) {
      violate(line_no, "pos must be cls, mention:<i> or entity:<i>");
      continue;
    }
    if (vec == j.end() || !vec->is_array()) {
      violate(line_no, "record vec missing");
      continue;
    }
    std::vector<double> values;
    bool numeric = true;
    for (const auto& x : *vec) {
      if (!x.is_number()) {
        numeric = false;
        break;
      }
      values.push_back(x.get<double>());
      if (!std::isfinite(values.back())) numeric = false;
    }
    if (!numeric) {
      violate(line_no, "vec entries must be finite numbers");
      continue;
    }
    if (dump.dim > 0 && values.size() != dump.dim) {
      violate(line_no, "vec length " + std::to_string(values.size()) + " != dim " +
                           std::to_string(dump.dim));
      continue;
    }
    auto& slot = dump.records[id->get<std::string>()][pos->get<std::string>()];
    if (!slot.emplace(static_cast<std::size_t>(layer_value), std::move(values)).second) {
      violate(line_no, "duplicate record");
    }
  }
  if (!have_header) violations.push_back("missing header");
  if (dump.num_layers > 0) {
    for (const auto& [id, positions] : dump.records) {
      for (const auto& [pos, layers] : positions) {
        if (layers.size() != dump.num_layers) {
          violations.push_back("id " + id + " pos " + pos + " covers " +
                               std::to_string(layers.size()) + " of " +
                               std::to_string(dump.num_layers) + " layers");
        }
      }
    }
  }
  return dump;
}

}  // namespace internal

// Empty result means the dump conforms.
inline std::vector<std::string> ValidateDump(std::string_view content) {
  std::vector<std::string> violations;
  internal::ParseDumpLenient(content, violations);
  return violations;
}

inline HiddenStateDump ParseDump(std::string_view content) {
  std::vector<std::string> violations;
  HiddenStateDump dump = internal::ParseDumpLenient(content, violations);
  if (!violations.empty()) throw Error(ErrorCode::kFormatError, violations.front());
  return dump;
}

inline HiddenStateDump LoadDump(const std::string& path) { return ParseDump(ReadFile(path)); }

inline std::string SerializeDump(const HiddenStateDump& dump) {
  nlohmann::ordered_json header;
  header["kind"] = "header";
  header["model"] = dump.model;
  header["num_layers"] = dump.num_layers;
  header["dim"] = dump.dim;
  if (!dump.pooling.empty()) header["pooling"] = dump.pooling;
  std::string out = header.dump() + "\n";
  for (const auto& [id, positions] : dump.records) {
    for (const auto& [pos, layers] : positions) {
      for (const auto& [layer, vec] : layers) {
        out += "{\"kind\":\"rec\",\"id\":" + nlohmann::json(id).dump() +
               ",\"layer\":" + std::to_string(layer) + ",\"pos\":" + nlohmann::json(pos).dump() +
               ",\"vec\":";
        AppendVector(out, vec);
        out += "}\n";
      }
    }
  }
  return out;
}

inline void CheckComparable(const HiddenStateDump& a, const HiddenStateDump& b) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kIncomparableDumps, why); };
  if (a.num_layers != b.num_layers) fail("num_layers differ");
  if (a.dim != b.dim) fail("dim differs");
  if (a.pooling != b.pooling) fail("pooling differs");
  if (a.records.size() != b.records.size()) fail("example id sets differ");
  for (auto ia = a.records.begin(), ib = b.records.begin(); ia != a.records.end(); ++ia, ++ib) {
    if (ia->first != ib->first) fail("example id sets differ");
    if (ia->second.size() != ib->second.size()) fail("position schema differs for " + ia->first);
    for (auto pa = ia->second.begin(), pb = ib->second.begin(); pa != ia->second.end();
         ++pa, ++pb) {
      if (pa->first != pb->first) fail("position schema differs for " + ia->first);
    }
  }
}

// |cos(u, v)|, with 0 when either vector is zero.
inline double AbsCosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  if (nu == 0 || nv == 0) return 0.0;
  return std::abs(dot) / (std::sqrt(nu) * std::sqrt(nv));
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

// Per layer (index 0 is layer 1): mean over example ids of |cos(a, b)| at
// `position`, summed in id order.
inline std::vector<double> LayerCosine(const HiddenStateDump& a, const HiddenStateDump& b,
                                       std::string_view position) {
  CheckComparable(a, b);
  std::vector<CompensatedSum> sums(a.num_layers);
  std::size_t samples = 0;
  for (const auto& [id, positions] : a.records) {
    auto pa = positions.find(std::string(position));
    if (pa == positions.end()) continue;
    const auto& pb = b.records.at(id).at(pa->first);
    ++samples;
    for (std::size_t layer = 1; layer <= a.num_layers; ++layer) {
      sums[layer - 1].Add(AbsCosine(pa->second.at(layer), pb.at(layer)));
    }
  }
  if (samples == 0) throw Error(ErrorCode::kUnknownPosition, std::string(position));
  std::vector<double> out;
  out.reserve(sums.size());
  for (const auto& s : sums) out.push_back(s.value() / static_cast<double>(samples));
  return out;
}

// Tracked positions present in the dump, sorted.
inline std::vector<std::string> DumpPositions(const HiddenStateDump& dump) {
  std::set<std::string> seen;
  for (const auto& [id, positions] : dump.records) {
    for (const auto& [pos, layers] : positions) seen.insert(pos);
  }
  return {seen.begin(), seen.end()};
}

using Predictions = std::map<std::string, std::string, std::less<>>;

struct Agreement {
  std::size_t same = 0;
  std::size_t different = 0;

  double fraction() const {
    const std::size_t n = same + different;
    return n == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(n);
  }
  friend bool operator==(const Agreement&, const Agreement&) = default;
};

inline Agreement PredictionAgreement(const Predictions& a, const Predictions& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kIdSetMismatch, "id counts differ");
  Agreement out;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) throw Error(ErrorCode::kIdSetMismatch, ia->first);
    (ia->second == ib->second ? out.same : out.different) += 1;
  }
  return out;
}

// CSV with header `id,prediction`.
inline Predictions ParsePredictionsCsv(std::string_view content) {
  const auto lines = SplitLines(content);
  if (lines.empty() || lines[0] != "id,prediction") {
    throw Error(ErrorCode::kFormatError, "predictions CSV must start with id,prediction");
  }
  Predictions out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (IsBlankOrComment(lines[i])) continue;
    const auto comma = lines[i].find(',');
    if (comma == std::string_view::npos || comma == 0) {
      throw Error(ErrorCode::kMalformedLine, std::to_string(i + 1));
    }
    std::string id(lines[i].substr(0, comma));
    if (!out.emplace(id, std::string(lines[i].substr(comma + 1))).second) {
      throw Error(ErrorCode::kMalformedLine, "duplicate id " + id);
    }
  }
  return out;
}

struct LossPoint {
  double train_loss = 0;
  double dev_loss = 0;
};

using LossCurve = std::vector<LossPoint>;

// CSV with header `epoch,train_loss,dev_loss`; rows in epoch order.
inline LossCurve ParseLossCurveCsv(std::string_view content) {
  const auto lines = SplitLines(content);
  if (lines.empty() || lines[0] != "epoch,train_loss,dev_loss") {
    throw Error(ErrorCode::kFormatError,
                "loss curve CSV must start with epoch,train_loss,dev_loss");
  }
  LossCurve curve;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (IsBlankOrComment(lines[i])) continue;
    double values[3];
    std::string_view rest = lines[i];
    for (int k = 0; k < 3; ++k) {
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      auto res = std::from_chars(field.data(), field.data() + field.size(), values[k]);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size() ||
          !std::isfinite(values[k]) || (k < 2) == (comma == std::string_view::npos)) {
        throw Error(ErrorCode::kMalformedLine, std::to_string(i + 1));
      }
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    curve.push_back({values[1], values[2]});
  }
  if (curve.empty()) throw Error(ErrorCode::kFormatError, "loss curve has no epochs");
  return curve;
}

struct LossGapReport {
  double final_gap = 0;
  std::vector<double> series;  // |dev - train| per epoch
};

inline LossGapReport LossGap(const LossCurve& curve) {
  if (curve.empty()) throw Error(ErrorCode::kInvalidArgument, "loss curve has no epochs");
  LossGapReport out;
  for (const auto& p : curve) out.series.push_back(std::abs(p.dev_loss - p.train_loss));
  out.final_gap = out.series.back();
  return out;
}

}  // namespace kiwb
