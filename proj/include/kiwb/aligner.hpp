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

// Dictionary entity linking over a sealed KnowledgeGraph.
//
// Matching is leftmost-longest over the normalized alias index. A span may
// not begin or end inside an alphanumeric run, and may not begin or end on
// whitespace. Ambiguous surfaces link to the smallest entity id.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kiwb/error.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/text.hpp"

namespace kiwb {

struct Mention {
  std::string surface;
  std::size_t start = 0;  // byte offset, inclusive
  std::size_t end = 0;    // byte offset, exclusive
  std::string entity_id;

  friend bool operator==(const Mention&, const Mention&) = default;
};

namespace internal {

struct DecodedChar {
  std::size_t offset;
  char32_t value;
};

inline std::vector<DecodedChar> DecodeAll(std::string_view text) {
  std::vector<DecodedChar> chars;
  chars.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    auto cp = DecodeUtf8(text, i);
    if (!cp) throw Error(ErrorCode::kInvalidEncoding, "byte " + std::to_string(i));
    chars.push_back({i, cp->value});
    i += cp->length;
  }
  return chars;
}

// Position k (a character index in [0, n]) is a boundary unless it sits
// strictly inside a run of word characters.
inline bool IsBoundary(const std::vector<DecodedChar>& chars, std::size_t k) {
  if (k == 0 || k == chars.size()) return true;
  return !IsWordChar(chars[k - 1].value) || !IsWordChar(chars[k].value);
}

}  // namespace internal

inline std::vector<Mention> Align(std::string_view text, const KnowledgeGraph& kg) {
  using internal::IsBoundary;
  std::vector<Mention> mentions;
  const auto chars = internal::DecodeAll(text);
  const std::size_t n = chars.size();
  auto byte_at = [&](std::size_t k) { return k == n ? text.size() : chars[k].offset; };

  std::size_t k = 0;
  std::string key;
  while (k < n) {
    if (IsSpace(chars[k].value) || !IsBoundary(chars, k)) {
      ++k;
      continue;
    }
    key.clear();
    bool pending_space = false;
    std::size_t best_end = 0;
    const std::vector<std::string>* best_ids = nullptr;
    for (std::size_t m = k; m < n; ++m) {
      const char32_t cp = chars[m].value;
      if (IsSpace(cp)) {
        if (!pending_space) {
          pending_space = true;
          key.push_back(' ');
          if (!kg.HasAliasWithPrefix(key)) break;
        }
        continue;
      }
      pending_space = false;
      AppendUtf8(key, FoldCase(cp));
      if (IsBoundary(chars, m + 1)) {
        if (const auto* ids = kg.Candidates(key)) {
          best_end = m + 1;
          best_ids = ids;
        }
      }
      if (!kg.HasAliasWithPrefix(key)) break;
    }
    if (best_ids == nullptr) {
      ++k;
      continue;
    }
    const std::size_t start = byte_at(k);
    const std::size_t end = byte_at(best_end);
    mentions.push_back(
        Mention{std::string(text.substr(start, end - start)), start, end, best_ids->front()});
    k = best_end;
  }
  return mentions;
}

}  // namespace kiwb
