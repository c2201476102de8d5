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

#include "kiwb/aligner.hpp"
#include "kiwb/analysis.hpp"
#include "kiwb/concept_builder.hpp"
#include "kiwb/embeddings.hpp"
#include "kiwb/error.hpp"
#include "kiwb/harness.hpp"
#include "kiwb/injector.hpp"
#include "kiwb/kg_store.hpp"
#include "kiwb/knowledge_source.hpp"
#include "kiwb/rng.hpp"
#include "kiwb/text.hpp"
