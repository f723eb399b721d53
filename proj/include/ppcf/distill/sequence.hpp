// Copyright 2026 The ppcf Authors
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

#include <cstddef>
#include <string_view>

#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::distill {

struct SequenceLimits {
  std::size_t max_question_len = 64;
  std::size_t max_target_len = 128;
};

// Token layout shared by training, scoring and BI estimation:
//   <bos> question... <sep> target... [<eos>]
struct TokenizedPair {
  std::vector<model::TokenId> tokens;
  std::size_t target_begin = 0;  // index of the first target token
  bool truncated = false;
};

TokenizedPair TokenizePair(const model::Vocabulary& vocab, std::string_view question,
                           std::string_view target, const SequenceLimits& limits,
                           std::size_t max_seq_len, bool append_eos);

// Shifted teacher-forcing example; the mask covers target tokens (and the
// closing <eos> when present) only.
model::SequenceExample ToExample(const TokenizedPair& pair);

}  // namespace ppcf::distill
