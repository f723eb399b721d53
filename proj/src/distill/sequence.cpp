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

#include "ppcf/distill/sequence.hpp"

#include <algorithm>

#include "ppcf/core/error.hpp"

namespace ppcf::distill {

using model::Vocabulary;

TokenizedPair TokenizePair(const Vocabulary& vocab, std::string_view question,
                           std::string_view target, const SequenceLimits& limits,
                           std::size_t max_seq_len, bool append_eos) {
  auto q = vocab.Encode(question);
  auto t = vocab.Encode(target);
  if (t.empty() && !append_eos) ThrowData("sequence: empty target");
  TokenizedPair out;
  if (q.size() > limits.max_question_len) {
    q.resize(limits.max_question_len);
    out.truncated = true;
  }
  if (t.size() > limits.max_target_len) {
    t.resize(limits.max_target_len);
    out.truncated = true;
  }
  // Fit into the context window: trim the target first, then the question.
  const std::size_t fixed = 2 + (append_eos ? 1 : 0);
  while (fixed + q.size() + t.size() > max_seq_len + 1 && t.size() > 1) {
    t.pop_back();
    out.truncated = true;
  }
  while (fixed + q.size() + t.size() > max_seq_len + 1 && !q.empty()) {
    q.pop_back();
    out.truncated = true;
  }
  if (fixed + q.size() + t.size() > max_seq_len + 1) ThrowData("sequence: context window too small");
  out.tokens.push_back(Vocabulary::kBos);
  out.tokens.insert(out.tokens.end(), q.begin(), q.end());
  out.tokens.push_back(Vocabulary::kSep);
  out.target_begin = out.tokens.size();
  out.tokens.insert(out.tokens.end(), t.begin(), t.end());
  if (append_eos) out.tokens.push_back(Vocabulary::kEos);
  return out;
}

model::SequenceExample ToExample(const TokenizedPair& pair) {
  model::SequenceExample ex;
  const std::size_t n = pair.tokens.size() - 1;
  ex.inputs.assign(pair.tokens.begin(), pair.tokens.begin() + n);
  ex.targets.assign(pair.tokens.begin() + 1, pair.tokens.end());
  ex.mask.resize(n);
  for (std::size_t p = 0; p < n; ++p) ex.mask[p] = (p + 1 >= pair.target_begin) ? 1 : 0;
  return ex;
}

}  // namespace ppcf::distill
