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

// Deterministic offline backend. It answers the three prompt templates from a
// ToyWorld's ground truth, so the whole pipeline runs without a network.
// Every reply is a pure function of (seed, prompt, call_id).

#include <cstdint>
#include <set>
#include <string>

#include "ppcf/eval/toy_task.hpp"
#include "ppcf/synth/backend.hpp"

namespace ppcf::synth {

struct StubOptions {
  std::uint64_t seed = 1;
  // Attempts (see MakeCallId) whose answer votes are scripted to disagree:
  // the first vote names a different letter than the others.
  std::set<std::uint64_t> disagree_attempts;
  // Additionally disagree on this fraction of questions, chosen by a hash
  // of (seed, question).
  double disagree_rate = 0.0;
};

class StubBackend final : public LLMBackend {
 public:
  StubBackend(const eval::ToyTaskSpec& world, StubOptions options);

  std::string kind() const override { return "stub"; }
  std::string Complete(const ChatRequest& request) override;

  const StubOptions& options() const { return options_; }

 private:
  std::string QuestionReply(const std::string& prompt, std::uint64_t call_id) const;
  std::string AnswerReply(const std::string& prompt, std::uint64_t call_id) const;
  std::string RationaleReply(const std::string& prompt) const;

  eval::ToyWorld world_;
  StubOptions options_;
};

}  // namespace ppcf::synth
