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

// Server-side synthetic data generation:
//   1. question generation from a perturbed record,
//   2. answer generation, accepted only if every vote names the same letter,
//   3. rationale generation for the accepted answer.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/records.hpp"
#include "ppcf/core/rng.hpp"
#include "ppcf/synth/backend.hpp"
#include "ppcf/synth/parse.hpp"

namespace ppcf::synth {

struct SynthesisOptions {
  std::size_t ratio = 8;
  std::size_t votes = 3;
  // 0 means 4 x target.
  std::size_t max_attempts = 0;
  double question_temperature = 0.7;
  double answer_temperature = 0.7;
  double rationale_temperature = 0.0;
  // Attempts dispatched concurrently. Output does not depend on it.
  std::size_t max_in_flight = 1;

  void Validate() const;
};

void to_json(nlohmann::json& j, const SynthesisOptions& o);

struct GenerationReport {
  std::size_t requested = 0;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  std::size_t rejected_disagreement = 0;
  std::size_t rejected_malformed = 0;
  std::size_t rationale_without_sentinel = 0;
  bool cap_reached = false;
};

nlohmann::json ToJson(const GenerationReport& r);

enum class AttemptOutcome { kAccepted, kDisagreement, kMalformed };

struct AttemptResult {
  AttemptOutcome outcome = AttemptOutcome::kMalformed;
  std::string reason;               // for rejections
  std::optional<SyntheticRecord> record;  // when accepted
  bool rationale_had_sentinel = true;
};

// Individual steps. Each returns nullopt for a malformed reply.
std::optional<GeneratedQuestion> GenerateQuestion(LLMBackend& backend,
                                                  const PerturbedRecord& perturbed,
                                                  std::uint64_t attempt,
                                                  const SynthesisOptions& options = {});

struct AnswerVotes {
  std::vector<std::optional<char>> letters;  // one per vote, nullopt if malformed
  bool malformed = false;                    // some vote unparsable or out of range
  bool unanimous = false;
  char answer = 0;
};

AnswerVotes GenerateAnswer(LLMBackend& backend, const GeneratedQuestion& question,
                           std::uint64_t attempt, const SynthesisOptions& options = {});

std::optional<ParsedRationale> GenerateRationale(LLMBackend& backend,
                                                 const GeneratedQuestion& question,
                                                 char answer, std::uint64_t attempt,
                                                 const SynthesisOptions& options = {});

// Full three-step attempt on one perturbed record.
AttemptResult RunAttempt(LLMBackend& backend, const PerturbedRecord& source,
                         std::uint64_t attempt, const SynthesisOptions& options);

struct SynthesisResult {
  std::vector<SyntheticRecord> records;
  GenerationReport report;
};

// Targets ratio x |D_p| accepted records. Sources are visited in passes, each
// pass a fresh shuffle drawn from `rng`, until the target or the attempt cap
// is reached. When the cap is hit the partial result is returned with
// report.cap_reached set.
SynthesisResult Synthesize(LLMBackend& backend, const std::vector<PerturbedRecord>& dp,
                           const SynthesisOptions& options, Rng& rng);

}  // namespace ppcf::synth
