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

#include "ppcf/synth/synthesize.hpp"

#include <cstdio>
#include <future>
#include <numeric>

#include "ppcf/core/error.hpp"
#include "ppcf/synth/templates.hpp"

namespace ppcf::synth {
namespace {

constexpr const char* kSystemPrompt = "You are a helpful assistant.";

std::string SyntheticId(std::uint64_t attempt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "syn-%07llu", static_cast<unsigned long long>(attempt));
  return buf;
}

}  // namespace

void SynthesisOptions::Validate() const {
  if (ratio < 1) ThrowUsage("synth: ratio must be a positive integer");
  if (votes < 1 || votes > kMaxVotes) {
    ThrowUsage("synth: votes must be in [1, " + std::to_string(kMaxVotes) + "]");
  }
  if (max_in_flight < 1) ThrowUsage("synth: max_in_flight must be >= 1");
}

void to_json(nlohmann::json& j, const SynthesisOptions& o) {
  j = {{"ratio", o.ratio},
       {"votes", o.votes},
       {"max_attempts", o.max_attempts},
       {"question_temperature", o.question_temperature},
       {"answer_temperature", o.answer_temperature},
       {"rationale_temperature", o.rationale_temperature},
       {"max_in_flight", o.max_in_flight}};
}

nlohmann::json ToJson(const GenerationReport& r) {
  return {{"requested", r.requested},
          {"attempts", r.attempts},
          {"accepted", r.accepted},
          {"rejected_disagreement", r.rejected_disagreement},
          {"rejected_malformed", r.rejected_malformed},
          {"rationale_without_sentinel", r.rationale_without_sentinel},
          {"cap_reached", r.cap_reached}};
}

std::optional<GeneratedQuestion> GenerateQuestion(LLMBackend& backend,
                                                  const PerturbedRecord& perturbed,
                                                  std::uint64_t attempt,
                                                  const SynthesisOptions& options) {
  ChatRequest req;
  req.system = kSystemPrompt;
  req.user = RenderPrompt(TemplateName::kQuestionGeneration, PerturbedFields(perturbed));
  req.temperature = options.question_temperature;
  req.call_id = MakeCallId(attempt, 0);
  return ParseGeneratedQuestion(backend.Complete(req));
}

AnswerVotes GenerateAnswer(LLMBackend& backend, const GeneratedQuestion& question,
                           std::uint64_t attempt, const SynthesisOptions& options) {
  ChatRequest req;
  req.system = kSystemPrompt;
  req.user = RenderPrompt(TemplateName::kAnswerGeneration,
                          RecordFields(question.question, question.choices));
  req.temperature = options.answer_temperature;
  AnswerVotes votes;
  for (std::size_t v = 0; v < options.votes; ++v) {
    req.call_id = MakeCallId(attempt, 1 + v);
    auto letter = ParseFinalAnswer(backend.Complete(req));
    if (letter) {
      const auto idx = AnswerIndex(std::string(1, *letter));
      if (!idx || *idx >= question.choices.size()) letter.reset();
    }
    if (!letter) votes.malformed = true;
    votes.letters.push_back(letter);
  }
  if (!votes.malformed) {
    votes.unanimous = true;
    for (const auto& l : votes.letters) votes.unanimous = votes.unanimous && *l == *votes.letters[0];
    if (votes.unanimous) votes.answer = *votes.letters[0];
  }
  return votes;
}

std::optional<ParsedRationale> GenerateRationale(LLMBackend& backend,
                                                 const GeneratedQuestion& question, char answer,
                                                 std::uint64_t attempt,
                                                 const SynthesisOptions& options) {
  ChatRequest req;
  req.system = kSystemPrompt;
  req.user = RenderPrompt(TemplateName::kRationaleGeneration,
                          RecordFields(question.question, question.choices, std::string(1, answer)));
  req.temperature = options.rationale_temperature;
  req.call_id = MakeCallId(attempt, kRationaleSlot);
  return ParseRationale(backend.Complete(req));
}

AttemptResult RunAttempt(LLMBackend& backend, const PerturbedRecord& source,
                         std::uint64_t attempt, const SynthesisOptions& options) {
  AttemptResult result;
  const auto question = GenerateQuestion(backend, source, attempt, options);
  if (!question) {
    result.reason = "malformed question reply";
    return result;
  }
  const auto votes = GenerateAnswer(backend, *question, attempt, options);
  if (votes.malformed) {
    result.reason = "malformed FINAL ANSWER";
    return result;
  }
  if (!votes.unanimous) {
    result.outcome = AttemptOutcome::kDisagreement;
    result.reason = "answers differ";
    return result;
  }
  const auto rationale = GenerateRationale(backend, *question, votes.answer, attempt, options);
  if (!rationale) {
    result.reason = "empty rationale";
    return result;
  }
  SyntheticRecord rec;
  rec.id = SyntheticId(attempt);
  rec.question = question->question;
  rec.choices = question->choices;
  rec.answer = std::string(1, votes.answer);
  rec.rationale = rationale->text;
  rec.source_id = source.id;
  for (std::uint64_t slot = 0; slot <= options.votes; ++slot) {
    rec.backend_calls.push_back(MakeCallId(attempt, slot));
  }
  rec.backend_calls.push_back(MakeCallId(attempt, kRationaleSlot));
  result.outcome = AttemptOutcome::kAccepted;
  result.rationale_had_sentinel = rationale->had_sentinel;
  result.record = std::move(rec);
  return result;
}

SynthesisResult Synthesize(LLMBackend& backend, const std::vector<PerturbedRecord>& dp,
                           const SynthesisOptions& options, Rng& rng) {
  options.Validate();
  if (dp.empty()) ThrowData("synth: empty perturbed dataset");
  SynthesisResult out;
  GenerationReport& report = out.report;
  report.requested = options.ratio * dp.size();
  const std::size_t cap = options.max_attempts ? options.max_attempts : 4 * report.requested;

  std::vector<std::size_t> order(dp.size());
  auto source_of = [&](std::uint64_t attempt) -> const PerturbedRecord& {
    if (attempt % dp.size() == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.Shuffle(order);
    }
    return dp[order[attempt % dp.size()]];
  };

  std::uint64_t next = 0;
  while (report.accepted < report.requested && next < cap) {
    const std::size_t wave = std::min<std::size_t>(options.max_in_flight, cap - next);
    std::vector<AttemptResult> results(wave);
    if (wave == 1) {
      results[0] = RunAttempt(backend, source_of(next), next, options);
    } else {
      std::vector<std::future<AttemptResult>> futures;
      for (std::size_t w = 0; w < wave; ++w) {
        const PerturbedRecord& src = source_of(next + w);
        futures.push_back(std::async(std::launch::async, [&backend, &src, &options, a = next + w] {
          return RunAttempt(backend, src, a, options);
        }));
      }
      for (std::size_t w = 0; w < wave; ++w) results[w] = futures[w].get();
    }
    // Assemble in attempt order; results past the target are discarded so
    // the outcome does not depend on the wave size.
    for (auto& r : results) {
      if (report.accepted >= report.requested) break;
      ++report.attempts;
      switch (r.outcome) {
        case AttemptOutcome::kAccepted:
          ++report.accepted;
          if (!r.rationale_had_sentinel) ++report.rationale_without_sentinel;
          out.records.push_back(std::move(*r.record));
          break;
        case AttemptOutcome::kDisagreement:
          ++report.rejected_disagreement;
          break;
        case AttemptOutcome::kMalformed:
          ++report.rejected_malformed;
          break;
      }
    }
    next += wave;
  }
  report.cap_reached = report.accepted < report.requested;
  return out;
}

}  // namespace ppcf::synth
