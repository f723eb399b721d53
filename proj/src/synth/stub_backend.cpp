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

#include "ppcf/synth/stub_backend.hpp"

#include <algorithm>

#include "ppcf/core/error.hpp"
#include "ppcf/core/rng.hpp"
#include "ppcf/model/vocabulary.hpp"
#include "ppcf/synth/parse.hpp"
#include "ppcf/synth/templates.hpp"

namespace ppcf::synth {
namespace {

// Text between `header` and `footer` in a rendered prompt.
std::string Between(const std::string& text, const std::string& header, const std::string& footer) {
  const std::size_t b = text.find(header);
  if (b == std::string::npos) ThrowBackend("stub: prompt lacks '" + header + "'");
  const std::size_t start = b + header.size();
  const std::size_t e = text.find(footer, start);
  return text.substr(start, e == std::string::npos ? std::string::npos : e - start);
}

// Splits "<question>,\n<choices>" as rendered by the templates.
std::pair<std::string, std::string> SplitQuestionAndChoices(const std::string& block) {
  const std::size_t sep = block.rfind(",\n");
  if (sep == std::string::npos) return {Trim(block), ""};
  return {block.substr(0, sep), block.substr(sep + 2)};
}

// The bracketed list following `key` in `text`.
std::vector<std::string> ListAfter(const std::string& text, const std::string& key) {
  const std::size_t k = text.find(key);
  if (k == std::string::npos) return {};
  const std::size_t open = text.find('[', k + key.size());
  const std::size_t close = text.find(']', open);
  if (open == std::string::npos || close == std::string::npos) return {};
  return ParseChoiceList(std::string_view(text).substr(open, close - open + 1))
      .value_or(std::vector<std::string>{});
}

std::string LineAfter(const std::string& text, std::size_t from, const std::string& prefix) {
  const std::size_t p = text.find(prefix, from);
  if (p == std::string::npos) return "";
  const std::size_t start = p + prefix.size();
  const std::size_t nl = text.find('\n', start);
  return Trim(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
}

}  // namespace

StubBackend::StubBackend(const eval::ToyTaskSpec& world, StubOptions options)
    : world_(world), options_(std::move(options)) {
  if (!(options_.disagree_rate >= 0.0 && options_.disagree_rate <= 1.0)) {
    ThrowUsage("stub: disagree_rate must be in [0, 1]");
  }
}

std::string StubBackend::Complete(const ChatRequest& request) {
  const std::string& prompt = request.user;
  if (prompt.find("CREATED QUESTION AND CHOICES") != std::string::npos) {
    return QuestionReply(prompt, request.call_id);
  }
  if (prompt.find("FINAL ANSWER:") != std::string::npos) {
    return AnswerReply(prompt, request.call_id);
  }
  if (prompt.find("Rationale:") != std::string::npos) return RationaleReply(prompt);
  ThrowBackend("stub: unrecognized prompt");
}

std::string StubBackend::QuestionReply(const std::string& prompt, std::uint64_t call_id) const {
  const auto [question, choices] = SplitQuestionAndChoices(
      Between(prompt, "Given Question and Multiple Choices:\n", "\n\nYour output"));
  (void)choices;
  Rng rng = Rng(options_.seed ^ Fnv1a64(prompt)).Split(call_id);
  const auto item = world_.MakeItem(rng, "", model::Vocabulary::Split(question));
  return "CREATED QUESTION AND CHOICES:\n\nQuestion: " + item.question +
         "\n\nChoices: " + PythonList(item.choices);
}

std::string StubBackend::AnswerReply(const std::string& prompt, std::uint64_t call_id) const {
  const auto [question, choices_text] =
      SplitQuestionAndChoices(Between(prompt, "Given Question and Choices:\n", "\n\nYour output"));
  const auto choices = ListAfter(choices_text, "'text':");
  if (choices.empty()) return "SOLUTION: no choices were given.\n\nFINAL ANSWER: A";
  std::size_t index = Fnv1a64(question) % choices.size();
  std::string solution = "the question is not one i know.";
  if (const auto truth = world_.Solve(question)) {
    const auto it = std::find(choices.begin(), choices.end(), *truth);
    if (it != choices.end()) {
      index = static_cast<std::size_t>(it - choices.begin());
      solution = world_.Rationale(question, *truth);
    }
  }
  const std::uint64_t attempt = CallAttempt(call_id);
  const double u = static_cast<double>(SplitMix64(options_.seed ^ Fnv1a64(question)) >> 11) *
                   0x1.0p-53;
  const bool disagree =
      options_.disagree_attempts.count(attempt) > 0 || u < options_.disagree_rate;
  if (disagree && CallSlot(call_id) == 1) index = (index + 1) % choices.size();
  return "SOLUTION: " + solution + "\n\nFINAL ANSWER: " + AnswerLetter(index);
}

std::string StubBackend::RationaleReply(const std::string& prompt) const {
  const std::size_t from = prompt.find("Please explain:");
  if (from == std::string::npos) ThrowBackend("stub: rationale prompt lacks 'Please explain:'");
  const std::string question = LineAfter(prompt, from, "Question: ");
  const std::string answer = LineAfter(prompt, from, "Answer: ");
  return world_.Rationale(question, answer) + " <end>";
}

}  // namespace ppcf::synth
