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

// Parsers for backend replies. Every parser returns nullopt for a malformed
// reply instead of throwing; callers count those as rejections.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ppcf::synth {

struct GeneratedQuestion {
  std::string question;
  std::vector<std::string> choices;
  bool operator==(const GeneratedQuestion&) const = default;
};

// A bracketed list such as ['a', "b", c]. Items may be quoted with ' or " or
// bare; a leading "A." / "A)" / "(A)" label is stripped. Rejects empty items.
std::optional<std::vector<std::string>> ParseChoiceList(std::string_view text);

// Expects the "CREATED QUESTION AND CHOICES:" marker followed by a
// "Question:" line and a "Choices" line holding a bracketed list of at least
// two distinct choices.
std::optional<GeneratedQuestion> ParseGeneratedQuestion(std::string_view reply);

// Uppercase letter after the last "FINAL ANSWER:"; tolerates surrounding
// brackets, quotes and trailing punctuation but not a following word.
std::optional<char> ParseFinalAnswer(std::string_view reply);

struct ParsedRationale {
  std::string text;
  bool had_sentinel = false;
};

// Text before the first "<end>", trimmed, with a leading "Rationale:" label
// removed. Without a sentinel the whole reply is kept and flagged. An empty
// result yields nullopt.
std::optional<ParsedRationale> ParseRationale(std::string_view reply);

std::string Trim(std::string_view s);

}  // namespace ppcf::synth
