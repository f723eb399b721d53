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

// Prompt templates for question, answer and rationale generation. The text is
// compiled in verbatim from prompts/*.txt; placeholders use {name} syntax,
// where a name is any run of characters other than braces and newlines.

#include <map>
#include <string>
#include <vector>

#include "ppcf/core/records.hpp"

namespace ppcf::synth {

enum class TemplateName {
  kQuestionGeneration,
  kAnswerGeneration,
  kRationaleGeneration,
};

std::string TemplateFileName(TemplateName name);
const std::string& TemplateText(TemplateName name);

using PromptFields = std::map<std::string, std::string>;

// Placeholder names in order of first appearance.
std::vector<std::string> TemplatePlaceholders(const std::string& text);

// Substitutes every placeholder; throws a data error naming the first one
// without a value.
std::string RenderTemplate(const std::string& text, const PromptFields& fields);
std::string RenderPrompt(TemplateName name, const PromptFields& fields);

// Python-literal renderings, matching the ['...', '...'] style of the
// rationale exemplar.
std::string PythonString(const std::string& s);
std::string PythonList(const std::vector<std::string>& items);

// Fields for a question with listed choices:
//   {question}, {choices} as {'label': [...], 'text': [...]},
//   {choices.text}, and, when `answer` is a valid letter,
//   {choices.text[choices.label.index(answerKey)]}.
// Choice fields are omitted when `choices` is empty, so rendering a template
// that needs them fails with a missing-placeholder error.
PromptFields RecordFields(const std::string& question, const std::vector<std::string>& choices,
                          const std::string& answer = "");

// Fields for a perturbed, input-only record: it has no choices, which are
// rendered as an empty list.
PromptFields PerturbedFields(const PerturbedRecord& record);

}  // namespace ppcf::synth
