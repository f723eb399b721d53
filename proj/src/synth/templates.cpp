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

#include "ppcf/synth/templates.hpp"

#include <algorithm>

#include "ppcf/core/error.hpp"

namespace ppcf::synth {
namespace detail {
extern const std::string kQuestionGenerationTemplate;
extern const std::string kAnswerGenerationTemplate;
extern const std::string kRationaleGenerationTemplate;
}  // namespace detail

namespace {

constexpr const char* kAnswerTextPlaceholder = "choices.text[choices.label.index(answerKey)]";

}  // namespace

std::string TemplateFileName(TemplateName name) {
  switch (name) {
    case TemplateName::kQuestionGeneration:
      return "question_generation.txt";
    case TemplateName::kAnswerGeneration:
      return "answer_generation.txt";
    case TemplateName::kRationaleGeneration:
      return "rationale_generation.txt";
  }
  ThrowUsage("unknown template");
}

const std::string& TemplateText(TemplateName name) {
  switch (name) {
    case TemplateName::kQuestionGeneration:
      return detail::kQuestionGenerationTemplate;
    case TemplateName::kAnswerGeneration:
      return detail::kAnswerGenerationTemplate;
    case TemplateName::kRationaleGeneration:
      return detail::kRationaleGenerationTemplate;
  }
  ThrowUsage("unknown template");
}

std::vector<std::string> TemplatePlaceholders(const std::string& text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    const std::size_t end = text.find_first_of("{}\n", pos + 1);
    if (end == std::string::npos) break;
    if (text[end] == '}' && end > pos + 1) {
      std::string name = text.substr(pos + 1, end - pos - 1);
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      pos = end + 1;
    } else {
      pos = end;
    }
  }
  return names;
}

std::string RenderTemplate(const std::string& text, const PromptFields& fields) {
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) break;
    const std::size_t end = text.find_first_of("{}\n", open + 1);
    if (end == std::string::npos || text[end] != '}' || end == open + 1) {
      // Not a placeholder; copy through the brace and keep scanning.
      const std::size_t stop = end == std::string::npos ? text.size() : end;
      out.append(text, pos, stop - pos);
      pos = stop;
      continue;
    }
    const std::string name = text.substr(open + 1, end - open - 1);
    const auto it = fields.find(name);
    if (it == fields.end()) ThrowData("render_prompt: missing value for placeholder {" + name + "}");
    out.append(text, pos, open - pos);
    out += it->second;
    pos = end + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

std::string RenderPrompt(TemplateName name, const PromptFields& fields) {
  return RenderTemplate(TemplateText(name), fields);
}

std::string PythonString(const std::string& s) {
  const bool use_double = s.find('\'') != std::string::npos && s.find('"') == std::string::npos;
  const char quote = use_double ? '"' : '\'';
  std::string out(1, quote);
  for (char c : s) {
    if (c == '\\' || c == quote) out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += quote;
  return out;
}

std::string PythonList(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += PythonString(items[i]);
  }
  return out + "]";
}

PromptFields RecordFields(const std::string& question, const std::vector<std::string>& choices,
                          const std::string& answer) {
  PromptFields f;
  f["question"] = question;
  if (choices.empty()) return f;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < choices.size(); ++i) labels.push_back(AnswerLetter(i));
  f["choices"] = "{'label': " + PythonList(labels) + ", 'text': " + PythonList(choices) + "}";
  f["choices.text"] = PythonList(choices);
  if (const auto idx = AnswerIndex(answer); idx && *idx < choices.size()) {
    f[kAnswerTextPlaceholder] = choices[*idx];
  }
  return f;
}

PromptFields PerturbedFields(const PerturbedRecord& record) {
  PromptFields f;
  f["question"] = record.perturbed_question;
  f["choices"] = "[]";
  return f;
}

}  // namespace ppcf::synth
