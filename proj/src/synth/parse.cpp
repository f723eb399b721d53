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

#include "ppcf/synth/parse.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ppcf::synth {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Strips "A." / "A)" / "(A)" / "A:" style labels.
std::string StripLabel(const std::string& item) {
  if (item.size() >= 4 && item[0] == '(' && std::isupper(static_cast<unsigned char>(item[1])) &&
      item[2] == ')') {
    return Trim(std::string_view(item).substr(3));
  }
  if (item.size() >= 3 && std::isupper(static_cast<unsigned char>(item[0])) &&
      (item[1] == '.' || item[1] == ')' || item[1] == ':') && IsSpace(item[2])) {
    return Trim(std::string_view(item).substr(2));
  }
  return item;
}

}  // namespace

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::vector<std::string>> ParseChoiceList(std::string_view text) {
  const std::string t = Trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') return std::nullopt;
  std::vector<std::string> items;
  std::size_t i = 1;
  const std::size_t end = t.size() - 1;
  while (true) {
    while (i < end && IsSpace(t[i])) ++i;
    if (i >= end) break;
    std::string item;
    if (t[i] == '\'' || t[i] == '"') {
      const char quote = t[i++];
      bool closed = false;
      while (i < end) {
        const char c = t[i++];
        if (c == '\\' && i < end) {
          const char n = t[i++];
          item += n == 'n' ? '\n' : n;
        } else if (c == quote) {
          closed = true;
          break;
        } else {
          item += c;
        }
      }
      if (!closed) return std::nullopt;
      while (i < end && IsSpace(t[i])) ++i;
      if (i < end && t[i] != ',') return std::nullopt;
    } else {
      const std::size_t comma = t.find(',', i);
      const std::size_t stop = (comma == std::string::npos || comma > end) ? end : comma;
      item = t.substr(i, stop - i);
      i = stop;
    }
    item = StripLabel(Trim(item));
    if (item.empty()) return std::nullopt;
    items.push_back(std::move(item));
    if (i < end && t[i] == ',') ++i;
  }
  return items;
}

std::optional<GeneratedQuestion> ParseGeneratedQuestion(std::string_view reply) {
  const std::size_t marker = reply.find("CREATED QUESTION AND CHOICES");
  if (marker == std::string_view::npos) return std::nullopt;
  const auto lines = Lines(reply.substr(marker));
  std::optional<std::string> question;
  std::optional<std::vector<std::string>> choices;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string line = Trim(lines[k]);
    if (!question && StartsWith(line, "Question:")) {
      question = Trim(std::string_view(line).substr(9));
    } else if (question && !choices && StartsWith(line, "Choices")) {
      std::string_view rest = std::string_view(line).substr(7);
      const std::size_t colon = rest.find(':');
      if (colon == std::string_view::npos) return std::nullopt;
      choices = ParseChoiceList(rest.substr(colon + 1));
      if (!choices) return std::nullopt;
    }
  }
  if (!question || question->empty() || !choices || choices->size() < 2) return std::nullopt;
  if (choices->size() > 26) return std::nullopt;
  const std::set<std::string> distinct(choices->begin(), choices->end());
  if (distinct.size() != choices->size()) return std::nullopt;
  return GeneratedQuestion{*question, *choices};
}

std::optional<char> ParseFinalAnswer(std::string_view reply) {
  const std::size_t pos = reply.rfind("FINAL ANSWER:");
  if (pos == std::string_view::npos) return std::nullopt;
  std::size_t i = pos + 13;
  while (i < reply.size() && IsSpace(reply[i]) && reply[i] != '\n') ++i;
  while (i < reply.size() && (reply[i] == '(' || reply[i] == '[' || reply[i] == '\'' ||
                              reply[i] == '"' || reply[i] == '*')) {
    ++i;
  }
  if (i >= reply.size() || !std::isupper(static_cast<unsigned char>(reply[i]))) return std::nullopt;
  const char letter = reply[i];
  if (i + 1 < reply.size() && std::isalnum(static_cast<unsigned char>(reply[i + 1]))) {
    return std::nullopt;
  }
  return letter;
}

std::optional<ParsedRationale> ParseRationale(std::string_view reply) {
  ParsedRationale out;
  const std::size_t end = reply.find("<end>");
  out.had_sentinel = end != std::string_view::npos;
  std::string text = Trim(out.had_sentinel ? reply.substr(0, end) : reply);
  if (StartsWith(text, "Rationale:")) text = Trim(std::string_view(text).substr(10));
  if (text.empty()) return std::nullopt;
  out.text = std::move(text);
  return out;
}

}  // namespace ppcf::synth
