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

#include "ppcf/model/vocabulary.hpp"

#include <cctype>

#include "ppcf/core/error.hpp"

namespace ppcf::model {
namespace {

const std::vector<std::string>& SpecialTokens() {
  static const std::vector<std::string> kSpecial = {"<pad>", "<bos>", "<eos>", "<sep>",
                                                    "<unk>"};
  return kSpecial;
}

bool IsPunct(char c) {
  switch (c) {
    case '.': case ',': case '?': case '!': case ';': case ':':
    case '(': case ')': case '[': case ']': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

}  // namespace

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  for (const auto& s : SpecialTokens()) {
    index_.emplace(s, static_cast<std::uint32_t>(tokens_.size()));
    tokens_.push_back(s);
  }
  for (const auto& w : words) {
    if (index_.contains(w)) continue;
    index_.emplace(w, static_cast<std::uint32_t>(tokens_.size()));
    tokens_.push_back(w);
  }
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  const auto& special = SpecialTokens();
  if (tokens.size() < special.size()) ThrowData("vocabulary: missing special tokens");
  for (std::size_t i = 0; i < special.size(); ++i) {
    if (tokens[i] != special[i]) ThrowData("vocabulary: special token mismatch at " + std::to_string(i));
  }
  Vocabulary v(std::vector<std::string>(tokens.begin() + special.size(), tokens.end()));
  if (v.size() != tokens.size()) ThrowData("vocabulary: duplicate tokens");
  return v;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::uint32_t Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> Vocabulary::Split(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '<') {
      // Keep bracketed special markers such as "<sep>" intact.
      const auto close = text.find('>', i);
      if (close != std::string_view::npos && close - i <= 8) {
        flush();
        out.emplace_back(text.substr(i, close - i + 1));
        i = close;
      } else {
        cur.push_back(c);
      }
    } else if (IsPunct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::vector<std::uint32_t> Vocabulary::Encode(std::string_view text) const {
  std::vector<std::uint32_t> ids;
  for (const auto& w : Split(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::Decode(std::span<const std::uint32_t> ids) const {
  std::string out;
  for (std::uint32_t id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

}  // namespace ppcf::model
