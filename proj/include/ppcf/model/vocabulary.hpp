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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ppcf::model {

// Whitespace/punctuation word-level vocabulary. The first five ids are
// reserved for special tokens.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kBos = 1;
  static constexpr std::uint32_t kEos = 2;
  static constexpr std::uint32_t kSep = 3;
  static constexpr std::uint32_t kUnk = 4;
  static constexpr std::uint32_t kNumSpecial = 5;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}
  // `words` are appended after the special tokens; duplicates are ignored.
  explicit Vocabulary(const std::vector<std::string>& words);

  // Rebuilds from a full token list (specials included), as stored on disk.
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  bool contains(std::string_view word) const;
  std::uint32_t id(std::string_view word) const;  // kUnk when absent

  std::vector<std::uint32_t> Encode(std::string_view text) const;
  std::string Decode(std::span<const std::uint32_t> ids) const;

  // Lowercases and splits on whitespace, separating punctuation.
  static std::vector<std::string> Split(std::string_view text);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace ppcf::model
