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

// Desk-scale multiple-choice tasks with a fixed, seeded ground truth. The
// same ToyWorld backs dataset generation and the deterministic stub backend.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/records.hpp"
#include "ppcf/core/rng.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::eval {

enum class TaskFamily {
  kKeyValue,  // "what color is the apple ?" -> the apple's fixed color
  kPattern,   // "continue the sequence : ka lo ka lo ?" -> "ka"
  kMix,       // "what color do you get by mixing the apple and the sky ?" -> mix of
              // the two fixed colors: value (v(a) + v(b)) mod |values|
};

struct ToyTaskSpec {
  TaskFamily family = TaskFamily::kKeyValue;
  std::size_t vocab_slice = 32;  // number of keys (key-value, mix) or symbols (pattern)
  std::size_t choices_per_item = 4;
  std::uint64_t seed = 1;
  std::size_t train_size = 64;
  std::size_t val_size = 64;
  std::size_t test_size = 128;
  std::size_t public_size = 512;  // base-model pretraining corpus

  void Validate() const;
};

void to_json(nlohmann::json& j, const ToyTaskSpec& s);
void from_json(const nlohmann::json& j, ToyTaskSpec& s);
std::string TaskFamilyName(TaskFamily f);
TaskFamily ParseTaskFamily(const std::string& name);

class ToyWorld {
 public:
  explicit ToyWorld(const ToyTaskSpec& spec);

  const ToyTaskSpec& spec() const { return spec_; }
  // Every word the task can produce, in a stable order.
  std::vector<std::string> Words() const;
  model::Vocabulary MakeVocabulary() const;

  // A fresh item. `hint_words` (e.g. a perturbed question) seed the subject
  // when they mention a known key or symbols.
  SyntheticRecord MakeItem(Rng& rng, const std::string& id,
                           const std::vector<std::string>& hint_words = {}) const;

  // The correct choice text for a question this world produced, if known.
  std::optional<std::string> Solve(const std::string& question) const;
  std::string Rationale(const std::string& question, const std::string& answer) const;

 private:
  // Indices of the key words in `question`, in order of appearance.
  std::vector<std::size_t> KeysIn(const std::string& question) const;
  std::size_t MixIndex(std::size_t a, std::size_t b) const;

  ToyTaskSpec spec_;
  std::vector<std::string> keys_;
  std::vector<std::string> values_;
  std::vector<std::size_t> value_of_key_;
  std::vector<std::string> symbols_;
};

struct ToyTaskData {
  std::vector<SyntheticRecord> train, val, test, public_corpus;
};

// Deterministic in the task settings; ids are unique across splits.
ToyTaskData MakeToyTask(const ToyTaskSpec& spec);

// Writes train/val/test/public JSONL (shared schema plus a "rationale"
// field) into `dir`.
void WriteToyTask(const ToyTaskData& data, const std::filesystem::path& dir);

// Private-record view of a toy split.
std::vector<QARecord> AsQARecords(const std::vector<SyntheticRecord>& items);

}  // namespace ppcf::eval
