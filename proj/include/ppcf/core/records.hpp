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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ppcf {

// A private multiple-choice item held by the client. `answer` is the
// uppercase letter of the correct choice.
struct QARecord {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::string answer;

  // Text of the correct choice; throws a data error for an invalid letter.
  const std::string& answer_text() const;
  bool operator==(const QARecord&) const = default;
};

// What leaves the client. There is no field that could carry a label or
// the raw question.
struct PerturbedRecord {
  std::string id;
  std::string perturbed_question;
  bool operator==(const PerturbedRecord&) const = default;
};

struct SyntheticRecord {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::string answer;  // uppercase letter
  std::string rationale;
  std::string source_id;
  std::vector<std::uint64_t> backend_calls;

  const std::string& answer_text() const;
  bool operator==(const SyntheticRecord&) const = default;
};

// Letter for a 0-based choice index and back. AnswerIndex returns nullopt
// for anything but a single uppercase letter.
std::string AnswerLetter(std::size_t index);
std::optional<std::size_t> AnswerIndex(const std::string& letter);

nlohmann::json ToJson(const QARecord& r);
nlohmann::json ToJson(const PerturbedRecord& r);
nlohmann::json ToJson(const SyntheticRecord& r);
QARecord QARecordFromJson(const nlohmann::json& j);
// Rejects any object that carries keys beyond {"id", "perturbed_question"}.
PerturbedRecord PerturbedRecordFromJson(const nlohmann::json& j);
SyntheticRecord SyntheticRecordFromJson(const nlohmann::json& j);

std::vector<nlohmann::json> ReadJsonLines(const std::filesystem::path& path);
std::vector<nlohmann::json> ParseJsonLines(const std::string& text);
std::string FormatJsonLines(const std::vector<nlohmann::json>& rows);
void WriteJsonLines(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

template <typename Record>
std::vector<nlohmann::json> ToJsonRows(const std::vector<Record>& records) {
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(ToJson(r));
  return rows;
}

std::vector<QARecord> LoadQARecords(const std::filesystem::path& path);
std::vector<PerturbedRecord> LoadPerturbedRecords(const std::filesystem::path& path);
std::vector<SyntheticRecord> LoadSyntheticRecords(const std::filesystem::path& path);

// Writes `<artifact>.meta.json` next to an artifact with the producing
// configuration and seed.
void WriteSidecar(const std::filesystem::path& artifact, const nlohmann::json& config,
                  std::uint64_t seed);

}  // namespace ppcf
