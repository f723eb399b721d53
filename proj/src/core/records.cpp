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

#include "ppcf/core/records.hpp"

#include <sstream>

#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"

namespace ppcf {
namespace {

const std::string& ChoiceAt(const std::vector<std::string>& choices, const std::string& letter,
                            const std::string& id) {
  const auto idx = AnswerIndex(letter);
  if (!idx || *idx >= choices.size()) {
    ThrowData("record " + id + ": answer '" + letter + "' does not name a choice");
  }
  return choices[*idx];
}

template <typename Fn>
auto Guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string(what) + ": " + e.what());
  }
}

}  // namespace

const std::string& QARecord::answer_text() const { return ChoiceAt(choices, answer, id); }
const std::string& SyntheticRecord::answer_text() const { return ChoiceAt(choices, answer, id); }

std::string AnswerLetter(std::size_t index) {
  if (index >= 26) ThrowData("choice index " + std::to_string(index) + " has no letter");
  return std::string(1, static_cast<char>('A' + index));
}

std::optional<std::size_t> AnswerIndex(const std::string& letter) {
  if (letter.size() != 1 || letter[0] < 'A' || letter[0] > 'Z') return std::nullopt;
  return static_cast<std::size_t>(letter[0] - 'A');
}

nlohmann::json ToJson(const QARecord& r) {
  return {{"id", r.id}, {"question", r.question}, {"choices", r.choices}, {"answer", r.answer}};
}

nlohmann::json ToJson(const PerturbedRecord& r) {
  return {{"id", r.id}, {"perturbed_question", r.perturbed_question}};
}

nlohmann::json ToJson(const SyntheticRecord& r) {
  return {{"id", r.id},
          {"question", r.question},
          {"choices", r.choices},
          {"answer", r.answer},
          {"rationale", r.rationale},
          {"provenance", {{"source_id", r.source_id}, {"backend_calls", r.backend_calls}}}};
}

QARecord QARecordFromJson(const nlohmann::json& j) {
  return Guarded("private record", [&] {
    QARecord r;
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    r.question = j.at("question").get<std::string>();
    r.choices = j.at("choices").get<std::vector<std::string>>();
    r.answer = j.at("answer").get<std::string>();
    ChoiceAt(r.choices, r.answer, r.id);
    return r;
  });
}

PerturbedRecord PerturbedRecordFromJson(const nlohmann::json& j) {
  return Guarded("perturbed record", [&] {
    if (!j.is_object()) ThrowData("perturbed record: not an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "id" && key != "perturbed_question") {
        ThrowData("perturbed record: unexpected field '" + key + "'");
      }
    }
    PerturbedRecord r;
    r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    r.perturbed_question = j.at("perturbed_question").get<std::string>();
    return r;
  });
}

SyntheticRecord SyntheticRecordFromJson(const nlohmann::json& j) {
  return Guarded("synthetic record", [&] {
    SyntheticRecord r;
    r.id = j.at("id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.choices = j.at("choices").get<std::vector<std::string>>();
    r.answer = j.at("answer").get<std::string>();
    r.rationale = j.at("rationale").get<std::string>();
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      r.source_id = p.value("source_id", "");
      if (p.contains("backend_calls")) {
        r.backend_calls = p["backend_calls"].get<std::vector<std::uint64_t>>();
      }
    }
    ChoiceAt(r.choices, r.answer, r.id);
    return r;
  });
}

std::vector<nlohmann::json> ParseJsonLines(const std::string& text) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) ThrowData("jsonl: invalid JSON on line " + std::to_string(lineno));
    rows.push_back(std::move(j));
  }
  return rows;
}

std::vector<nlohmann::json> ReadJsonLines(const std::filesystem::path& path) {
  return ParseJsonLines(ReadFileText(path));
}

std::string FormatJsonLines(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

void WriteJsonLines(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
  WriteFileText(path, FormatJsonLines(rows));
}

std::vector<QARecord> LoadQARecords(const std::filesystem::path& path) {
  std::vector<QARecord> out;
  for (const auto& j : ReadJsonLines(path)) out.push_back(QARecordFromJson(j));
  return out;
}

std::vector<PerturbedRecord> LoadPerturbedRecords(const std::filesystem::path& path) {
  std::vector<PerturbedRecord> out;
  for (const auto& j : ReadJsonLines(path)) out.push_back(PerturbedRecordFromJson(j));
  return out;
}

std::vector<SyntheticRecord> LoadSyntheticRecords(const std::filesystem::path& path) {
  std::vector<SyntheticRecord> out;
  for (const auto& j : ReadJsonLines(path)) out.push_back(SyntheticRecordFromJson(j));
  return out;
}

void WriteSidecar(const std::filesystem::path& artifact, const nlohmann::json& config,
                  std::uint64_t seed) {
  nlohmann::json meta = {{"artifact", artifact.filename().string()},
                         {"config", config},
                         {"seed", seed}};
  WriteFileText(artifact.string() + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace ppcf
