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

#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/records.hpp"
#include "ppcf/distill/sequence.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::eval {

struct ItemScores {
  std::string id;
  std::vector<double> choice_scores;  // mean per-token log-likelihood
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

struct EvalResult {
  std::string dataset;
  double accuracy = 0.0;
  std::size_t sample_count = 0;
  std::vector<ItemScores> items;
};

nlohmann::json ToJson(const EvalResult& r);

// Mean log-probability of the choice tokens following "<bos> question <sep>".
double ScoreChoice(const model::Model& model, const model::Vocabulary& vocab,
                   const std::string& question, const std::string& choice,
                   const distill::SequenceLimits& limits = {});

// First index of the maximum; ties go to the lowest index.
std::size_t ArgmaxChoice(const std::vector<double>& scores);

EvalResult Evaluate(const model::Model& model, const model::Vocabulary& vocab,
                    const std::vector<QARecord>& dataset, const std::string& tag = "",
                    const distill::SequenceLimits& limits = {});

}  // namespace ppcf::eval
