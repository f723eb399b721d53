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

// Single entry point exposing every phase plus the full pipeline.
//
// Exit codes: 0 success, 1 usage, 2 data/format, 3 backend/transport,
// 4 numeric. Failures print one JSON line {"error": {...}} on stderr.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/cli/config.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/distill/trainer.hpp"
#include "ppcf/dp/mechanism.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/fed/server_pipeline.hpp"
#include "ppcf/fed/session.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/config.hpp"

namespace ppcf::cli {

struct PathsConfig {
  std::filesystem::path output_dir = "ppcf-out";
  std::filesystem::path base_checkpoint;  // dense base model; pretrained when absent
  std::filesystem::path public_data;      // pretraining corpus (synthetic-record JSONL)
  std::filesystem::path private_data;     // client records (QA JSONL)
  std::filesystem::path eval_data;        // client evaluation records (QA JSONL)
  std::filesystem::path embedding_table;  // optional external perturbation table
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  PathsConfig paths;
  eval::ToyTaskSpec task;
  model::ModelConfig model;  // vocab_size is taken from the vocabulary
  std::uint64_t model_seed = 1;
  distill::TrainConfig pretrain;
  double epsilon = 3.0;
  dp::SensitivityMode sensitivity_mode = dp::SensitivityMode::kExact;
  fed::ServerConfig server;
  distill::TrainConfig client;
  std::string listen = "127.0.0.1:7070";
  std::string server_endpoint = "127.0.0.1:7070";
  std::size_t sessions = 0;
  std::size_t progress_capacity = 64;
  std::filesystem::path wire_dump;
  bool evaluate_base = true;

  void Validate() const;
};

nlohmann::json ToJson(const PipelineConfig& c);

// Resolves every setting with flag > environment > file > default precedence.
PipelineConfig ResolvePipelineConfig(const Settings& settings);

fed::ClientConfig MakeClientConfig(const PipelineConfig& c);

// Vocabulary over the toy world plus every word occurring in `extra_text`,
// in first-appearance order.
model::Vocabulary BuildVocabulary(const eval::ToyTaskSpec& task,
                                  const std::vector<std::string>& extra_text = {});

// Trains a fresh dense model on the public corpus with the multitask
// objective; `val` (may be empty) drives the periodic evaluation.
model::Checkpoint PretrainBase(const PipelineConfig& c,
                               const std::vector<SyntheticRecord>& corpus,
                               const std::vector<QARecord>& val, std::ostream* log = nullptr);

struct PipelineSummary {
  double dense_accuracy = 0.0;
  double pruned_accuracy = 0.0;      // pruned, no retraining
  double retrained_accuracy = 0.0;   // after server retraining
  double final_accuracy = 0.0;       // after client fine-tuning
  std::vector<std::uint32_t> removed_layers;
  std::size_t synthetic_records = 0;
  double seconds = 0.0;
};

nlohmann::json ToJson(const PipelineSummary& s);

// All phases in-process over the loopback transport. Writes artifacts
// under c.paths.output_dir.
PipelineSummary RunPipeline(const PipelineConfig& c, std::ostream* log = nullptr);

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           Settings::EnvLookup env = Settings::ProcessEnv());
int RunCli(int argc, char** argv);

}  // namespace ppcf::cli
