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

// Server-side phases for one session: synthesize D_s from D_p, score layers,
// prune, retrain. Shared by the socket server and the in-process loopback.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/error.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/distill/trainer.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/prune/block_influence.hpp"
#include "ppcf/prune/plan.hpp"
#include "ppcf/synth/factory.hpp"
#include "ppcf/synth/synthesize.hpp"

namespace ppcf::fed {

// An error tagged with the pipeline phase it came from.
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, const Error& cause)
      : Error(cause.kind(), phase + ": " + cause.what()), phase_(std::move(phase)) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

struct ServerConfig {
  synth::BackendConfig backend;
  synth::SynthesisOptions synth;
  double prune_ratio = 0.30;
  std::string prune_metric = "bi";  // "bi" | "seq"
  // Rationale term in both the BI score and the retraining objective.
  bool use_rationale = true;
  prune::BIOptions bi;
  distill::TrainConfig retrain;
  std::uint64_t seed = 1;
  // Synthetic records used for the server-side accuracy in PROGRESS.
  std::size_t server_eval_samples = 128;

  void Validate() const;
};

nlohmann::json ToJson(const ServerConfig& c);

struct ServerArtifacts {
  model::Checkpoint model;  // pruned and retrained f_phi
  std::vector<SyntheticRecord> synthetic;
  synth::GenerationReport generation;
  prune::BIReport bi_report;
  prune::PruningPlan plan;
  std::vector<distill::TrainLogEntry> retrain_log;
  double server_accuracy_before = 0.0;  // pruned, not yet retrained
  double server_accuracy_after = 0.0;
};

// Receives PROGRESS bodies ({"phase", ...}); must not block.
using ProgressSink = std::function<void(const nlohmann::json&)>;

ServerArtifacts RunServerPipeline(const model::Checkpoint& base,
                                  const std::vector<PerturbedRecord>& dp, const ServerConfig& cfg,
                                  const ProgressSink& progress = {});

// Writes synthetic.jsonl, bi_report.{tsv,json}, retrain_log.jsonl,
// generation_report.json and model.ckpt (each with a sidecar) into `dir`.
void WriteServerArtifacts(const ServerArtifacts& a, const ServerConfig& cfg,
                          const std::filesystem::path& dir);

}  // namespace ppcf::fed
