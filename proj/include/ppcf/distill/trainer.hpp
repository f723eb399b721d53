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

// Server-side multi-task retraining on synthetic data (label + rationale
// targets, equal weights) and client-side label-only fine-tuning.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ppcf/core/records.hpp"
#include "ppcf/distill/sequence.hpp"
#include "ppcf/model/optimizer.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::distill {

struct TrainConfig {
  std::size_t batch_size = 32;  // records per step; each yields one example per task
  double learning_rate = 5e-5;
  std::size_t max_steps = 300;
  std::uint64_t seed = 1;
  std::size_t eval_every = 50;  // 0 disables periodic evaluation
  std::size_t max_question_len = 64;
  std::size_t max_target_len = 128;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  bool use_rationale = true;  // server retraining only

  // batch_size >= 1, learning_rate > 0, max_steps >= 1. The trainers treat
  // max_steps == 0 as "no update" before validating.
  void Validate() const;
  SequenceLimits limits() const { return {max_question_len, max_target_len}; }
  model::AdamWParams optimizer() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct MultiTaskBatch {
  std::vector<model::SequenceExample> label;
  std::vector<model::SequenceExample> rationale;  // empty when disabled
};

struct MultiTaskLossResult {
  double total = 0.0;
  double label_term = 0.0;
  double rationale_term = 0.0;
  model::Gradients grads;
};

namespace detail {
// Adds the gradient of the mean masked cross-entropy of `batch` into grads
// and returns that mean.
template <typename T>
double AccumulateMeanLoss(const model::TransformerModel<T>& m,
                          std::span<const model::SequenceExample> batch, model::Gradients& grads) {
  std::size_t count = 0;
  for (const auto& ex : batch) {
    for (std::uint8_t v : ex.mask) count += v ? 1 : 0;
  }
  if (count == 0) ThrowData("multitask loss: a task stream selects no target positions");
  const double w = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (const auto& ex : batch) sum += m.AccumulateGradients(ex, w, grads);
  return sum / static_cast<double>(count);
}
}  // namespace detail

// total = label_term + rationale_term, each a mean masked cross-entropy over
// its own stream; gradients are of the total.
template <typename T>
MultiTaskLossResult MultitaskLoss(const model::TransformerModel<T>& m, const MultiTaskBatch& batch) {
  if (batch.label.empty()) ThrowData("multitask loss: empty label stream");
  MultiTaskLossResult out;
  out.grads = model::ZerosLike<double>(m.weights());
  out.label_term = detail::AccumulateMeanLoss(m, batch.label, out.grads);
  if (!batch.rationale.empty()) {
    out.rationale_term = detail::AccumulateMeanLoss(m, batch.rationale, out.grads);
  }
  out.total = out.label_term + out.rationale_term;
  return out;
}

// Training examples. The label target is the text of the correct choice;
// both targets end with <eos>.
model::SequenceExample LabelExample(const model::Vocabulary& vocab, const std::string& question,
                                    const std::string& answer_text, const SequenceLimits& limits,
                                    std::size_t max_seq_len);
model::SequenceExample RationaleExample(const model::Vocabulary& vocab,
                                        const std::string& question, const std::string& rationale,
                                        const SequenceLimits& limits, std::size_t max_seq_len);

struct TrainLogEntry {
  std::size_t step = 0;
  double total = 0.0;
  double label = 0.0;
  double rationale = 0.0;
  double grad_norm = 0.0;
  std::optional<double> eval_accuracy;
};

nlohmann::json ToJson(const TrainLogEntry& e);
void WriteTrainingLog(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log);

struct TrainHooks {
  // Accuracy of the current model, evaluated every eval_every steps and at
  // the end.
  std::function<double(const model::Model&)> eval;
  // Called for every logged entry.
  std::function<void(const TrainLogEntry&)> progress;
};

struct TrainResult {
  model::Model model;
  std::vector<TrainLogEntry> log;
};

// One item per record: a label example and an optional rationale example.
struct TrainItem {
  model::SequenceExample label;
  std::optional<model::SequenceExample> rationale;
};

// Generic loop: per-epoch shuffled batches of cfg.batch_size items, one
// AdamW step per batch. Logged: step 1, every eval_every steps, and the last.
TrainResult Train(model::Model model, const std::vector<TrainItem>& items, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// Label + rationale objective over D_s (rationale dropped when
// cfg.use_rationale is false).
TrainResult RetrainServer(model::Model slm, const model::Vocabulary& vocab,
                          const std::vector<SyntheticRecord>& ds, const TrainConfig& cfg,
                          const TrainHooks& hooks = {});

// Label-only objective over the private records.
TrainResult FinetuneClient(model::Model slm, const model::Vocabulary& vocab,
                           const std::vector<QARecord>& data, const TrainConfig& cfg,
                           const TrainHooks& hooks = {});

}  // namespace ppcf::distill
