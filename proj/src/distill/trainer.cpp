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

#include "ppcf/distill/trainer.hpp"

#include <numeric>

#include "ppcf/core/error.hpp"
#include "ppcf/core/rng.hpp"

namespace ppcf::distill {

void TrainConfig::Validate() const {
  if (batch_size < 1) ThrowUsage("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) ThrowUsage("train: learning_rate must be > 0");
  if (max_steps < 1) ThrowUsage("train: max_steps must be >= 1");
  if (max_question_len < 1 || max_target_len < 1) ThrowUsage("train: length limits must be >= 1");
  if (!(weight_decay >= 0.0) || !(clip_norm >= 0.0)) {
    ThrowUsage("train: weight_decay and clip_norm must be >= 0");
  }
}

model::AdamWParams TrainConfig::optimizer() const {
  model::AdamWParams p;
  p.learning_rate = learning_rate;
  p.weight_decay = weight_decay;
  p.clip_norm = clip_norm;
  return p;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"max_steps", c.max_steps},
       {"seed", c.seed},
       {"eval_every", c.eval_every},
       {"max_question_len", c.max_question_len},
       {"max_target_len", c.max_target_len},
       {"weight_decay", c.weight_decay},
       {"clip_norm", c.clip_norm},
       {"use_rationale", c.use_rationale}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.max_steps = j.value("max_steps", d.max_steps);
  c.seed = j.value("seed", d.seed);
  c.eval_every = j.value("eval_every", d.eval_every);
  c.max_question_len = j.value("max_question_len", d.max_question_len);
  c.max_target_len = j.value("max_target_len", d.max_target_len);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.use_rationale = j.value("use_rationale", d.use_rationale);
}

model::SequenceExample LabelExample(const model::Vocabulary& vocab, const std::string& question,
                                    const std::string& answer_text, const SequenceLimits& limits,
                                    std::size_t max_seq_len) {
  return ToExample(TokenizePair(vocab, question, answer_text, limits, max_seq_len, true));
}

model::SequenceExample RationaleExample(const model::Vocabulary& vocab,
                                        const std::string& question, const std::string& rationale,
                                        const SequenceLimits& limits, std::size_t max_seq_len) {
  return ToExample(TokenizePair(vocab, question, rationale, limits, max_seq_len, true));
}

nlohmann::json ToJson(const TrainLogEntry& e) {
  nlohmann::json j = {{"step", e.step},
                      {"total", e.total},
                      {"label", e.label},
                      {"rationale", e.rationale},
                      {"grad_norm", e.grad_norm}};
  j["eval_accuracy"] = e.eval_accuracy ? nlohmann::json(*e.eval_accuracy) : nlohmann::json();
  return j;
}

void WriteTrainingLog(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log) {
  std::vector<nlohmann::json> rows;
  for (const auto& e : log) rows.push_back(ToJson(e));
  WriteJsonLines(path, rows);
}

TrainResult Train(model::Model m, const std::vector<TrainItem>& items, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  TrainResult result;
  if (cfg.max_steps == 0) {
    result.model = std::move(m);
    return result;
  }
  cfg.Validate();
  if (items.empty()) ThrowData("train: empty dataset");
  const auto params = cfg.optimizer();
  auto state = model::MakeAdamWState(m);
  Rng rng = Rng(cfg.seed).Split(0x747261696e);  // "train"
  std::vector<std::size_t> order(items.size());
  std::size_t cursor = items.size();

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    MultiTaskBatch batch;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == items.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.Shuffle(order);
        cursor = 0;
      }
      const TrainItem& item = items[order[cursor++]];
      batch.label.push_back(item.label);
      if (item.rationale) batch.rationale.push_back(*item.rationale);
    }
    auto loss = MultitaskLoss(m, batch);
    TrainLogEntry entry{step, loss.total, loss.label_term, loss.rationale_term,
                        model::GradientNorm(loss.grads), std::nullopt};
    if (!std::isfinite(loss.total)) ThrowNumeric("train: non-finite loss at step " + std::to_string(step));
    model::ApplyAdamW(m, loss.grads, state, params);
    const bool periodic = cfg.eval_every > 0 && step % cfg.eval_every == 0;
    const bool last = step == cfg.max_steps;
    if (step == 1 || periodic || last) {
      if (hooks.eval && (periodic || last)) entry.eval_accuracy = hooks.eval(m);
      if (hooks.progress) hooks.progress(entry);
      result.log.push_back(entry);
    }
  }
  result.model = std::move(m);
  return result;
}

TrainResult RetrainServer(model::Model slm, const model::Vocabulary& vocab,
                          const std::vector<SyntheticRecord>& ds, const TrainConfig& cfg,
                          const TrainHooks& hooks) {
  if (ds.empty()) ThrowData("retrain_server: empty synthetic dataset");
  const auto limits = cfg.limits();
  const std::size_t L = slm.config().max_seq_len;
  std::vector<TrainItem> items;
  items.reserve(ds.size());
  for (const auto& r : ds) {
    TrainItem item{LabelExample(vocab, r.question, r.answer_text(), limits, L), std::nullopt};
    if (cfg.use_rationale) item.rationale = RationaleExample(vocab, r.question, r.rationale, limits, L);
    items.push_back(std::move(item));
  }
  return Train(std::move(slm), items, cfg, hooks);
}

TrainResult FinetuneClient(model::Model slm, const model::Vocabulary& vocab,
                           const std::vector<QARecord>& data, const TrainConfig& cfg,
                           const TrainHooks& hooks) {
  if (data.empty()) ThrowData("finetune_client: empty private dataset");
  const auto limits = cfg.limits();
  const std::size_t L = slm.config().max_seq_len;
  std::vector<TrainItem> items;
  items.reserve(data.size());
  for (const auto& r : data) {
    items.push_back({LabelExample(vocab, r.question, r.answer_text(), limits, L), std::nullopt});
  }
  return Train(std::move(slm), items, cfg, hooks);
}

}  // namespace ppcf::distill
