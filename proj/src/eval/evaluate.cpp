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

#include "ppcf/eval/evaluate.hpp"

#include <cmath>

#include "ppcf/core/error.hpp"
#include "ppcf/model/kernels.hpp"

namespace ppcf::eval {
namespace {

// Log-likelihood of logits row `t` emitting `target`.
double RowLogProb(const model::Tensor<float>& logits, std::size_t t, model::TokenId target) {
  const std::size_t V = logits.shape[1];
  std::vector<double> row(V);
  for (std::size_t v = 0; v < V; ++v) row[v] = static_cast<double>(logits.data[t * V + v]);
  return row[target] - model::kernels::LogSumExp(row.data(), V);
}

}  // namespace

nlohmann::json ToJson(const EvalResult& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : r.items) {
    items.push_back({{"id", it.id},
                     {"choice_scores", it.choice_scores},
                     {"predicted", it.predicted},
                     {"correct", it.correct}});
  }
  return {{"dataset", r.dataset},
          {"accuracy", r.accuracy},
          {"sample_count", r.sample_count},
          {"items", items}};
}

double ScoreChoice(const model::Model& model, const model::Vocabulary& vocab,
                   const std::string& question, const std::string& choice,
                   const distill::SequenceLimits& limits) {
  const auto pair = distill::TokenizePair(vocab, question, choice, limits,
                                          model.config().max_seq_len, /*append_eos=*/false);
  const auto ex = distill::ToExample(pair);
  const auto trace = model.Forward(ex.inputs, false);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < ex.inputs.size(); ++t) {
    if (!ex.mask[t]) continue;
    total += RowLogProb(trace.logits, t, ex.targets[t]);
    ++n;
  }
  return total / static_cast<double>(n);
}

std::size_t ArgmaxChoice(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

EvalResult Evaluate(const model::Model& model, const model::Vocabulary& vocab,
                    const std::vector<QARecord>& dataset, const std::string& tag,
                    const distill::SequenceLimits& limits) {
  if (dataset.empty()) ThrowData("evaluate: empty dataset");
  EvalResult result;
  result.dataset = tag;
  std::size_t hits = 0;
  for (const auto& rec : dataset) {
    ItemScores item;
    item.id = rec.id;
    item.correct = *AnswerIndex(rec.answer);
    // Single-token choices share one forward pass over the prefix; causal
    // masking makes this bit-identical to scoring each choice separately.
    bool single = true;
    std::vector<model::TokenId> ids;
    for (const auto& c : rec.choices) {
      const auto enc = vocab.Encode(c);
      single = single && enc.size() == 1;
      ids.push_back(enc.empty() ? 0 : enc[0]);
    }
    const auto prefix = distill::TokenizePair(vocab, rec.question, rec.choices.empty() ? "" : rec.choices[0],
                                              limits, model.config().max_seq_len, false);
    if (single && !prefix.truncated) {
      const std::vector<model::TokenId> context(prefix.tokens.begin(),
                                                prefix.tokens.begin() + prefix.target_begin);
      const auto trace = model.Forward(context, false);
      for (model::TokenId id : ids) {
        item.choice_scores.push_back(RowLogProb(trace.logits, context.size() - 1, id));
      }
    } else {
      for (const auto& c : rec.choices) {
        item.choice_scores.push_back(ScoreChoice(model, vocab, rec.question, c, limits));
      }
    }
    item.predicted = ArgmaxChoice(item.choice_scores);
    if (item.predicted == item.correct) ++hits;
    result.items.push_back(std::move(item));
  }
  result.sample_count = dataset.size();
  result.accuracy = static_cast<double>(hits) / static_cast<double>(dataset.size());
  return result;
}

}  // namespace ppcf::eval
