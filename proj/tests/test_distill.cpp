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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ppcf/core/error.hpp"
#include "ppcf/distill/sequence.hpp"
#include "ppcf/distill/trainer.hpp"
#include "ppcf/eval/evaluate.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/model/transformer.hpp"

using namespace ppcf;
using namespace ppcf::distill;

namespace {

struct Fixture {
  eval::ToyTaskSpec spec;
  model::Vocabulary vocab;
  eval::ToyTaskData data;
  model::ModelConfig cfg;

  Fixture() {
    spec.vocab_slice = 8;
    spec.train_size = 16;
    spec.val_size = 16;
    spec.test_size = 16;
    spec.public_size = 32;
    vocab = eval::ToyWorld(spec).MakeVocabulary();
    data = eval::MakeToyTask(spec);
    cfg.vocab_size = vocab.size();
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.max_seq_len = 48;
  }

  TrainConfig Train(std::size_t steps) const {
    TrainConfig t;
    t.batch_size = 4;
    t.learning_rate = 3e-3;
    t.max_steps = steps;
    t.eval_every = 0;
    return t;
  }
};

std::size_t MaskCount(const model::SequenceExample& ex) {
  std::size_t n = 0;
  for (auto v : ex.mask) n += v;
  return n;
}

}  // namespace

TEST(Sequence, LayoutAndMaskCoverTargetAndEos) {
  Fixture f;
  const auto pair = TokenizePair(f.vocab, "what color is the apple ?", "red", {}, 48, true);
  EXPECT_EQ(pair.tokens.front(), model::Vocabulary::kBos);
  EXPECT_EQ(pair.tokens[pair.target_begin - 1], model::Vocabulary::kSep);
  EXPECT_EQ(pair.tokens.back(), model::Vocabulary::kEos);
  EXPECT_FALSE(pair.truncated);
  const auto ex = ToExample(pair);
  EXPECT_EQ(ex.inputs.size(), pair.tokens.size() - 1);
  EXPECT_EQ(MaskCount(ex), 2u);  // "red" and <eos>
}

TEST(Sequence, TruncatesToLimitsAndWindow) {
  Fixture f;
  SequenceLimits lim{2, 3};
  const auto p = TokenizePair(f.vocab, "a b c d e", "x y z w", lim, 48, true);
  EXPECT_TRUE(p.truncated);
  EXPECT_EQ(p.target_begin, 4u);             // <bos> q q <sep>
  EXPECT_EQ(p.tokens.size(), 4u + 3u + 1u);  // + 3 target + <eos>
  const auto w = TokenizePair(f.vocab, "a b c d e", "x y z w", {}, 6, true);
  EXPECT_LE(w.tokens.size(), 7u);
  EXPECT_TRUE(w.truncated);
}

TEST(Multitask, TotalIsSumOfIndependentMeans) {
  Fixture f;
  const auto m = model::InitModel(f.cfg, 3);
  MultiTaskBatch batch;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = f.data.train[i];
    batch.label.push_back(LabelExample(f.vocab, r.question, r.answer_text(), {}, 48));
    batch.rationale.push_back(RationaleExample(f.vocab, r.question, r.rationale, {}, 48));
  }
  const auto mt = MultitaskLoss(m, batch);
  const auto l = model::ComputeLossAndGradients(m, batch.label);
  const auto r = model::ComputeLossAndGradients(m, batch.rationale);
  EXPECT_NEAR(mt.label_term, l.loss, 1e-12);
  EXPECT_NEAR(mt.rationale_term, r.loss, 1e-12);
  EXPECT_NEAR(mt.total, l.loss + r.loss, 1e-12);
  std::vector<double> got, want;
  model::VisitTensors(mt.grads, [&](const std::string&, const model::Tensor<double>& t) {
    got.insert(got.end(), t.data.begin(), t.data.end());
  });
  model::VisitTensorPairs(l.grads, r.grads,
                          [&](const std::string&, const model::Tensor<double>& a, const model::Tensor<double>& b) {
                            for (std::size_t i = 0; i < a.size(); ++i) want.push_back(a.data[i] + b.data[i]);
                          });
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
}

TEST(Multitask, EmptyRationaleStreamDropsTerm) {
  Fixture f;
  const auto m = model::InitModel(f.cfg, 3);
  MultiTaskBatch batch;
  const auto& r = f.data.train[0];
  batch.label.push_back(LabelExample(f.vocab, r.question, r.answer_text(), {}, 48));
  const auto mt = MultitaskLoss(m, batch);
  EXPECT_EQ(mt.rationale_term, 0.0);
  EXPECT_EQ(mt.total, mt.label_term);
  EXPECT_THROW(MultitaskLoss(m, MultiTaskBatch{}), Error);
}

TEST(Trainer, ZeroStepsLeavesModelUnchanged) {
  Fixture f;
  const auto m = model::InitModel(f.cfg, 4);
  const auto out = RetrainServer(m, f.vocab, f.data.train, f.Train(0));
  EXPECT_EQ(out.model.weights(), m.weights());
  EXPECT_TRUE(out.log.empty());
}

TEST(Trainer, DeterministicForFixedSeed) {
  Fixture f;
  const auto m = model::InitModel(f.cfg, 4);
  const auto a = RetrainServer(m, f.vocab, f.data.train, f.Train(5));
  const auto b = RetrainServer(m, f.vocab, f.data.train, f.Train(5));
  EXPECT_EQ(a.model.weights(), b.model.weights());
  auto other = f.Train(5);
  other.seed = 2;
  EXPECT_NE(RetrainServer(m, f.vocab, f.data.train, other).model.weights(), a.model.weights());
}

TEST(Trainer, LogsFirstPeriodicAndLastSteps) {
  Fixture f;
  auto cfg = f.Train(7);
  cfg.eval_every = 3;
  int evals = 0;
  TrainHooks hooks;
  hooks.eval = [&](const model::Model&) { return static_cast<double>(++evals); };
  const auto out = RetrainServer(model::InitModel(f.cfg, 4), f.vocab, f.data.train, cfg, hooks);
  std::vector<std::size_t> steps;
  for (const auto& e : out.log) steps.push_back(e.step);
  EXPECT_EQ(steps, (std::vector<std::size_t>{1, 3, 6, 7}));
  EXPECT_FALSE(out.log[0].eval_accuracy.has_value());
  EXPECT_EQ(evals, 3);
  for (const auto& e : out.log) EXPECT_GT(e.rationale, 0.0);
}

TEST(Trainer, RationaleAblationHasNoRationaleTerm) {
  Fixture f;
  auto cfg = f.Train(3);
  cfg.use_rationale = false;
  const auto out = RetrainServer(model::InitModel(f.cfg, 4), f.vocab, f.data.train, cfg);
  for (const auto& e : out.log) {
    EXPECT_EQ(e.rationale, 0.0);
    EXPECT_EQ(e.total, e.label);
  }
}

TEST(Trainer, ClientFinetuneIsLabelOnlyAndReducesLoss) {
  Fixture f;
  auto cfg = f.Train(40);
  const auto qa = eval::AsQARecords(f.data.train);
  const auto out = FinetuneClient(model::InitModel(f.cfg, 5), f.vocab, qa, cfg);
  ASSERT_GE(out.log.size(), 2u);
  EXPECT_EQ(out.log.front().rationale, 0.0);
  EXPECT_LT(out.log.back().label, out.log.front().label);
}

TEST(Trainer, InvalidConfigAndEmptyDataRejected) {
  Fixture f;
  auto cfg = f.Train(2);
  cfg.learning_rate = 0.0;
  try {
    RetrainServer(model::InitModel(f.cfg, 1), f.vocab, f.data.train, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  EXPECT_THROW(RetrainServer(model::InitModel(f.cfg, 1), f.vocab, {}, f.Train(2)), Error);
  EXPECT_THROW(FinetuneClient(model::InitModel(f.cfg, 1), f.vocab, {}, f.Train(2)), Error);
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c;
  c.batch_size = 3;
  c.learning_rate = 0.25;
  c.use_rationale = false;
  nlohmann::json j = c;
  const auto back = j.get<TrainConfig>();
  EXPECT_EQ(back.batch_size, 3u);
  EXPECT_EQ(back.learning_rate, 0.25);
  EXPECT_FALSE(back.use_rationale);
}
