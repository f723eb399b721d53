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

#include "oracles.hpp"
#include "ppcf/core/error.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/prune/block_influence.hpp"
#include "ppcf/prune/plan.hpp"

using namespace ppcf;
using namespace ppcf::prune;
using model::Tensor;

namespace {

Tensor<double> Rows(std::vector<std::vector<double>> rows) {
  Tensor<double> t = Tensor<double>::Zeros({rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.data[i * rows[i].size() + j] = rows[i][j];
  }
  return t;
}

model::ModelConfig ToyConfig(std::size_t vocab, std::size_t layers) {
  model::ModelConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.n_layers = layers;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_seq_len = 48;
  return c;
}

// Zeroes the residual-branch outputs so the block is exactly the identity.
void MakePassThrough(model::Model& m, std::size_t block) {
  auto& b = m.mutable_weights().blocks[block];
  for (auto* t : {&b.attn_out_weight, &b.attn_out_bias, &b.fc2_weight, &b.fc2_bias}) {
    std::fill(t->data.begin(), t->data.end(), 0.0f);
  }
}

std::vector<SyntheticRecord> ToyData(const eval::ToyTaskSpec& spec, std::size_t n) {
  spec.Validate();
  eval::ToyTaskSpec s = spec;
  s.public_size = n;
  return eval::MakeToyTask(s).public_corpus;
}

}  // namespace

TEST(BlockInfluence, IdentityNegationOrthogonal) {
  const auto x = Rows({{1, 2, 3}, {-1, 0.5, 2}, {0, 0, 4}});
  auto neg = x;
  for (auto& v : neg.data) v = -v;
  EXPECT_NEAR(LayerCosineBI({x, x})[0], 0.0, 1e-12);
  EXPECT_NEAR(LayerCosineBI({x, neg})[0], 2.0, 1e-12);
  const auto a = Rows({{1, 0, 0}, {0, 1, 0}});
  const auto b = Rows({{0, 1, 0}, {0, 0, 3}});
  EXPECT_NEAR(LayerCosineBI({a, b})[0], 1.0, 1e-12);
}

TEST(BlockInfluence, PoolsRowsAcrossSamplesAndSkipsZeroRows) {
  BIAccumulator acc(1);
  const auto a = Rows({{1, 0}, {0, 0}});
  const auto b = Rows({{1, 0}, {1, 0}});
  acc.Add(std::vector<Tensor<double>>{a, b});
  const auto c = Rows({{1, 0}});
  const auto d = Rows({{0, 1}});
  acc.Add(std::vector<Tensor<double>>{c, d});
  EXPECT_EQ(acc.degenerate_rows(), 1u);
  EXPECT_EQ(acc.rows()[0], 2u);
  EXPECT_NEAR(acc.Scores()[0], 1.0 - (1.0 + 0.0) / 2.0, 1e-12);
  BIAccumulator empty(1);
  const auto z = Rows({{0, 0}});
  empty.Add(std::vector<Tensor<double>>{z, z});
  try {
    empty.Scores();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
  }
}

TEST(BlockInfluence, PassThroughBlockScoresZeroOnModel) {
  eval::ToyTaskSpec spec;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  auto m = model::InitModel(ToyConfig(vocab.size(), 4), 3);
  MakePassThrough(m, 2);
  const auto data = ToyData(spec, 6);
  const auto est = ComputeBI(m, vocab, data, BITarget::kLabel);
  ASSERT_EQ(est.scores.size(), 4u);
  EXPECT_NEAR(est.scores[2], 0.0, 1e-6);
  EXPECT_EQ(est.sample_count, 6u);
  for (std::size_t i : {0u, 1u, 3u}) EXPECT_GT(est.scores[i], 0.0);
}

TEST(BlockInfluence, DuplicatingDataLeavesScoresUnchanged) {
  eval::ToyTaskSpec spec;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  const auto m = model::InitModel(ToyConfig(vocab.size(), 3), 4);
  auto data = ToyData(spec, 5);
  const auto once = ComputeBI(m, vocab, data, BITarget::kRationale).scores;
  auto twice = data;
  twice.insert(twice.end(), data.begin(), data.end());
  const auto dup = ComputeBI(m, vocab, twice, BITarget::kRationale).scores;
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once[i], dup[i], 1e-12);
}

TEST(BlockInfluence, TargetPositionsAreASubsetOfRows) {
  eval::ToyTaskSpec spec;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  const auto m = model::InitModel(ToyConfig(vocab.size(), 2), 5);
  const auto data = ToyData(spec, 4);
  BIOptions all, target;
  target.positions = PositionSet::kTarget;
  const auto a = ComputeBI(m, vocab, data, BITarget::kLabel, all);
  const auto t = ComputeBI(m, vocab, data, BITarget::kLabel, target);
  EXPECT_LT(t.row_count, a.row_count);
  EXPECT_GT(t.row_count, 0u);
}

TEST(BlockInfluence, RationaleAwareReportSumsTerms) {
  eval::ToyTaskSpec spec;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  const auto m = model::InitModel(ToyConfig(vocab.size(), 3), 6);
  const auto data = ToyData(spec, 4);
  const auto r = RationaleAwareBI(m, vocab, data, true);
  const auto l = RationaleAwareBI(m, vocab, data, false);
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(r.rows[i].bi_combined, r.rows[i].bi_label + r.rows[i].bi_rationale);
    EXPECT_EQ(l.rows[i].bi_rationale, 0.0);
    EXPECT_DOUBLE_EQ(l.rows[i].bi_label, r.rows[i].bi_label);
  }
  const auto back = BIReportFromJson(ToJson(r));
  EXPECT_EQ(back.combined(), r.combined());
  EXPECT_EQ(back.layer_ids(), r.layer_ids());
  EXPECT_EQ(FormatBIReport(r).rfind("layer_id\tbi_label\tbi_rationale\tbi_combined\n", 0), 0u);
}

TEST(BlockInfluence, SeqReportRanksByDepth) {
  const auto m = model::InitModel(ToyConfig(8, 5), 1);
  const auto r = SeqReport(m);
  EXPECT_EQ(r.metric, "seq");
  const auto s = r.combined();
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s[i - 1], s[i]);
  const auto plan = PlanPruning(s, r.layer_ids(), 0.4, "seq");
  EXPECT_EQ(plan.remove, (std::vector<std::uint32_t>{4, 3}));
}

TEST(Plan, LayerCountUsesRounding) {
  EXPECT_EQ(LayersToRemove(0.25, 8), 2u);
  EXPECT_EQ(LayersToRemove(0.3, 8), 2u);
  EXPECT_EQ(LayersToRemove(0.5, 8), 4u);
  EXPECT_EQ(LayersToRemove(0.7, 8), 6u);
  EXPECT_EQ(LayersToRemove(0.1, 8), 1u);
  EXPECT_EQ(LayersToRemove(0.0, 8), 0u);
}

TEST(Plan, AscendingScoresWithTiesToDeeperLayer) {
  const std::vector<double> s = {0.9, 0.1, 0.5, 0.1, 0.3};
  const std::vector<std::uint32_t> ids = {0, 1, 2, 3, 4};
  EXPECT_EQ(PlanPruning(s, ids, 0.4, "bi").remove, (std::vector<std::uint32_t>{3, 1}));
  EXPECT_EQ(PlanPruning(s, ids, 0.6, "bi").remove, (std::vector<std::uint32_t>{3, 1, 4}));
}

TEST(Plan, GuardsAgainstRemovingEverything) {
  const std::vector<double> s(8, 0.5);
  std::vector<std::uint32_t> ids = {0, 1, 2, 3, 4, 5, 6, 7};
  for (double bad : {0.95, 1.0, -0.1}) {
    try {
      PlanPruning(s, ids, bad, "bi");
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kData);
    }
  }
  EXPECT_THROW(PlanPruning({0.1}, ids, 0.3, "bi"), Error);
}

TEST(Plan, PassThroughLayerIsPrunedFirst) {
  eval::ToyTaskSpec spec;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  auto m = model::InitModel(ToyConfig(vocab.size(), 8), 7);
  MakePassThrough(m, 5);
  const auto report = RationaleAwareBI(m, vocab, ToyData(spec, 4), true);
  for (double ratio : {0.1, 0.3, 0.5}) {
    const auto plan = PlanPruning(report.combined(), report.layer_ids(), ratio, "bi");
    ASSERT_FALSE(plan.remove.empty());
    EXPECT_EQ(plan.remove[0], 5u) << ratio;
  }
}

TEST(Plan, PruneArithmeticAndCheckpointMetadata) {
  const auto dense = model::InitModel(ToyConfig(10, 8), 8);
  const std::size_t per_layer = model::PerLayerParameterCount(dense.config());
  for (double r : {0.1, 0.25, 0.5, 0.7}) {
    const auto report = SeqReport(dense);
    const auto plan = PlanPruning(report.combined(), report.layer_ids(), r, "seq");
    const auto pruned = Prune(dense, plan);
    EXPECT_EQ(pruned.parameter_count(),
              dense.parameter_count() - static_cast<std::size_t>(std::lround(r * 8)) * per_layer);
  }
  model::Checkpoint ck{dense, model::Vocabulary(std::vector<std::string>{"a", "b", "c", "d", "e"}), {}};
  const auto report = SeqReport(dense);
  const auto plan = PlanPruning(report.combined(), report.layer_ids(), 0.25, "seq");
  const auto pck = PruneCheckpoint(ck, plan, report);
  EXPECT_EQ(PruningPlanFromJson(pck.metadata.at("pruning_plan")), plan);
  EXPECT_TRUE(pck.metadata.contains("bi_report"));
  EXPECT_EQ(pck.model.layer_ids().size(), 6u);
}
