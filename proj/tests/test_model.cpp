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
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppcf/core/error.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/optimizer.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

using namespace ppcf;
using namespace ppcf::model;

namespace {

ModelConfig SmallConfig(std::size_t layers = 2) {
  ModelConfig c;
  c.vocab_size = 13;
  c.d_model = 8;
  c.n_layers = layers;
  c.n_heads = 2;
  c.d_ff = 12;
  c.max_seq_len = 10;
  return c;
}

}  // namespace

TEST(Vocabulary, SpecialTokensComeFirst) {
  Vocabulary v({"red", "blue", "red"});
  EXPECT_EQ(v.size(), Vocabulary::kNumSpecial + 2);
  EXPECT_EQ(v.id("red"), Vocabulary::kNumSpecial);
  EXPECT_EQ(v.id("nope"), Vocabulary::kUnk);
  EXPECT_TRUE(v.contains("blue"));
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  Vocabulary v({"what", "color", "is", "the", "sky", "?"});
  const auto ids = v.Encode("what color is the sky ?");
  EXPECT_EQ(ids.size(), 6u);
  EXPECT_EQ(v.Decode(ids), "what color is the sky ?");
  EXPECT_EQ(Vocabulary::FromTokens(v.tokens()).tokens(), v.tokens());
}

TEST(Config, ValidateRejectsIndivisibleHeads) {
  ModelConfig c = SmallConfig();
  c.n_heads = 3;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(Transformer, InitIsDeterministic) {
  EXPECT_EQ(InitModel(SmallConfig(), 5).weights(), InitModel(SmallConfig(), 5).weights());
  EXPECT_NE(InitModel(SmallConfig(), 5).weights(), InitModel(SmallConfig(), 6).weights());
}

TEST(Transformer, ForwardShapesAndHiddenStates) {
  const auto m = InitModel(SmallConfig(3), 1);
  const std::vector<TokenId> toks{1, 5, 6, 7};
  const auto tr = m.Forward(toks, true);
  EXPECT_EQ(tr.logits.shape, (std::vector<std::size_t>{4, 13}));
  ASSERT_TRUE(tr.hidden_states.has_value());
  EXPECT_EQ(tr.hidden_states->size(), 4u);  // X_0 .. X_3
  EXPECT_FALSE(m.Forward(toks, false).hidden_states.has_value());
}

TEST(Transformer, CausalMaskIgnoresFutureTokens) {
  const auto m = testutil::RandomModel64(SmallConfig(), 3);
  const auto a = m.Forward(std::vector<TokenId>{1, 5, 6, 7, 8}, false);
  const auto b = m.Forward(std::vector<TokenId>{1, 5, 6, 9, 2}, false);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t v = 0; v < 13; ++v) {
      EXPECT_EQ(a.logits.data[t * 13 + v], b.logits.data[t * 13 + v]);
    }
  }
}

TEST(Transformer, RejectsOutOfRangeInput) {
  const auto m = InitModel(SmallConfig(), 1);
  EXPECT_THROW(m.Forward(std::vector<TokenId>{99}, false), Error);
  EXPECT_THROW(m.Forward(std::vector<TokenId>(11, 1), false), Error);
  EXPECT_THROW(m.Forward(std::vector<TokenId>{}, false), Error);
}

TEST(Transformer, GradientsMatchFiniteDifferences) {
  const auto m = testutil::RandomModel64(SmallConfig(), 11);
  Rng rng(2);
  std::vector<SequenceExample> batch{testutil::RandomExample(13, 6, rng),
                                     testutil::RandomExample(13, 4, rng)};
  const auto r = testutil::CheckGradients(m, batch);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_tensor;
  EXPECT_EQ(r.checked, m.parameter_count());
}

TEST(Transformer, FullyMaskedBatchIsDataError) {
  const auto m = InitModel(SmallConfig(), 1);
  SequenceExample ex{{1, 2}, {2, 3}, {0, 0}};
  EXPECT_THROW(ComputeLossAndGradients(m, std::span(&ex, 1)), Error);
}

TEST(Transformer, LossIgnoresMaskedTargets) {
  const auto m = InitModel(SmallConfig(), 1);
  SequenceExample a{{1, 5, 6}, {5, 6, 2}, {0, 1, 1}};
  SequenceExample b = a;
  b.targets[0] = 9;
  EXPECT_EQ(ComputeLoss(m, std::span(&a, 1)), ComputeLoss(m, std::span(&b, 1)));
}

TEST(Transformer, RemoveLayersKeepsSurvivorsExactly) {
  const auto m = InitModel(SmallConfig(4), 2);
  const auto p = RemoveLayers(m, {1, 3});
  EXPECT_EQ(p.layer_ids(), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(p.config().n_layers, 2u);
  EXPECT_EQ(p.weights().blocks[1], m.weights().blocks[2]);
  EXPECT_EQ(p.parameter_count(), m.parameter_count() - 2 * PerLayerParameterCount(m.config()));
  EXPECT_THROW(RemoveLayers(m, {7}), Error);
}

TEST(Transformer, PerLayerCountMatchesTensorSizes) {
  const auto cfg = SmallConfig(2);
  const std::size_t d = cfg.d_model, f = cfg.d_ff;
  const std::size_t expected = 2 * d + d * 3 * d + 3 * d + d * d + d + 2 * d + d * f + f + f * d + d;
  EXPECT_EQ(PerLayerParameterCount(cfg), expected);
}

TEST(Optimizer, FirstAdamWStepMovesBySignTimesLr) {
  // With bias correction the first step is lr * g / (|g| + eps') plus decay.
  auto m = InitModel(SmallConfig(2), 4);
  auto grads = ZerosLike<double>(m.weights());
  grads.final_norm_bias.data[0] = 0.5;
  grads.final_norm_bias.data[1] = -2.0;
  AdamWParams p;
  p.learning_rate = 0.01;
  p.clip_norm = 0.0;
  auto st = MakeAdamWState(m);
  const auto before = m.weights().final_norm_bias.data;
  ApplyAdamW(m, grads, st, p);
  EXPECT_NEAR(m.weights().final_norm_bias.data[0], before[0] - 0.01, 1e-6);
  EXPECT_NEAR(m.weights().final_norm_bias.data[1], before[1] + 0.01, 1e-6);
  EXPECT_EQ(m.weights().final_norm_bias.data[2], before[2]);
}

TEST(Optimizer, ClippingBoundsGradientNorm) {
  auto grads = ZerosLike<double>(InitModel(SmallConfig(2), 4).weights());
  grads.final_norm_bias.data[0] = 3.0;
  grads.final_norm_bias.data[1] = 4.0;
  EXPECT_DOUBLE_EQ(GradientNorm(grads), 5.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint ck{RemoveLayers(InitModel(SmallConfig(3), 9), {1}), Vocabulary({"a", "b", "c", "d", "e", "f", "g", "h"}),
                      {{"stage", "test"}}};
  const auto bytes = EncodeCheckpoint(ck);
  const auto back = DecodeCheckpoint(bytes);
  EXPECT_EQ(back.model.weights(), ck.model.weights());
  EXPECT_EQ(back.model.layer_ids(), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(back.vocab.tokens(), ck.vocab.tokens());
  EXPECT_EQ(back.metadata["stage"], "test");
  EXPECT_EQ(EncodeCheckpoint(back), bytes);
}

TEST(Checkpoint, CorruptionIsDataError) {
  Checkpoint ck{InitModel(SmallConfig(2), 9), Vocabulary({"a", "b", "c", "d", "e", "f", "g", "h"}), {}};
  auto bytes = EncodeCheckpoint(ck);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(DecodeCheckpoint(bad_magic), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(DecodeCheckpoint(truncated), Error);
  try {
    DecodeCheckpoint(truncated);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}
