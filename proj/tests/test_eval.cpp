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

#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppcf/core/error.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/eval/evaluate.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/model/transformer.hpp"

using namespace ppcf;
using namespace ppcf::eval;

namespace {

ToyTaskSpec Spec(TaskFamily f, std::size_t slice) {
  ToyTaskSpec s;
  s.family = f;
  s.vocab_slice = slice;
  s.train_size = 20;
  s.val_size = 10;
  s.test_size = 10;
  s.public_size = 30;
  return s;
}

class ToyFamilies : public ::testing::TestWithParam<TaskFamily> {};

}  // namespace

TEST_P(ToyFamilies, ItemsAreSolvableAndWellFormed) {
  const auto spec = Spec(GetParam(), 8);
  const ToyWorld world(spec);
  const auto data = MakeToyTask(spec);
  const auto vocab = world.MakeVocabulary();
  std::set<std::string> ids;
  for (const auto* split : {&data.train, &data.val, &data.test, &data.public_corpus}) {
    for (const auto& r : *split) {
      EXPECT_TRUE(ids.insert(r.id).second) << r.id;
      ASSERT_EQ(r.choices.size(), spec.choices_per_item);
      EXPECT_EQ(std::set<std::string>(r.choices.begin(), r.choices.end()).size(), r.choices.size());
      const auto solved = world.Solve(r.question);
      ASSERT_TRUE(solved.has_value()) << r.question;
      EXPECT_EQ(*solved, r.answer_text());
      EXPECT_EQ(r.rationale, world.Rationale(r.question, r.answer_text()));
      for (const auto& w : model::Vocabulary::Split(r.question + " " + r.rationale)) {
        EXPECT_TRUE(vocab.contains(w)) << w;
      }
    }
  }
  EXPECT_EQ(data.train.size(), 20u);
  EXPECT_EQ(data.public_corpus.size(), 30u);
}

TEST_P(ToyFamilies, DeterministicInSpec) {
  const auto spec = Spec(GetParam(), 6);
  EXPECT_EQ(MakeToyTask(spec).test, MakeToyTask(spec).test);
  auto other = spec;
  other.seed = 2;
  EXPECT_NE(MakeToyTask(other).test, MakeToyTask(spec).test);
}

INSTANTIATE_TEST_SUITE_P(All, ToyFamilies,
                         ::testing::Values(TaskFamily::kKeyValue, TaskFamily::kPattern, TaskFamily::kMix),
                         [](const auto& info) {
                           auto n = TaskFamilyName(info.param);
                           std::erase(n, '-');
                           return n;
                         });

TEST(ToyWorld, MixAnswerCombinesBothKeys) {
  const ToyWorld world(Spec(TaskFamily::kMix, 8));
  Rng rng(3);
  const auto item = world.MakeItem(rng, "x");
  const auto words = model::Vocabulary::Split(item.question);
  EXPECT_NE(item.question.find("mixing"), std::string::npos);
  // Swapping the operands keeps the answer (addition is commutative).
  std::vector<std::string> keys;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (words[i] == "the") keys.push_back(words[i + 1]);
  }
  ASSERT_EQ(keys.size(), 2u);
  const auto swapped = "mixing the " + keys[1] + " with the " + keys[0] + " gives what color ?";
  EXPECT_EQ(world.Solve(swapped), world.Solve(item.question));
}

TEST(ToyWorld, HintWordsSeedTheSubject) {
  const auto spec = Spec(TaskFamily::kKeyValue, 8);
  const ToyWorld world(spec);
  const auto base = MakeToyTask(spec).train[0];
  Rng rng(1);
  const auto item = world.MakeItem(rng, "h", model::Vocabulary::Split(base.question));
  EXPECT_EQ(world.Solve(item.question), world.Solve(base.question));
  EXPECT_FALSE(world.Solve("completely unrelated words").has_value());
}

TEST(ToyTaskSpec, ValidationAndParsing) {
  auto s = Spec(TaskFamily::kPattern, 2);
  EXPECT_THROW(s.Validate(), Error);
  s = Spec(TaskFamily::kKeyValue, 8);
  s.choices_per_item = 1;
  EXPECT_THROW(s.Validate(), Error);
  EXPECT_EQ(ParseTaskFamily("mix"), TaskFamily::kMix);
  try {
    ParseTaskFamily("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  nlohmann::json j = Spec(TaskFamily::kMix, 5);
  EXPECT_EQ(j.get<ToyTaskSpec>().vocab_slice, 5u);
  EXPECT_EQ(j.get<ToyTaskSpec>().family, TaskFamily::kMix);
}

TEST(ToyTask, WritesAllSplits) {
  const auto dir = testutil::FreshDir("eval_write");
  WriteToyTask(MakeToyTask(Spec(TaskFamily::kKeyValue, 4)), dir);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "public.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(LoadQARecords(dir / "test.jsonl").size(), 10u);
}

TEST(Evaluate, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(ArgmaxChoice({0.1, 0.5, 0.5}), 1u);
  EXPECT_EQ(ArgmaxChoice({-1.0, -1.0}), 0u);
  EXPECT_EQ(ArgmaxChoice({-3.0, -2.0, -9.0}), 1u);
}

TEST(Evaluate, ScoresAreMeanChoiceLogLikelihood) {
  const auto spec = Spec(TaskFamily::kKeyValue, 6);
  const auto vocab = ToyWorld(spec).MakeVocabulary();
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 8;
  c.max_seq_len = 32;
  const auto m = model::InitModel(c, 2);
  const auto item = MakeToyTask(spec).test[0];
  const std::string q = item.question;
  const std::string ans = item.answer_text();
  // Independent recomputation from the logits of one forward pass.
  std::vector<model::TokenId> toks{model::Vocabulary::kBos};
  for (auto t : vocab.Encode(q)) toks.push_back(t);
  toks.push_back(model::Vocabulary::kSep);
  const std::size_t begin = toks.size();
  toks.push_back(vocab.id(ans));
  const auto tr = m.Forward(toks, false);
  const std::size_t V = vocab.size();
  double mx = -1e300;
  for (std::size_t v = 0; v < V; ++v) mx = std::max(mx, static_cast<double>(tr.logits.data[(begin - 1) * V + v]));
  double z = 0.0;
  for (std::size_t v = 0; v < V; ++v) z += std::exp(tr.logits.data[(begin - 1) * V + v] - mx);
  const double expected = tr.logits.data[(begin - 1) * V + vocab.id(ans)] - mx - std::log(z);
  EXPECT_NEAR(ScoreChoice(m, vocab, q, ans), expected, 1e-5);
}

TEST(Evaluate, AccuracyCountsArgmaxMatches) {
  const auto spec = Spec(TaskFamily::kKeyValue, 6);
  const auto vocab = ToyWorld(spec).MakeVocabulary();
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 8;
  c.max_seq_len = 32;
  const auto m = model::InitModel(c, 2);
  const auto ds = AsQARecords(MakeToyTask(spec).test);
  const auto r = Evaluate(m, vocab, ds, "test");
  ASSERT_EQ(r.items.size(), ds.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(r.items[i].predicted, ArgmaxChoice(r.items[i].choice_scores));
    hits += r.items[i].predicted == r.items[i].correct;
  }
  EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(hits) / ds.size());
  EXPECT_EQ(ToJson(r)["sample_count"], ds.size());
  EXPECT_THROW(Evaluate(m, vocab, {}, "x"), Error);
}
