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

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppcf/cli/commands.hpp"
#include "ppcf/cli/config.hpp"
#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/transformer.hpp"

using namespace ppcf;
using namespace ppcf::cli;
namespace fs = std::filesystem;

namespace {

Settings::EnvLookup FakeEnv(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    const auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun RunCliArgs(const std::vector<std::string>& args, std::map<std::string, std::string> env = {}) {
  std::ostringstream out, err;
  CliRun r;
  r.code = RunCli(args, out, err, FakeEnv(std::move(env)));
  r.out = out.str();
  r.err = err.str();
  return r;
}

// An 8-layer random checkpoint over the default toy vocabulary.
fs::path EightLayerCheckpoint(const fs::path& dir) {
  const auto vocab = eval::ToyWorld(eval::ToyTaskSpec{}).MakeVocabulary();
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.d_model = 8;
  c.n_layers = 8;
  c.n_heads = 2;
  c.d_ff = 8;
  c.max_seq_len = 48;
  const auto path = dir / "dense.ckpt";
  model::SaveCheckpoint(path, model::Checkpoint{model::InitModel(c, 1), vocab, {}});
  return path;
}

std::vector<std::string> TinyPipelineArgs(const fs::path& out) {
  return {"pipeline", "--quiet", "--out", out.string(),
          "--set", "task.vocab_slice=6", "--set", "task.train_size=8", "--set", "task.val_size=4",
          "--set", "task.test_size=8", "--set", "task.public_size=16",
          "--set", "model.d_model=16", "--set", "model.n_layers=4", "--set", "model.n_heads=2",
          "--set", "model.d_ff=16", "--set", "model.max_seq_len=48",
          "--set", "pretrain.max_steps=3", "--set", "pretrain.batch_size=4",
          "--set", "server.max_steps=2", "--set", "server.batch_size=4", "--set", "server.eval_samples=4",
          "--set", "client.max_steps=2", "--set", "client.batch_size=4",
          "--ratio", "1", "--prune-ratio", "0.5"};
}

}  // namespace

TEST(ConfigFile, ParsesSectionsCommentsAndQuotes) {
  const auto f = ConfigFile::Parse(
      "seed = 4\n# comment\n[privacy]\nepsilon = 2.5  # trailing\nsensitivity = \"bound\"\n\n[synth]\nratio=8\n");
  EXPECT_EQ(f.Get("run", "seed"), "4");
  EXPECT_EQ(f.Get("privacy", "epsilon"), "2.5");
  EXPECT_EQ(f.Get("privacy", "sensitivity"), "bound");
  EXPECT_EQ(f.Get("synth", "ratio"), "8");
  EXPECT_FALSE(f.Get("synth", "votes").has_value());
  EXPECT_THROW(ConfigFile::Parse("[broken\n"), Error);
  EXPECT_THROW(ConfigFile::Parse("no equals sign\n"), Error);
}

TEST(Settings, FlagBeatsEnvBeatsFileBeatsDefault) {
  const auto file = ConfigFile::Parse("[privacy]\nepsilon = 1\n[synth]\nratio = 2\nvotes = 5\n");
  const Settings s(file, {{{"privacy", "epsilon"}, "4"}},
                   FakeEnv({{"PPCF_PRIVACY_EPSILON", "3"}, {"PPCF_SYNTH_RATIO", "6"}}));
  EXPECT_EQ(s.Double("privacy", "epsilon", 0), 4.0);
  EXPECT_EQ(s.Source("privacy", "epsilon"), SettingSource::kFlag);
  EXPECT_EQ(s.UInt("synth", "ratio", 0), 6u);
  EXPECT_EQ(s.Source("synth", "ratio"), SettingSource::kEnv);
  EXPECT_EQ(s.UInt("synth", "votes", 0), 5u);
  EXPECT_EQ(s.Source("synth", "votes"), SettingSource::kFile);
  EXPECT_EQ(s.UInt("synth", "max_attempts", 7), 7u);
  EXPECT_EQ(s.Source("synth", "max_attempts"), SettingSource::kDefault);
  EXPECT_EQ(EnvVarName("synth", "max-in.flight"), "PPCF_SYNTH_MAX_IN_FLIGHT");
}

TEST(Settings, TypedAccessorsRejectBadValues) {
  const Settings s(ConfigFile::Parse("a = x\nb = -1\nc = maybe\n"), {}, FakeEnv({}));
  EXPECT_THROW(s.Double("run", "a", 0), Error);
  EXPECT_THROW(s.UInt("run", "b", 0), Error);
  EXPECT_THROW(s.Bool("run", "c", false), Error);
}

TEST(Settings, RunSeedDerivesComponentSeeds) {
  const Settings s(ConfigFile::Parse("seed = 11\n"), {}, FakeEnv({}));
  const auto c = ResolvePipelineConfig(s);
  EXPECT_EQ(c.seed, 11u);
  const auto d = ResolvePipelineConfig(Settings(ConfigFile{}, {}, FakeEnv({})));
  EXPECT_NE(c.server.seed, d.server.seed);
  EXPECT_NE(c.model_seed, d.model_seed);
  EXPECT_EQ(c.task.seed, d.task.seed);
}

TEST(Settings, ApiTokenIsNeverSerialized) {
  const Settings s(ConfigFile::Parse("[synth]\nbackend = remote\nbase_url = http://h:1/v1\napi_key_env = MY_KEY\n"),
                   {}, FakeEnv({{"MY_KEY", "sk-secret-value"}}));
  const auto c = ResolvePipelineConfig(s);
  const auto dumped = ToJson(c).dump();
  EXPECT_EQ(dumped.find("sk-secret-value"), std::string::npos);
  EXPECT_NE(dumped.find("MY_KEY"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto dir = testutil::FreshDir("cli_codes");
  const auto ckpt = EightLayerCheckpoint(dir);
  EXPECT_EQ(RunCliArgs({"--help"}).code, 0);
  EXPECT_EQ(RunCliArgs({}).code, 1);
  EXPECT_EQ(RunCliArgs({"nope"}).code, 1);
  EXPECT_EQ(RunCliArgs({"prune", "--out", (dir / "x.ckpt").string()}).code, 1);  // missing --checkpoint
  const auto too_many = RunCliArgs({"prune", "--checkpoint", ckpt.string(), "--out", (dir / "p.ckpt").string(),
                             "--metric", "seq", "--ratio", "0.95"});
  EXPECT_EQ(too_many.code, 2) << too_many.err;
  EXPECT_NE(too_many.err.find("\"exit_code\":2"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "p.ckpt"));
  EXPECT_EQ(RunCliArgs({"eval", "--checkpoint", (dir / "missing.ckpt").string(), "--data", "x.jsonl"}).code, 2);
  EXPECT_EQ(RunCliArgs({"prune", "--checkpoint", ckpt.string(), "--out", (dir / "p.ckpt").string(),
                 "--metric", "nope"}).code, 1);
  EXPECT_EQ(RunCliArgs({"pipeline", "--set", "privacy.epsilon=-1", "--out", (dir / "o").string()}).code, 1);
  EXPECT_EQ(RunCliArgs({"pipeline", "--set", "broken", "--out", (dir / "o").string()}).code, 1);
}

TEST(Cli, SeqMetricRanksByDepthAndPruneReportsCounts) {
  const auto dir = testutil::FreshDir("cli_seq");
  const auto ckpt = EightLayerCheckpoint(dir);
  const auto bi = RunCliArgs({"bi", "--checkpoint", ckpt.string(), "--metric", "seq", "--out", (dir / "bi.json").string()});
  ASSERT_EQ(bi.code, 0) << bi.err;
  std::istringstream lines(bi.out);
  std::string header, line;
  std::getline(lines, header);
  EXPECT_EQ(header, "layer_id\tbi_label\tbi_rationale\tbi_combined");
  std::vector<double> combined;
  while (std::getline(lines, line)) combined.push_back(std::stod(line.substr(line.rfind('\t') + 1)));
  ASSERT_EQ(combined.size(), 8u);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_GT(combined[i - 1], combined[i]);

  const auto pr = RunCliArgs({"prune", "--checkpoint", ckpt.string(), "--report", (dir / "bi.json").string(),
                       "--out", (dir / "p.ckpt").string(), "--ratio", "0.25"});
  ASSERT_EQ(pr.code, 0) << pr.err;
  const auto j = nlohmann::json::parse(pr.out);
  EXPECT_EQ(j["remove"], (std::vector<int>{7, 6}));
  const auto dense = model::LoadCheckpoint(ckpt);
  EXPECT_EQ(j["parameters_after"].get<std::size_t>(),
            dense.model.parameter_count() - 2 * model::PerLayerParameterCount(dense.model.config()));
  EXPECT_TRUE(fs::exists(dir / "p.ckpt.meta.json"));
}

TEST(Cli, EnvironmentOverridesConfigFile) {
  const auto dir = testutil::FreshDir("cli_env");
  WriteFileText(dir / "c.toml", "[task]\nvocab_slice = 5\n");
  const auto a = RunCliArgs({"make-task", "--config", (dir / "c.toml").string(), "--out", (dir / "a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(nlohmann::json::parse(a.out)["task"]["vocab_slice"], 5);
  const auto b = RunCliArgs({"make-task", "--config", (dir / "c.toml").string(), "--out", (dir / "b").string()},
                     {{"PPCF_TASK_VOCAB_SLICE", "7"}});
  EXPECT_EQ(nlohmann::json::parse(b.out)["task"]["vocab_slice"], 7);
  const auto c = RunCliArgs({"make-task", "--config", (dir / "c.toml").string(), "--out", (dir / "c").string(),
                      "--vocab-slice", "9"},
                     {{"PPCF_TASK_VOCAB_SLICE", "7"}});
  EXPECT_EQ(nlohmann::json::parse(c.out)["task"]["vocab_slice"], 9);
}

TEST(Cli, PipelineIsDeterministic) {
  const auto dir = testutil::FreshDir("cli_pipeline");
  const auto out = dir / "run";
  const auto first = RunCliArgs(TinyPipelineArgs(out));
  ASSERT_EQ(first.code, 0) << first.err;
  const auto final_a = ReadFileBytes(out / "client" / "final.ckpt");
  auto summary_a = nlohmann::json::parse(first.out);
  fs::remove_all(out);
  const auto second = RunCliArgs(TinyPipelineArgs(out));
  ASSERT_EQ(second.code, 0) << second.err;
  auto summary_b = nlohmann::json::parse(second.out);
  EXPECT_EQ(ReadFileBytes(out / "client" / "final.ckpt"), final_a);
  summary_a.erase("seconds");
  summary_b.erase("seconds");
  EXPECT_EQ(summary_a, summary_b);
  EXPECT_EQ(summary_a["removed_layers"].size(), 2u);
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "server" / "model.ckpt"));
}
