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

#include "ppcf/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"
#include "ppcf/eval/evaluate.hpp"
#include "ppcf/fed/socket.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/prune/block_influence.hpp"
#include "ppcf/prune/plan.hpp"
#include "ppcf/synth/factory.hpp"
#include "ppcf/synth/synthesize.hpp"

namespace ppcf::cli {
namespace {

namespace fs = std::filesystem;

void Log(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n' << std::flush;
}

distill::TrainConfig ResolveTrain(const Settings& s, const std::string& section,
                                  distill::TrainConfig d, std::uint64_t run_seed) {
  distill::TrainConfig c;
  c.batch_size = s.UInt(section, "batch_size", d.batch_size);
  c.learning_rate = s.Double(section, "learning_rate", d.learning_rate);
  c.max_steps = s.UInt(section, "max_steps", d.max_steps);
  c.seed = s.UInt(section, "seed", run_seed);
  c.eval_every = s.UInt(section, "eval_every", d.eval_every);
  c.max_question_len = s.UInt(section, "max_question_len", d.max_question_len);
  c.max_target_len = s.UInt(section, "max_target_len", d.max_target_len);
  c.weight_decay = s.Double(section, "weight_decay", d.weight_decay);
  c.clip_norm = s.Double(section, "clip_norm", d.clip_norm);
  c.use_rationale = s.Bool(section, "use_rationale", d.use_rationale);
  return c;
}

// Pretraining is a desk-scale substitute for a downloaded base model, so
// its defaults are tuned for the toy task.
distill::TrainConfig DefaultPretrain() {
  distill::TrainConfig c;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.max_steps = 600;
  c.eval_every = 100;
  return c;
}

void RequireInput(const fs::path& p, const std::string& what) {
  if (p.empty()) ThrowUsage(what + " is required");
  if (!fs::exists(p)) ThrowData(what + " not found: " + p.string());
}

void RequireOutput(const fs::path& p, const std::string& what) {
  if (p.empty()) ThrowUsage(what + " is required");
}

void EnsureParent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::vector<std::string> RecordTexts(const std::vector<SyntheticRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) {
    out.push_back(r.question);
    for (const auto& c : r.choices) out.push_back(c);
    out.push_back(r.rationale);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::Validate() const {
  task.Validate();
  if (!(epsilon > 0.0)) ThrowUsage("privacy.epsilon must be > 0");
  if (pretrain.max_steps > 0) pretrain.Validate();
  if (client.max_steps > 0) client.Validate();
  server.Validate();
  auto check = [](const fs::path& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) ThrowData(std::string(what) + " not found: " + p.string());
  };
  check(paths.base_checkpoint, "paths.base_checkpoint");
  check(paths.public_data, "paths.public_data");
  check(paths.private_data, "paths.private_data");
  check(paths.eval_data, "paths.eval_data");
  check(paths.embedding_table, "paths.embedding_table");
  if (paths.private_data.empty() != paths.eval_data.empty()) {
    ThrowUsage("paths.private_data and paths.eval_data must be given together");
  }
}

nlohmann::json ToJson(const PipelineConfig& c) {
  nlohmann::json model = c.model;
  return {{"seed", c.seed},
          {"paths",
           {{"output_dir", c.paths.output_dir.string()},
            {"base_checkpoint", c.paths.base_checkpoint.string()},
            {"public_data", c.paths.public_data.string()},
            {"private_data", c.paths.private_data.string()},
            {"eval_data", c.paths.eval_data.string()},
            {"embedding_table", c.paths.embedding_table.string()}}},
          {"task", c.task},
          {"model", model},
          {"model_seed", c.model_seed},
          {"pretrain", c.pretrain},
          {"privacy",
           {{"epsilon", c.epsilon},
            {"sensitivity", c.sensitivity_mode == dp::SensitivityMode::kExact ? "exact" : "bound"}}},
          {"server", fed::ToJson(c.server)},
          {"client", c.client}};
}

PipelineConfig ResolvePipelineConfig(const Settings& s) {
  PipelineConfig c;
  c.seed = s.UInt("run", "seed", 1);

  c.paths.output_dir = s.String("paths", "output_dir", c.paths.output_dir.string());
  c.paths.base_checkpoint = s.String("paths", "base_checkpoint", "");
  c.paths.public_data = s.String("paths", "public_data", "");
  c.paths.private_data = s.String("paths", "private_data", "");
  c.paths.eval_data = s.String("paths", "eval_data", "");
  c.paths.embedding_table = s.String("paths", "embedding_table", "");

  const eval::ToyTaskSpec dt;
  c.task.family = eval::ParseTaskFamily(s.String("task", "family", eval::TaskFamilyName(dt.family)));
  c.task.vocab_slice = s.UInt("task", "vocab_slice", dt.vocab_slice);
  c.task.choices_per_item = s.UInt("task", "choices_per_item", dt.choices_per_item);
  c.task.seed = s.UInt("task", "seed", dt.seed);
  c.task.train_size = s.UInt("task", "train_size", dt.train_size);
  c.task.val_size = s.UInt("task", "val_size", dt.val_size);
  c.task.test_size = s.UInt("task", "test_size", dt.test_size);
  c.task.public_size = s.UInt("task", "public_size", dt.public_size);

  const model::ModelConfig dm;
  c.model.d_model = s.UInt("model", "d_model", dm.d_model);
  c.model.n_layers = s.UInt("model", "n_layers", dm.n_layers);
  c.model.n_heads = s.UInt("model", "n_heads", dm.n_heads);
  c.model.d_ff = s.UInt("model", "d_ff", dm.d_ff);
  c.model.max_seq_len = s.UInt("model", "max_seq_len", dm.max_seq_len);
  c.model_seed = s.UInt("model", "seed", c.seed);

  c.pretrain = ResolveTrain(s, "pretrain", DefaultPretrain(), c.seed);

  c.epsilon = s.Double("privacy", "epsilon", 3.0);
  const std::string mode = s.String("privacy", "sensitivity", "exact");
  if (mode == "exact") {
    c.sensitivity_mode = dp::SensitivityMode::kExact;
  } else if (mode == "bound") {
    c.sensitivity_mode = dp::SensitivityMode::kBound;
  } else {
    ThrowUsage("privacy.sensitivity must be exact | bound, got '" + mode + "'");
  }

  auto& srv = c.server;
  srv.seed = c.seed;
  srv.backend.kind = synth::ParseBackendKind(s.String("synth", "backend", "stub"));
  srv.backend.world = c.task;
  srv.backend.stub.seed = s.UInt("synth", "stub_seed", c.seed);
  srv.backend.stub.disagree_rate = s.Double("synth", "disagree_rate", 0.0);
  const synth::RemoteOptions dr;
  srv.backend.remote.base_url = s.String("synth", "base_url", dr.base_url);
  srv.backend.remote.model = s.String("synth", "model", dr.model);
  srv.backend.remote.api_key_env = s.String("synth", "api_key_env", dr.api_key_env);
  srv.backend.remote.timeout_seconds = s.Double("synth", "timeout_seconds", dr.timeout_seconds);
  srv.backend.remote.retries = s.UInt("synth", "retries", dr.retries);
  srv.backend.remote.backoff_seconds = s.Double("synth", "backoff_seconds", dr.backoff_seconds);
  const synth::SynthesisOptions ds;
  srv.synth.ratio = s.UInt("synth", "ratio", ds.ratio);
  srv.synth.votes = s.UInt("synth", "votes", ds.votes);
  srv.synth.max_attempts = s.UInt("synth", "max_attempts", ds.max_attempts);
  srv.synth.question_temperature = s.Double("synth", "question_temperature", ds.question_temperature);
  srv.synth.answer_temperature = s.Double("synth", "answer_temperature", ds.answer_temperature);
  srv.synth.rationale_temperature =
      s.Double("synth", "rationale_temperature", ds.rationale_temperature);
  srv.synth.max_in_flight = s.UInt("synth", "max_in_flight", ds.max_in_flight);

  srv.prune_ratio = s.Double("prune", "ratio", 0.30);
  srv.prune_metric = s.String("prune", "metric", "bi");
  srv.use_rationale = s.Bool("prune", "use_rationale", true);
  srv.bi.positions = prune::ParsePositionSet(s.String("prune", "positions", "all"));

  srv.retrain = ResolveTrain(s, "server", distill::TrainConfig{}, c.seed);
  srv.bi.limits = srv.retrain.limits();
  srv.server_eval_samples = s.UInt("server", "eval_samples", srv.server_eval_samples);
  c.listen = s.String("server", "listen", c.listen);
  c.sessions = s.UInt("server", "sessions", 0);
  c.progress_capacity = s.UInt("server", "progress_capacity", c.progress_capacity);

  c.client = ResolveTrain(s, "client", distill::TrainConfig{}, c.seed);
  c.server_endpoint = s.String("client", "server", c.server_endpoint);
  c.wire_dump = s.String("client", "wire_dump", "");
  c.evaluate_base = s.Bool("client", "evaluate_base", true);
  return c;
}

fed::ClientConfig MakeClientConfig(const PipelineConfig& c) {
  fed::ClientConfig cc;
  cc.private_data = c.paths.private_data;
  cc.eval_data = c.paths.eval_data;
  cc.base_checkpoint = c.paths.base_checkpoint;
  cc.embedding_table = c.paths.embedding_table;
  cc.epsilon = c.epsilon;
  cc.sensitivity_mode = c.sensitivity_mode;
  cc.finetune = c.client;
  cc.seed = c.seed;
  cc.output_dir = c.paths.output_dir;
  cc.wire_dump = c.wire_dump;
  cc.evaluate_base = c.evaluate_base;
  return cc;
}

// ---------------------------------------------------------------------------
// Shared phases

model::Vocabulary BuildVocabulary(const eval::ToyTaskSpec& task,
                                  const std::vector<std::string>& extra_text) {
  std::vector<std::string> words = eval::ToyWorld(task).Words();
  for (const auto& text : extra_text) {
    for (auto& w : model::Vocabulary::Split(text)) words.push_back(std::move(w));
  }
  return model::Vocabulary(words);  // duplicates keep their first position
}

model::Checkpoint PretrainBase(const PipelineConfig& c,
                               const std::vector<SyntheticRecord>& corpus,
                               const std::vector<QARecord>& val, std::ostream* log) {
  if (corpus.empty()) ThrowData("pretrain: public corpus is empty");
  model::Checkpoint ck;
  ck.vocab = BuildVocabulary(c.task, RecordTexts(corpus));
  model::ModelConfig mc = c.model;
  mc.vocab_size = ck.vocab.size();
  mc.Validate();
  distill::TrainHooks hooks;
  if (!val.empty()) {
    hooks.eval = [&](const model::Model& m) {
      return eval::Evaluate(m, ck.vocab, val, "val", c.pretrain.limits()).accuracy;
    };
  }
  hooks.progress = [&](const distill::TrainLogEntry& e) {
    std::string line = "pretrain: step " + std::to_string(e.step) + " loss " + std::to_string(e.total);
    if (e.eval_accuracy) line += " val_accuracy " + std::to_string(*e.eval_accuracy);
    Log(log, line);
  };
  auto trained = distill::RetrainServer(model::InitModel(mc, c.model_seed), ck.vocab, corpus,
                                        c.pretrain, hooks);
  ck.model = std::move(trained.model);
  ck.metadata = {{"stage", "pretrained"}, {"pretrain", c.pretrain}, {"task", c.task},
                 {"model_seed", c.model_seed}};
  if (!trained.log.empty()) ck.metadata["final_loss"] = trained.log.back().total;
  return ck;
}

nlohmann::json ToJson(const PipelineSummary& s) {
  return {{"dense_accuracy", s.dense_accuracy},
          {"pruned_accuracy", s.pruned_accuracy},
          {"retrained_accuracy", s.retrained_accuracy},
          {"final_accuracy", s.final_accuracy},
          {"removed_layers", s.removed_layers},
          {"synthetic_records", s.synthetic_records},
          {"seconds", s.seconds}};
}

PipelineSummary RunPipeline(const PipelineConfig& cfg, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig c = cfg;
  c.Validate();
  const fs::path out = c.paths.output_dir;
  fs::create_directories(out);
  const auto config = ToJson(cfg);
  auto sidecar = [&](const fs::path& p) { WriteSidecar(p, config, c.seed); };

  // Fixture data when none is supplied.
  if (c.paths.private_data.empty() || (c.paths.base_checkpoint.empty() && c.paths.public_data.empty())) {
    const auto data = eval::MakeToyTask(c.task);
    const fs::path dir = out / "data";
    fs::create_directories(dir);
    eval::WriteToyTask(data, dir);
    for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "public.jsonl"}) sidecar(dir / f);
    if (c.paths.private_data.empty()) {
      c.paths.private_data = dir / "train.jsonl";
      c.paths.eval_data = dir / "test.jsonl";
    }
    if (c.paths.public_data.empty()) c.paths.public_data = dir / "public.jsonl";
    Log(log, "pipeline: wrote toy task data to " + dir.string());
  }

  if (c.paths.base_checkpoint.empty()) {
    const auto corpus = LoadSyntheticRecords(c.paths.public_data);
    const fs::path val_path = c.paths.public_data.parent_path() / "val.jsonl";
    const auto val = fs::exists(val_path) ? LoadQARecords(val_path) : std::vector<QARecord>{};
    const auto base = PretrainBase(c, corpus, val, log);
    c.paths.base_checkpoint = out / "base.ckpt";
    model::SaveCheckpoint(c.paths.base_checkpoint, base);
    sidecar(c.paths.base_checkpoint);
  }

  const auto base = model::LoadCheckpoint(c.paths.base_checkpoint);
  fed::ClientConfig client = MakeClientConfig(c);
  client.output_dir = out / "client";
  fs::create_directories(client.output_dir);
  if (client.wire_dump.empty()) client.wire_dump = out / "client" / "wire_client_to_server.bin";
  const auto outcome = fed::RunLoopback(client, base, c.server, log, out / "server");

  PipelineSummary s;
  s.retrained_accuracy = outcome.metrics.at("pre_finetune_accuracy").get<double>();
  s.final_accuracy = outcome.metrics.at("post_finetune_accuracy").get<double>();
  const auto eval_records = LoadQARecords(c.paths.eval_data);
  const auto limits = c.client.limits();
  s.dense_accuracy = outcome.metrics.contains("base_accuracy")
                         ? outcome.metrics["base_accuracy"].get<double>()
                         : eval::Evaluate(base.model, base.vocab, eval_records, "eval", limits).accuracy;
  const auto plan = prune::PruningPlanFromJson(outcome.received.metadata.at("pruning_plan"));
  s.removed_layers = plan.remove;
  s.pruned_accuracy =
      eval::Evaluate(prune::Prune(base.model, plan), base.vocab, eval_records, "eval", limits).accuracy;
  const auto gen = outcome.received.metadata.at("generation_report");
  s.synthetic_records = gen.at("accepted").get<std::size_t>();
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  WriteFileText(out / "summary.json", ToJson(s).dump(2) + "\n");
  sidecar(out / "summary.json");
  return s;
}

// ---------------------------------------------------------------------------
// Command-line front end

namespace {

struct Binding {
  CLI::Option* option;
  std::string section;
  std::string key;
  std::shared_ptr<std::string> value;
};

struct Flag {
  CLI::Option* option;
  std::string section;
  std::string key;
  std::string value;  // assigned when the flag is present
  std::shared_ptr<bool> set;
};

// One subcommand with its setting-mirroring options, its own file
// arguments and the common options.
struct Command {
  CLI::App* app = nullptr;
  std::vector<Binding> bindings;
  std::vector<Flag> flags;
  std::map<std::string, std::shared_ptr<std::string>> files;
  std::string config;
  std::vector<std::string> sets;
  std::string seed;
  bool quiet = false;

  void Setting(const std::string& name, const std::string& section, const std::string& key,
               const std::string& help) {
    auto v = std::make_shared<std::string>();
    auto* opt = app->add_option(name, *v, help + " [" + section + "." + key + "]");
    bindings.push_back({opt, section, key, v});
  }
  void Switch(const std::string& name, const std::string& section, const std::string& key,
              const std::string& value, const std::string& help) {
    auto b = std::make_shared<bool>(false);
    auto* opt = app->add_flag(name, *b, help + " [" + section + "." + key + "=" + value + "]");
    flags.push_back({opt, section, key, value, b});
  }
  void File(const std::string& name, const std::string& help, bool required) {
    auto v = std::make_shared<std::string>();
    auto* opt = app->add_option(name, *v, help);
    if (required) opt->required();
    files[name] = v;
  }
  fs::path Path(const std::string& name) const {
    const auto it = files.find(name);
    return it == files.end() ? fs::path{} : fs::path(*it->second);
  }
  std::string Text(const std::string& name) const {
    const auto it = files.find(name);
    return it == files.end() ? std::string{} : *it->second;
  }

  Settings MakeSettings(const Settings::EnvLookup& env) const {
    ConfigFile file;
    if (!config.empty()) {
      if (!fs::exists(config)) ThrowData("config file not found: " + config);
      file = ConfigFile::Load(config);
    }
    Settings s(file, {}, env);
    for (const auto& a : sets) {
      const auto eq = a.find('=');
      const auto dot = a.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        ThrowUsage("--set expects section.key=value, got '" + a + "'");
      }
      s.SetFlag(a.substr(0, dot), a.substr(dot + 1, eq - dot - 1), a.substr(eq + 1));
    }
    for (const auto& b : bindings) {
      if (b.option->count() > 0) s.SetFlag(b.section, b.key, *b.value);
    }
    for (const auto& f : flags) {
      if (*f.set) s.SetFlag(f.section, f.key, f.value);
    }
    if (!seed.empty()) s.SetFlag("run", "seed", seed);
    return s;
  }
};

Command& AddCommand(CLI::App& root, std::vector<std::unique_ptr<Command>>& all,
                    const std::string& name, const std::string& description) {
  auto cmd = std::make_unique<Command>();
  cmd->app = root.add_subcommand(name, description);
  cmd->app->add_option("--config", cmd->config, "Configuration file ([section] key = value)");
  cmd->app->add_option("--seed", cmd->seed, "Run seed [run.seed]");
  cmd->app->add_option("--set", cmd->sets, "Override any setting: section.key=value (repeatable)");
  cmd->app->add_flag("--quiet", cmd->quiet, "Suppress progress output on stderr");
  all.push_back(std::move(cmd));
  return *all.back();
}

void WriteJsonArtifact(const fs::path& path, const nlohmann::json& j, const nlohmann::json& config,
                       std::uint64_t seed) {
  EnsureParent(path);
  WriteFileText(path, j.dump(2) + "\n");
  WriteSidecar(path, config, seed);
}

void SaveCheckpointArtifact(const fs::path& path, const model::Checkpoint& ck,
                            const nlohmann::json& config, std::uint64_t seed) {
  EnsureParent(path);
  model::SaveCheckpoint(path, ck);
  WriteSidecar(path, config, seed);
}

void ErrorLine(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  err << nlohmann::json{{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}}.dump()
      << '\n';
}

// Per-command bodies. `c` is the resolved configuration, `cmd` holds the
// file arguments, `log` is null when --quiet.
using Body = std::function<void(const Command&, const PipelineConfig&, std::ostream&, std::ostream*)>;

void MakeTask(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream*) {
  const fs::path dir = cmd.Path("--out");
  RequireOutput(dir, "--out");
  fs::create_directories(dir);
  eval::WriteToyTask(eval::MakeToyTask(c.task), dir);
  nlohmann::json task = c.task;
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "public.jsonl"}) {
    WriteSidecar(dir / f, {{"task", task}}, c.task.seed);
  }
  out << nlohmann::json{{"output_dir", dir.string()}, {"task", task}}.dump() << '\n';
}

void Pretrain(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const fs::path data = cmd.Path("--data"), val_path = cmd.Path("--eval"), dst = cmd.Path("--out");
  RequireInput(data, "--data");
  if (!val_path.empty()) RequireInput(val_path, "--eval");
  RequireOutput(dst, "--out");
  const auto corpus = LoadSyntheticRecords(data);
  const auto val = val_path.empty() ? std::vector<QARecord>{} : LoadQARecords(val_path);
  const auto ck = PretrainBase(c, corpus, val, log);
  SaveCheckpointArtifact(dst, ck, ToJson(c), c.seed);
  nlohmann::json r = {{"checkpoint", dst.string()}, {"parameters", ck.model.parameter_count()}};
  if (!val.empty()) r["val_accuracy"] = eval::Evaluate(ck.model, ck.vocab, val, "val").accuracy;
  out << r.dump() << '\n';
}

void Perturb(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream*) {
  fed::ClientConfig cc = MakeClientConfig(c);
  cc.private_data = cmd.Path("--data");
  cc.base_checkpoint = cmd.Path("--checkpoint");
  const fs::path dst = cmd.Path("--out");
  RequireInput(cc.private_data, "--data");
  RequireInput(cc.base_checkpoint, "--checkpoint");
  if (!cc.embedding_table.empty()) RequireInput(cc.embedding_table, "paths.embedding_table");
  RequireOutput(dst, "--out");
  const auto records = LoadQARecords(cc.private_data);
  const auto base = model::LoadCheckpoint(cc.base_checkpoint);
  double sensitivity = 0.0;
  const auto perturbed = fed::PerturbPrivateData(records, base, cc, &sensitivity);
  EnsureParent(dst);
  WriteJsonLines(dst, ToJsonRows(perturbed));
  WriteSidecar(dst, fed::ToJson(cc), c.seed);
  out << nlohmann::json{{"records", perturbed.size()}, {"epsilon", c.epsilon},
                        {"sensitivity", sensitivity}}.dump()
      << '\n';
}

void Synth(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const fs::path data = cmd.Path("--data"), dst = cmd.Path("--out"), report = cmd.Path("--report");
  RequireInput(data, "--data");
  RequireOutput(dst, "--out");
  const auto dp = LoadPerturbedRecords(data);
  if (dp.empty()) ThrowData("synth: no perturbed records in " + data.string());
  c.server.synth.Validate();
  auto backend = synth::MakeBackend(c.server.backend);
  Rng rng = Rng(c.server.seed).Split(0x73796e7468);
  Log(log, "synth: generating " + std::to_string(c.server.synth.ratio * dp.size()) + " records");
  const auto result = synth::Synthesize(*backend, dp, c.server.synth, rng);
  const auto config = fed::ToJson(c.server);
  EnsureParent(dst);
  WriteJsonLines(dst, ToJsonRows(result.records));
  WriteSidecar(dst, config, c.seed);
  const auto rep = synth::ToJson(result.report);
  if (!report.empty()) WriteJsonArtifact(report, rep, config, c.seed);
  out << rep.dump() << '\n';
}

prune::BIReport ComputeReport(const model::Checkpoint& ck, const fs::path& data,
                              const PipelineConfig& c) {
  if (c.server.prune_metric == "seq") return prune::SeqReport(ck.model);
  RequireInput(data, "--data");
  const auto ds = LoadSyntheticRecords(data);
  return prune::RationaleAwareBI(ck.model, ck.vocab, ds, c.server.use_rationale, c.server.bi);
}

void Bi(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream*) {
  const fs::path ckpt = cmd.Path("--checkpoint"), dst = cmd.Path("--out");
  RequireInput(ckpt, "--checkpoint");
  c.server.Validate();
  const auto ck = model::LoadCheckpoint(ckpt);
  const auto report = ComputeReport(ck, cmd.Path("--data"), c);
  if (!dst.empty()) WriteJsonArtifact(dst, prune::ToJson(report), fed::ToJson(c.server), c.seed);
  out << prune::FormatBIReport(report);
}

void Prune(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream*) {
  const fs::path ckpt = cmd.Path("--checkpoint"), dst = cmd.Path("--out"),
                 report_path = cmd.Path("--report");
  RequireInput(ckpt, "--checkpoint");
  RequireOutput(dst, "--out");
  if (!report_path.empty()) RequireInput(report_path, "--report");
  c.server.Validate();
  const auto dense = model::LoadCheckpoint(ckpt);
  prune::BIReport report;
  if (!report_path.empty()) {
    report = prune::BIReportFromJson(nlohmann::json::parse(ReadFileText(report_path)));
  } else if (c.server.prune_metric == "seq" || !cmd.Path("--data").empty()) {
    report = ComputeReport(dense, cmd.Path("--data"), c);
  } else {
    ThrowUsage("prune: one of --report or --data is required for metric bi");
  }
  const auto plan = prune::PlanPruning(report.combined(), report.layer_ids(), c.server.prune_ratio,
                                       report.metric);
  const auto pruned = prune::PruneCheckpoint(dense, plan, report);
  SaveCheckpointArtifact(dst, pruned, fed::ToJson(c.server), c.seed);
  nlohmann::json r = prune::ToJson(plan);
  r["parameters_before"] = dense.model.parameter_count();
  r["parameters_after"] = pruned.model.parameter_count();
  out << r.dump() << '\n';
}

template <typename Records>
void TrainCommand(const Command& cmd, const PipelineConfig& c, const distill::TrainConfig& tc,
                  const char* stage, std::ostream& out, std::ostream* log, const Records& records,
                  model::Checkpoint ck,
                  const std::function<distill::TrainResult(model::Checkpoint&, const distill::TrainHooks&)>& run) {
  const fs::path dst = cmd.Path("--out"), eval_path = cmd.Path("--eval");
  const auto eval_records = eval_path.empty() ? std::vector<QARecord>{} : LoadQARecords(eval_path);
  distill::TrainHooks hooks;
  if (!eval_records.empty()) {
    hooks.eval = [&](const model::Model& m) {
      return eval::Evaluate(m, ck.vocab, eval_records, "eval", tc.limits()).accuracy;
    };
  }
  hooks.progress = [&](const distill::TrainLogEntry& e) {
    Log(log, std::string(stage) + ": " + distill::ToJson(e).dump());
  };
  auto result = run(ck, hooks);
  ck.model = std::move(result.model);
  ck.metadata["stage"] = stage;
  ck.metadata[stage] = tc;
  const auto config = ToJson(c);
  SaveCheckpointArtifact(dst, ck, config, c.seed);
  const fs::path log_path = dst.string() + ".log.jsonl";
  distill::WriteTrainingLog(log_path, result.log);
  WriteSidecar(log_path, config, c.seed);
  nlohmann::json r = {{"checkpoint", dst.string()}, {"steps", result.log.empty() ? 0 : result.log.back().step},
                      {"records", records.size()}};
  if (!result.log.empty()) r["final_loss"] = result.log.back().total;
  if (!eval_records.empty()) {
    r["eval_accuracy"] = eval::Evaluate(ck.model, ck.vocab, eval_records, "eval", tc.limits()).accuracy;
  }
  out << r.dump() << '\n';
}

void Distill(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const fs::path ckpt = cmd.Path("--checkpoint"), data = cmd.Path("--data");
  RequireInput(ckpt, "--checkpoint");
  RequireInput(data, "--data");
  RequireOutput(cmd.Path("--out"), "--out");
  if (!cmd.Path("--eval").empty()) RequireInput(cmd.Path("--eval"), "--eval");
  const auto& tc = c.server.retrain;
  if (tc.max_steps > 0) tc.Validate();
  const auto ds = LoadSyntheticRecords(data);
  TrainCommand(cmd, c, tc, "server_retrained", out, log, ds, model::LoadCheckpoint(ckpt),
               [&](model::Checkpoint& ck, const distill::TrainHooks& h) {
                 return distill::RetrainServer(ck.model, ck.vocab, ds, tc, h);
               });
}

void Finetune(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const fs::path ckpt = cmd.Path("--checkpoint"), data = cmd.Path("--data");
  RequireInput(ckpt, "--checkpoint");
  RequireInput(data, "--data");
  RequireOutput(cmd.Path("--out"), "--out");
  if (!cmd.Path("--eval").empty()) RequireInput(cmd.Path("--eval"), "--eval");
  const auto& tc = c.client;
  if (tc.max_steps > 0) tc.Validate();
  const auto records = LoadQARecords(data);
  TrainCommand(cmd, c, tc, "client_finetuned", out, log, records, model::LoadCheckpoint(ckpt),
               [&](model::Checkpoint& ck, const distill::TrainHooks& h) {
                 return distill::FinetuneClient(ck.model, ck.vocab, records, tc, h);
               });
}

void Eval(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream*) {
  const fs::path ckpt = cmd.Path("--checkpoint"), data = cmd.Path("--data"), dst = cmd.Path("--out");
  RequireInput(ckpt, "--checkpoint");
  RequireInput(data, "--data");
  const auto ck = model::LoadCheckpoint(ckpt);
  const auto records = LoadQARecords(data);
  const auto result = eval::Evaluate(ck.model, ck.vocab, records, data.stem().string(), c.client.limits());
  if (!dst.empty()) WriteJsonArtifact(dst, eval::ToJson(result), ToJson(c), c.seed);
  out << nlohmann::json{{"dataset", result.dataset}, {"accuracy", result.accuracy},
                        {"sample_count", result.sample_count}}.dump()
      << '\n';
}

void Serve(const Command& cmd, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const fs::path ckpt = cmd.Path("--checkpoint");
  RequireInput(ckpt, "--checkpoint");
  c.server.Validate();
  const auto base = model::LoadCheckpoint(ckpt);
  fed::Listener listener(fed::ParseEndpoint(c.listen));
  out << nlohmann::json{{"listening", c.listen}, {"port", listener.port()}}.dump() << '\n' << std::flush;
  fed::ServeOptions opts;
  opts.max_sessions = c.sessions;
  opts.progress_capacity = c.progress_capacity;
  opts.artifact_dir = cmd.Path("--artifacts");
  opts.log = log;
  fed::Serve(listener, base, c.server, opts);
}

void Client(const Command&, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  const auto cc = MakeClientConfig(c);
  cc.Validate();
  fs::create_directories(cc.output_dir);
  const auto outcome = fed::RunClient(fed::ParseEndpoint(c.server_endpoint), cc, log);
  out << outcome.metrics.dump() << '\n';
}

void Pipeline(const Command&, const PipelineConfig& c, std::ostream& out, std::ostream* log) {
  out << ToJson(RunPipeline(c, log)).dump() << '\n';
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           Settings::EnvLookup env) {
  CLI::App root{"Privacy-preserving collaborative distillation and pruning of a small language model"};
  root.name("ppcf");
  root.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  std::map<CLI::App*, std::pair<Command*, Body>> bodies;
  auto add = [&](const std::string& name, const std::string& desc, Body body) -> Command& {
    Command& cmd = AddCommand(root, commands, name, desc);
    bodies[cmd.app] = {&cmd, std::move(body)};
    return cmd;
  };

  auto task_flags = [](Command& cmd) {
    cmd.Setting("--family", "task", "family", "Toy task family: key-value | pattern | mix");
    cmd.Setting("--vocab-slice", "task", "vocab_slice", "Keys or symbols in the toy world");
    cmd.Setting("--task-seed", "task", "seed", "Toy task seed");
  };
  auto train_flags = [](Command& cmd, const std::string& section) {
    cmd.Setting("--steps", section, "max_steps", "Optimizer steps");
    cmd.Setting("--lr", section, "learning_rate", "Learning rate");
    cmd.Setting("--batch-size", section, "batch_size", "Records per step");
  };

  {
    auto& c = add("make-task", "Write the toy task splits (train/val/test/public JSONL)", MakeTask);
    c.File("--out", "Output directory", true);
    task_flags(c);
  }
  {
    auto& c = add("pretrain", "Train a dense base model on a public corpus", Pretrain);
    c.File("--data", "Public corpus (JSONL with rationales)", true);
    c.File("--eval", "Validation records (QA JSONL)", false);
    c.File("--out", "Output checkpoint", true);
    task_flags(c);
    train_flags(c, "pretrain");
    c.Setting("--layers", "model", "n_layers", "Transformer layers");
    c.Setting("--d-model", "model", "d_model", "Model width");
  }
  {
    auto& c = add("perturb", "Client phase 1: perturb private questions with the exponential mechanism",
                  Perturb);
    c.File("--data", "Private records (QA JSONL)", true);
    c.File("--checkpoint", "Base checkpoint providing the embedding table", true);
    c.File("--out", "Perturbed records (JSONL)", true);
    c.Setting("--epsilon", "privacy", "epsilon", "Privacy budget");
    c.Setting("--sensitivity", "privacy", "sensitivity", "Sensitivity mode: exact | bound");
    c.Setting("--embedding", "paths", "embedding_table", "External embedding table");
  }
  {
    auto& c = add("synth", "Server phase 2: generate synthetic records with rationales", Synth);
    c.File("--data", "Perturbed records (JSONL)", true);
    c.File("--out", "Synthetic records (JSONL)", true);
    c.File("--report", "Generation report (JSON)", false);
    c.Setting("--ratio", "synth", "ratio", "Synthetic records per perturbed record");
    c.Setting("--backend", "synth", "backend", "Backend: stub | remote");
    c.Setting("--votes", "synth", "votes", "Answer votes per question");
    c.Setting("--endpoint", "synth", "base_url", "Remote backend base URL");
    task_flags(c);
  }
  {
    auto& c = add("bi", "Server phase 3a: layer importance report (TSV on stdout)", Bi);
    c.File("--checkpoint", "Dense checkpoint", true);
    c.File("--data", "Synthetic records (JSONL); not needed for --metric seq", false);
    c.File("--out", "BI report (JSON)", false);
    c.Setting("--metric", "prune", "metric", "Importance metric: bi | seq");
    c.Setting("--positions", "prune", "positions", "Rows pooled: all | target");
    c.Switch("--no-rationale", "prune", "use_rationale", "false", "Label term only");
  }
  {
    auto& c = add("prune", "Server phase 3b: remove the least important layers", Prune);
    c.File("--checkpoint", "Dense checkpoint", true);
    c.File("--out", "Pruned checkpoint", true);
    c.File("--report", "BI report (JSON) from the bi command", false);
    c.File("--data", "Synthetic records, to compute the report in place", false);
    c.Setting("--ratio", "prune", "ratio", "Fraction of layers to remove");
    c.Setting("--metric", "prune", "metric", "Importance metric: bi | seq");
    c.Switch("--no-rationale", "prune", "use_rationale", "false", "Label term only");
  }
  {
    auto& c = add("distill", "Server phase 3c: multitask retraining on synthetic records", Distill);
    c.File("--checkpoint", "Pruned checkpoint", true);
    c.File("--data", "Synthetic records (JSONL)", true);
    c.File("--out", "Retrained checkpoint", true);
    c.File("--eval", "Records evaluated every eval_every steps", false);
    train_flags(c, "server");
    c.Switch("--no-rationale", "server", "use_rationale", "false", "Label loss only");
  }
  {
    auto& c = add("finetune", "Client phase 4: fine-tune on private records", Finetune);
    c.File("--checkpoint", "Received checkpoint", true);
    c.File("--data", "Private records (QA JSONL)", true);
    c.File("--out", "Fine-tuned checkpoint", true);
    c.File("--eval", "Records evaluated every eval_every steps", false);
    train_flags(c, "client");
  }
  {
    auto& c = add("eval", "Multiple-choice accuracy of a checkpoint", Eval);
    c.File("--checkpoint", "Checkpoint", true);
    c.File("--data", "Records (QA JSONL)", true);
    c.File("--out", "Per-item scores (JSON)", false);
  }
  {
    auto& c = add("serve", "Run the server side of the protocol", Serve);
    c.File("--checkpoint", "Dense base checkpoint", true);
    c.File("--artifacts", "Directory for per-session server artifacts", false);
    c.Setting("--listen", "server", "listen", "host:port (port 0 picks a free port)");
    c.Setting("--sessions", "server", "sessions", "Sessions to serve before exiting (0 = unbounded)");
    train_flags(c, "server");
    c.Setting("--ratio", "synth", "ratio", "Synthetic records per perturbed record");
    c.Setting("--prune-ratio", "prune", "ratio", "Fraction of layers to remove");
    c.Setting("--backend", "synth", "backend", "Backend: stub | remote");
    task_flags(c);
  }
  {
    auto& c = add("client", "Run the client side of the protocol against a server", Client);
    c.Setting("--server", "client", "server", "Server host:port");
    c.Setting("--data", "paths", "private_data", "Private records (QA JSONL)");
    c.Setting("--eval", "paths", "eval_data", "Evaluation records (QA JSONL)");
    c.Setting("--checkpoint", "paths", "base_checkpoint", "Base checkpoint (embedding table)");
    c.Setting("--out", "paths", "output_dir", "Output directory");
    c.Setting("--wire-dump", "client", "wire_dump", "Record client-to-server bytes here");
    c.Setting("--epsilon", "privacy", "epsilon", "Privacy budget");
    train_flags(c, "client");
  }
  {
    auto& c = add("pipeline", "All phases in-process over the loopback transport", Pipeline);
    c.Setting("--out", "paths", "output_dir", "Output directory");
    c.Setting("--base", "paths", "base_checkpoint", "Dense base checkpoint (pretrained when absent)");
    c.Setting("--data", "paths", "private_data", "Private records (QA JSONL)");
    c.Setting("--eval", "paths", "eval_data", "Evaluation records (QA JSONL)");
    c.Setting("--public", "paths", "public_data", "Pretraining corpus");
    c.Setting("--epsilon", "privacy", "epsilon", "Privacy budget");
    c.Setting("--ratio", "synth", "ratio", "Synthetic records per perturbed record");
    c.Setting("--backend", "synth", "backend", "Backend: stub | remote");
    c.Setting("--prune-ratio", "prune", "ratio", "Fraction of layers to remove");
    c.Setting("--metric", "prune", "metric", "Importance metric: bi | seq");
    c.Setting("--server-steps", "server", "max_steps", "Server retraining steps");
    c.Setting("--client-steps", "client", "max_steps", "Client fine-tuning steps");
    task_flags(c);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    root.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << root.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << root.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    ErrorLine(err, "usage", 1, e.what());
    return 1;
  }

  try {
    auto subs = root.get_subcommands();
    auto& [cmd, body] = bodies.at(subs.front());
    const Settings settings = cmd->MakeSettings(env);
    const PipelineConfig config = ResolvePipelineConfig(settings);
    config.Validate();
    body(*cmd, config, out, cmd->quiet ? nullptr : &err);
    return 0;
  } catch (const Error& e) {
    ErrorLine(err, std::string(ErrorKindName(e.kind())), e.exit_code(), e.what());
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    ErrorLine(err, "data", 2, e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    ErrorLine(err, "data", 2, e.what());
    return 2;
  } catch (const std::exception& e) {
    ErrorLine(err, "data", 2, e.what());
    return 2;
  }
}

int RunCli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return RunCli(args, std::cout, std::cerr);
}

}  // namespace ppcf::cli
