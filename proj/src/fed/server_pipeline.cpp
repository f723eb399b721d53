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

#include "ppcf/fed/server_pipeline.hpp"

#include "ppcf/core/io.hpp"
#include "ppcf/eval/evaluate.hpp"

namespace ppcf::fed {
namespace {

template <typename Fn>
auto InPhase(const std::string& phase, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PhaseError&) {
    throw;
  } catch (const Error& e) {
    throw PhaseError(phase, e);
  } catch (const std::exception& e) {
    throw PhaseError(phase, Error(ErrorKind::kData, e.what()));
  }
}

}  // namespace

void ServerConfig::Validate() const {
  synth.Validate();
  if (!(prune_ratio >= 0.0 && prune_ratio < 1.0)) ThrowUsage("server: prune ratio must be in [0, 1)");
  if (prune_metric != "bi" && prune_metric != "seq") {
    ThrowUsage("server: prune metric must be bi | seq");
  }
  if (retrain.max_steps > 0) retrain.Validate();
}

nlohmann::json ToJson(const ServerConfig& c) {
  return {{"backend", synth::ToJson(c.backend)},
          {"synth", c.synth},
          {"prune_ratio", c.prune_ratio},
          {"prune_metric", c.prune_metric},
          {"use_rationale", c.use_rationale},
          {"bi_positions", prune::PositionSetName(c.bi.positions)},
          {"retrain", c.retrain},
          {"seed", c.seed},
          {"server_eval_samples", c.server_eval_samples}};
}

ServerArtifacts RunServerPipeline(const model::Checkpoint& base,
                                  const std::vector<PerturbedRecord>& dp, const ServerConfig& cfg,
                                  const ProgressSink& progress) {
  cfg.Validate();
  auto emit = [&](nlohmann::json body) {
    if (progress) progress(body);
  };
  ServerArtifacts out;

  InPhase("synthesize", [&] {
    if (dp.empty()) ThrowData("no perturbed records received");
    emit({{"phase", "synthesize"}, {"event", "start"}, {"records", dp.size()}});
    auto backend = synth::MakeBackend(cfg.backend);
    Rng rng = Rng(cfg.seed).Split(0x73796e7468);  // "synth"
    auto result = synth::Synthesize(*backend, dp, cfg.synth, rng);
    out.synthetic = std::move(result.records);
    out.generation = result.report;
    emit({{"phase", "synthesize"}, {"event", "done"}, {"report", synth::ToJson(out.generation)}});
    if (out.synthetic.empty()) ThrowData("no synthetic record was accepted");
  });

  const auto& data = out.synthetic;
  InPhase("block_influence", [&] {
    emit({{"phase", "block_influence"}, {"event", "start"}, {"samples", data.size()}});
    if (cfg.prune_metric == "seq") {
      out.bi_report = prune::SeqReport(base.model);
    } else {
      out.bi_report = prune::RationaleAwareBI(base.model, base.vocab, data, cfg.use_rationale, cfg.bi);
    }
    emit({{"phase", "block_influence"}, {"event", "done"}, {"report", prune::ToJson(out.bi_report)}});
  });

  model::Checkpoint pruned;
  InPhase("prune", [&] {
    out.plan = prune::PlanPruning(out.bi_report.combined(), out.bi_report.layer_ids(),
                                  cfg.prune_ratio, cfg.prune_metric);
    pruned = prune::PruneCheckpoint(base, out.plan, out.bi_report);
    emit({{"phase", "prune"}, {"event", "done"}, {"plan", prune::ToJson(out.plan)},
          {"parameters", pruned.model.parameter_count()}});
  });

  const std::size_t n_eval = std::min(cfg.server_eval_samples, data.size());
  const auto eval_set = eval::AsQARecords(
      std::vector<SyntheticRecord>(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_eval)));
  auto server_accuracy = [&](const model::Model& m) {
    return eval::Evaluate(m, base.vocab, eval_set, "synthetic", cfg.retrain.limits()).accuracy;
  };

  InPhase("retrain", [&] {
    out.server_accuracy_before = server_accuracy(pruned.model);
    distill::TrainConfig rc = cfg.retrain;
    rc.use_rationale = cfg.use_rationale;
    distill::TrainHooks hooks;
    hooks.eval = server_accuracy;
    hooks.progress = [&](const distill::TrainLogEntry& e) {
      nlohmann::json body = distill::ToJson(e);
      body["phase"] = "retrain";
      emit(body);
    };
    auto trained = distill::RetrainServer(pruned.model, base.vocab, data, rc, hooks);
    out.retrain_log = std::move(trained.log);
    out.model.model = std::move(trained.model);
    out.model.vocab = base.vocab;
    out.model.metadata = pruned.metadata;
    out.server_accuracy_after = server_accuracy(out.model.model);
    out.model.metadata["stage"] = "server_retrained";
    out.model.metadata["generation_report"] = synth::ToJson(out.generation);
    out.model.metadata["server_config"] = ToJson(cfg);
    out.model.metadata["server_accuracy"] = {{"before_retrain", out.server_accuracy_before},
                                             {"after_retrain", out.server_accuracy_after}};
    emit({{"phase", "retrain"}, {"event", "done"},
          {"server_accuracy_before", out.server_accuracy_before},
          {"server_accuracy_after", out.server_accuracy_after}});
  });
  return out;
}

void WriteServerArtifacts(const ServerArtifacts& a, const ServerConfig& cfg,
                          const std::filesystem::path& dir) {
  const auto config = ToJson(cfg);
  auto sidecar = [&](const std::filesystem::path& p) { WriteSidecar(p, config, cfg.seed); };
  WriteJsonLines(dir / "synthetic.jsonl", ToJsonRows(a.synthetic));
  sidecar(dir / "synthetic.jsonl");
  WriteFileText(dir / "generation_report.json", synth::ToJson(a.generation).dump(2) + "\n");
  sidecar(dir / "generation_report.json");
  WriteFileText(dir / "bi_report.tsv", prune::FormatBIReport(a.bi_report));
  sidecar(dir / "bi_report.tsv");
  WriteFileText(dir / "bi_report.json", prune::ToJson(a.bi_report).dump(2) + "\n");
  sidecar(dir / "bi_report.json");
  distill::WriteTrainingLog(dir / "retrain_log.jsonl", a.retrain_log);
  sidecar(dir / "retrain_log.jsonl");
  model::SaveCheckpoint(dir / "model.ckpt", a.model);
  sidecar(dir / "model.ckpt");
}

}  // namespace ppcf::fed
