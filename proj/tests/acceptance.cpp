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

// Acceptance checks: one PASS/FAIL line per criterion, with the measured
// values and wall time. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "fed_fixture.hpp"
#include "oracles.hpp"
#include "ppcf/cli/commands.hpp"
#include "ppcf/cli/config.hpp"
#include "ppcf/core/io.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/dp/mechanism.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/fed/session.hpp"
#include "ppcf/fed/wire.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/prune/block_influence.hpp"
#include "ppcf/prune/plan.hpp"
#include "ppcf/synth/stub_backend.hpp"
#include "ppcf/synth/synthesize.hpp"

using namespace ppcf;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::vector<std::tuple<int, bool>> g_results;

// Runs one check; a time limit <= 0 means none. Exceptions count as failure.
void Criterion(int id, const std::string& name, double limit_seconds, const std::function<Verdict()>& check) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = Seconds(t0);
  if (limit_seconds > 0 && secs >= limit_seconds) {
    v.pass = false;
    v.detail += "; over time limit " + Fmt(limit_seconds) + " s";
  }
  std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << name << "  [" << v.detail
            << "; " << Fmt(secs, 3) << " s]" << std::endl;
  g_results.emplace_back(id, v.pass);
}

dp::EmbeddingTable RandomTable(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(vocab * dim);
  for (auto& x : v) x = rng.Normal();
  return dp::EmbeddingTable(std::move(v), vocab, dim, dp::EmbeddingSource::kExternalFile);
}

double Median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------------------

Verdict EmRatio() {
  // Compared with no tolerance: max_x P(y|x) / min_x P(y|x) <= exp(eps).
  double worst = 0.0;  // max over cases of ratio / exp(eps)
  std::size_t cases = 0;
  bool ok = true;
  std::vector<dp::EmbeddingTable> tables;
  tables.emplace_back(std::vector<double>{1.0, -1.0}, 2, 1, dp::EmbeddingSource::kExternalFile);
  tables.push_back(RandomTable(16, 4, 1));
  tables.push_back(RandomTable(64, 8, 2));
  for (const auto& t : tables) {
    for (auto mode : {dp::SensitivityMode::kExact, dp::SensitivityMode::kBound}) {
      for (double eps : {0.5, 3.0, 10.0}) {
        const dp::PrivacyBudget b{eps, dp::Sensitivity(t, mode)};
        const std::size_t V = t.vocab_size();
        std::vector<std::vector<double>> p(V);
        for (std::size_t x = 0; x < V; ++x) p[x] = dp::ReplacementDistribution(static_cast<dp::TokenId>(x), b, t);
        const double bound = std::exp(eps);
        for (std::size_t y = 0; y < V; ++y) {
          double hi = 0.0, lo = 1.0;
          for (std::size_t x = 0; x < V; ++x) {
            hi = std::max(hi, p[x][y]);
            lo = std::min(lo, p[x][y]);
          }
          const double ratio = hi / lo;
          ok = ok && ratio <= bound;
          worst = std::max(worst, ratio / bound);
        }
        ++cases;
      }
    }
  }
  return {ok, "max ratio/exp(eps) = " + Fmt(worst, 6) + " over " + std::to_string(cases) +
                  " tables x budgets x sensitivity modes, |V| <= 64"};
}

Verdict EmSampling() {
  const auto t = RandomTable(32, 6, 3);
  const dp::PrivacyBudget b{3.0, dp::ExactSensitivity(t)};
  dp::TokenPerturber sampler(t, b);
  double worst = 0.0;
  for (dp::TokenId x : {0u, 7u, 31u}) {
    Rng rng(100 + x);
    std::vector<double> counts(32, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[sampler.Sample(x, rng)] += 1.0;
    const auto p = dp::ReplacementDistribution(x, b, t);
    double tv = 0.0;
    for (std::size_t y = 0; y < 32; ++y) tv += 0.5 * std::abs(counts[y] / n - p[y]);
    worst = std::max(worst, tv);
  }
  return {worst <= 0.01, "max TV = " + Fmt(worst) + " at 1e5 draws, 3 source tokens, |V| = 32"};
}

Verdict Gradients() {
  struct Cfg {
    std::size_t vocab, d, heads, ff, seq;
  };
  const std::vector<Cfg> cfgs = {{11, 8, 2, 12, 8}, {7, 12, 3, 16, 6}, {13, 6, 1, 10, 10}};
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    model::ModelConfig c;
    c.vocab_size = cfgs[i].vocab;
    c.d_model = cfgs[i].d;
    c.n_layers = 2;
    c.n_heads = cfgs[i].heads;
    c.d_ff = cfgs[i].ff;
    c.max_seq_len = cfgs[i].seq;
    const auto m = testutil::RandomModel64(c, 40 + i);
    Rng rng(50 + i);
    std::vector<model::SequenceExample> batch{testutil::RandomExample(c.vocab_size, c.max_seq_len, rng),
                                              testutil::RandomExample(c.vocab_size, c.max_seq_len - 2, rng)};
    const auto r = testutil::CheckGradients(m, batch);
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = "config " + std::to_string(i) + " " + r.worst_tensor;
    }
  }
  return {worst <= 1e-4, "max relative error " + Fmt(worst, 3) + " (" + where + ") over " +
                             std::to_string(checked) + " parameters, 3 configs"};
}

Verdict BiExactness() {
  using T = model::Tensor<double>;
  T x = T::Zeros({4, 3});
  Rng rng(5);
  for (auto& v : x.data) v = rng.Normal();
  T neg = x;
  for (auto& v : neg.data) v = -v;
  T a = T::Zeros({3, 3}), b = T::Zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    a.data[i * 3 + i] = 1.0 + i;
    b.data[i * 3 + (i + 1) % 3] = 2.0;
  }
  const double bi_id = prune::LayerCosineBI(std::vector<T>{x, x})[0];
  const double bi_neg = prune::LayerCosineBI(std::vector<T>{x, neg})[0];
  const double bi_orth = prune::LayerCosineBI(std::vector<T>{a, b})[0];
  bool ok = std::abs(bi_id) <= 1e-6 && std::abs(bi_neg - 2.0) <= 1e-6 && std::abs(bi_orth - 1.0) <= 1e-6;

  eval::ToyTaskSpec spec;
  spec.public_size = 16;
  const auto vocab = eval::ToyWorld(spec).MakeVocabulary();
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  auto m = model::InitModel(c, 11);
  const std::size_t injected = 5;
  auto& blk = m.mutable_weights().blocks[injected];
  for (auto* t : {&blk.attn_out_weight, &blk.attn_out_bias, &blk.fc2_weight, &blk.fc2_bias}) {
    std::fill(t->data.begin(), t->data.end(), 0.0f);
  }
  const auto report = prune::RationaleAwareBI(m, vocab, eval::MakeToyTask(spec).public_corpus, true);
  std::string firsts;
  for (double r : {0.1, 0.3, 0.5}) {
    const auto plan = prune::PlanPruning(report.combined(), report.layer_ids(), r, "bi");
    ok = ok && !plan.remove.empty() && plan.remove[0] == injected;
    firsts += (firsts.empty() ? "" : ",") + std::to_string(plan.remove.front());
  }
  return {ok, "identity " + Fmt(bi_id, 3) + ", negation " + Fmt(bi_neg, 10) + ", orthogonal " + Fmt(bi_orth, 10) +
                  "; first removed at ratios 0.1/0.3/0.5 = " + firsts + " (injected " + std::to_string(injected) +
                  ", BI " + Fmt(report.combined()[injected], 3) + ")"};
}

Verdict ParameterCounts() {
  std::size_t cases = 0;
  bool ok = true;
  std::string bad;
  for (std::size_t L : {4u, 8u, 12u}) {
    model::ModelConfig c;
    c.vocab_size = 20;
    c.d_model = 16;
    c.n_layers = L;
    c.n_heads = 2;
    c.d_ff = 24;
    c.max_seq_len = 16;
    const auto dense = model::InitModel(c, 3);
    const std::size_t d = c.d_model, f = c.d_ff;
    // norms, qkv, attention output, feed-forward: counted from the shapes.
    const std::size_t per_layer = 2 * d + (d * 3 * d + 3 * d) + (d * d + d) + 2 * d + (d * f + f) + (f * d + d);
    const auto report = prune::SeqReport(dense);
    for (double r : {0.1, 0.25, 0.3, 0.5, 0.7}) {
      const auto plan = prune::PlanPruning(report.combined(), report.layer_ids(), r, "seq");
      const auto pruned = prune::Prune(dense, plan);
      const std::size_t expected = dense.parameter_count() - static_cast<std::size_t>(std::lround(r * L)) * per_layer;
      if (pruned.parameter_count() != expected) {
        ok = false;
        bad += " L=" + std::to_string(L) + ",r=" + Fmt(r);
      }
      ++cases;
    }
  }
  return {ok, std::to_string(cases) + " (L, ratio) cases" + (bad.empty() ? "" : "; mismatches:" + bad)};
}

// ---------------------------------------------------------------------------
// Pipeline runs on the desk configuration

const fs::path kRoot = fs::temp_directory_path() / "ppcf_acceptance";

cli::Settings DeskSettings(std::map<cli::SettingKey, std::string> flags) {
  const auto file = cli::ConfigFile::Load(fs::path(PPCF_SOURCE_DIR) / "configs" / "desk.toml");
  return cli::Settings(file, std::move(flags), [](const std::string&) { return std::nullopt; });
}

struct DeskBase {
  fs::path base_checkpoint, private_data, eval_data;
  bool ready = false;
};
DeskBase g_base;

Verdict EndToEnd() {
  const fs::path out = kRoot / "desk";
  fs::remove_all(out);
  auto cfg = cli::ResolvePipelineConfig(DeskSettings({{{"paths", "output_dir"}, out.string()}}));
  const auto s = cli::RunPipeline(cfg, nullptr);
  g_base = {out / "base.ckpt", out / "data" / "train.jsonl", out / "data" / "test.jsonl", true};
  const bool dense_ok = s.dense_accuracy >= 0.90;
  const bool geometry = cfg.model.n_layers == 8 && cfg.model.d_model == 64 && s.removed_layers.size() == 2 &&
                        cfg.server.retrain.max_steps >= 300 && cfg.server.prune_metric == "bi" &&
                        cfg.server.use_rationale;
  const bool keep = s.final_accuracy >= s.dense_accuracy - 0.10;
  const bool gain = s.final_accuracy >= s.pruned_accuracy + 0.05;
  std::string removed;
  for (auto l : s.removed_layers) removed += (removed.empty() ? "" : ",") + std::to_string(l);
  return {dense_ok && geometry && keep && gain,
          "dense " + Fmt(s.dense_accuracy) + (dense_ok ? "" : " (<0.90)") + ", pruned-no-retrain " +
              Fmt(s.pruned_accuracy) + ", retrained " + Fmt(s.retrained_accuracy) + ", final " +
              Fmt(s.final_accuracy) + "; removed layers " + removed + "; final>=dense-10pt " +
              (keep ? "yes" : "no") + ", final>=pruned+5pt " + (gain ? "yes" : "no") + ", " +
              std::to_string(s.synthetic_records) + " synthetic records"};
}

struct Variant {
  bool rationale = true;
  std::size_t synth_ratio = 8;
  double prune_ratio = 0.3;
  bool operator<(const Variant& o) const {
    return std::tie(rationale, synth_ratio, prune_ratio) < std::tie(o.rationale, o.synth_ratio, o.prune_ratio);
  }
};

std::map<std::pair<Variant, int>, cli::PipelineSummary> g_runs;

// Final accuracy of a variant for one seed, sharing the desk base model.
cli::PipelineSummary RunVariant(const Variant& v, int seed) {
  const auto key = std::make_pair(v, seed);
  if (auto it = g_runs.find(key); it != g_runs.end()) return it->second;
  if (!g_base.ready) throw std::runtime_error("the end-to-end run did not produce a base model");
  const fs::path out = kRoot / ("r" + std::to_string(v.rationale) + "_s" + std::to_string(v.synth_ratio) + "_p" +
                                Fmt(v.prune_ratio, 2) + "_seed" + std::to_string(seed));
  fs::remove_all(out);
  auto cfg = cli::ResolvePipelineConfig(DeskSettings({
      {{"run", "seed"}, std::to_string(seed)},
      {{"paths", "output_dir"}, out.string()},
      {{"paths", "base_checkpoint"}, g_base.base_checkpoint.string()},
      {{"paths", "private_data"}, g_base.private_data.string()},
      {{"paths", "eval_data"}, g_base.eval_data.string()},
      {{"prune", "use_rationale"}, v.rationale ? "true" : "false"},
      {{"prune", "ratio"}, Fmt(v.prune_ratio)},
      {{"synth", "ratio"}, std::to_string(v.synth_ratio)},
      {{"client", "evaluate_base"}, "false"},
      {{"server", "eval_every"}, "0"},
      {{"client", "eval_every"}, "0"},
  }));
  const auto s = cli::RunPipeline(cfg, nullptr);
  g_runs[key] = s;
  return s;
}

std::string Accs(const std::vector<double>& v) {
  std::string s;
  for (double a : v) s += (s.empty() ? "" : "/") + Fmt(a, 3);
  return s;
}

std::vector<double> FinalAccuracies(const Variant& v) {
  std::vector<double> out;
  for (int seed : {1, 2, 3}) out.push_back(RunVariant(v, seed).final_accuracy);
  return out;
}

Verdict RationaleAblation() {
  const auto with = FinalAccuracies({true, 8, 0.3});
  const auto without = FinalAccuracies({false, 8, 0.3});
  const double mw = Median3(with), mo = Median3(without);
  return {mw >= mo, "median final accuracy with rationale " + Fmt(mw) + " (" + Accs(with) + "), without " +
                        Fmt(mo) + " (" + Accs(without) + ")"};
}

Verdict SyntheticRatio() {
  const auto r8 = FinalAccuracies({true, 8, 0.3});
  const auto r1 = FinalAccuracies({true, 1, 0.3});
  const double m8 = Median3(r8), m1 = Median3(r1);
  return {m8 >= m1,
          "median final accuracy ratio 8 " + Fmt(m8) + " (" + Accs(r8) + "), ratio 1 " + Fmt(m1) + " (" + Accs(r1) + ")"};
}

Verdict PruningMonotone() {
  std::vector<double> medians;
  std::string detail;
  for (double r : {0.3, 0.5, 0.7}) {
    const auto a = FinalAccuracies({true, 8, r});
    medians.push_back(Median3(a));
    detail += (detail.empty() ? "" : ", ") + std::string("ratio ") + Fmt(r, 2) + ": " + Fmt(medians.back()) + " (" +
              Accs(a) + ")";
  }
  bool ok = true;
  for (std::size_t i = 1; i < medians.size(); ++i) ok = ok && medians[i] <= medians[i - 1] + 0.02;
  return {ok, "median final accuracy " + detail};
}

Verdict ProtocolSoundness() {
  auto f = testutil::MakeFedFixture("acceptance_fed");
  fed::RunLoopback(f.client, f.base, f.server);
  const auto loop_final = ReadFileBytes(f.client.output_dir / "final.ckpt");
  const auto loop_received = ReadFileBytes(f.client.output_dir / "received.ckpt");
  testutil::RunTwoProcess(f);
  const bool identical = ReadFileBytes(f.client.output_dir / "final.ckpt") == loop_final &&
                         ReadFileBytes(f.client.output_dir / "received.ckpt") == loop_received;

  // Transcripts: the fixture run, and the desk run when available.
  std::size_t leaks = testutil::ScanTranscript(ReadFileBytes(f.client.wire_dump), f.private_records).size();
  std::size_t scanned = 1;
  const fs::path desk_wire = kRoot / "desk" / "client" / "wire_client_to_server.bin";
  if (fs::exists(desk_wire)) {
    leaks += testutil::ScanTranscript(ReadFileBytes(desk_wire), LoadQARecords(g_base.private_data)).size();
    ++scanned;
  }

  std::vector<std::vector<std::uint8_t>> seeds = {
      fed::EncodeMessage(fed::MakeHello("client")),
      fed::EncodeMessage(fed::MakePerturbedData({{"a", "what color is the sky ?"}})),
      fed::EncodeMessage(fed::MakeProgress({{"phase", "retrain"}, {"step", 1}})),
      fed::EncodeMessage(fed::MakeModel(std::vector<std::uint8_t>(100, 7), {0, 1})),
      fed::EncodeMessage(fed::MakeError("x", "y")),
      fed::EncodeMessage(fed::MakeBye())};
  Rng rng(77);
  std::size_t crashes = 0, rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    auto bytes = seeds[rng.UniformInt(seeds.size())];
    const auto mode = rng.UniformInt(3);
    if (mode == 0) {
      for (std::size_t k = 0, n = 1 + rng.UniformInt(6); k < n; ++k) {
        bytes[rng.UniformInt(bytes.size())] ^= static_cast<std::uint8_t>(1 + rng.UniformInt(255));
      }
    } else if (mode == 1) {
      bytes.resize(rng.UniformInt(bytes.size()));
    } else {
      for (auto& byte : bytes) byte = static_cast<std::uint8_t>(rng.UniformInt(256));
    }
    try {
      fed::DecodeMessage(bytes, fed::kProtocolVersion);
    } catch (const fed::WireError&) {
      ++rejected;
    } catch (...) {
      ++crashes;
    }
  }
  return {identical && leaks == 0 && crashes == 0,
          std::string("loopback vs two-process checkpoints ") + (identical ? "bit-identical" : "DIFFER") + "; " +
              std::to_string(leaks) + " raw private strings in " + std::to_string(scanned) + " transcripts; " +
              std::to_string(crashes) + " crashes on 10000 fuzzed frames (" + std::to_string(rejected) + " rejected)"};
}

Verdict ScriptedDisagreement() {
  eval::ToyTaskSpec spec;
  const auto items = eval::MakeToyTask(spec).train;
  const std::size_t N = 20;
  std::vector<PerturbedRecord> dp;
  for (std::size_t i = 0; i < N; ++i) dp.push_back({items[i].id, items[i].question});
  bool ok = true;
  std::string detail;
  for (std::size_t k : {0u, 1u, 7u, 20u}) {
    synth::StubOptions so;
    Rng pick(900 + k);
    while (so.disagree_attempts.size() < k) so.disagree_attempts.insert(pick.UniformInt(N));
    synth::StubBackend stub(spec, so);
    synth::SynthesisOptions o;
    o.ratio = 1;
    o.votes = 3;
    o.max_attempts = N;
    Rng rng(k);
    const auto r = synth::Synthesize(stub, dp, o, rng);
    ok = ok && r.report.accepted == N - k && r.records.size() == N - k;
    detail += (detail.empty() ? "" : ", ") + std::string("k=") + std::to_string(k) + ": " +
              std::to_string(r.report.accepted);
  }
  return {ok, "N=" + std::to_string(N) + " accepted " + detail};
}

}  // namespace

int main() {
  fs::create_directories(kRoot);
  std::cout << "acceptance: scratch directory " << kRoot.string() << std::endl;
  Criterion(1, "exponential mechanism ratio bound", 1.0, EmRatio);
  Criterion(2, "exponential mechanism sampling", 5.0, EmSampling);
  Criterion(3, "gradients vs finite differences", 60.0, Gradients);
  Criterion(4, "block influence exactness and pass-through pruning", 30.0, BiExactness);
  Criterion(5, "parameter count after pruning", 0.0, ParameterCounts);
  Criterion(6, "end-to-end desk pipeline", 15 * 60.0, EndToEnd);
  Criterion(7, "rationale ablation (median of 3 seeds)", 0.0, RationaleAblation);
  Criterion(8, "synthetic ratio 8 vs 1 (median of 3 seeds)", 0.0, SyntheticRatio);
  Criterion(9, "accuracy across pruning ratios 0.3/0.5/0.7", 0.0, PruningMonotone);
  Criterion(10, "protocol soundness", 0.0, ProtocolSoundness);
  Criterion(11, "scripted disagreement", 0.0, ScriptedDisagreement);
  std::size_t failed = 0;
  for (const auto& [id, pass] : g_results) failed += pass ? 0 : 1;
  std::cout << "acceptance: " << (g_results.size() - failed) << "/" << g_results.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
