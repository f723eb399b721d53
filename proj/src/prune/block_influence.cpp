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

#include "ppcf/prune/block_influence.hpp"

#include <cstdio>
#include <sstream>

namespace ppcf::prune {

std::vector<double> BIAccumulator::Scores() const {
  std::vector<double> scores(cos_sum_.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (rows_[i] == 0) {
      ThrowNumeric("block influence: layer position " + std::to_string(i) +
                   " has no row with a defined cosine");
    }
    scores[i] = 1.0 - cos_sum_[i] / static_cast<double>(rows_[i]);
  }
  return scores;
}

std::vector<double> LayerCosineBI(const model::ForwardTrace<float>& trace) {
  if (!trace.hidden_states) ThrowData("block influence: trace has no hidden states");
  BIAccumulator acc(trace.hidden_states->size() - 1);
  acc.Add(*trace.hidden_states);
  return acc.Scores();
}

std::vector<double> LayerCosineBI(const std::vector<model::Tensor<double>>& hidden) {
  if (hidden.size() < 2) ThrowData("block influence: need at least two hidden states");
  BIAccumulator acc(hidden.size() - 1);
  acc.Add(hidden);
  return acc.Scores();
}

std::string BITargetName(BITarget t) { return t == BITarget::kLabel ? "label" : "rationale"; }

std::string PositionSetName(PositionSet p) { return p == PositionSet::kAll ? "all" : "target"; }

PositionSet ParsePositionSet(const std::string& name) {
  if (name == "all") return PositionSet::kAll;
  if (name == "target") return PositionSet::kTarget;
  ThrowUsage("unknown BI position set '" + name + "' (expected all | target)");
}

BIEstimate ComputeBI(const model::Model& model, const model::Vocabulary& vocab,
                     const std::vector<SyntheticRecord>& data, BITarget target,
                     const BIOptions& options) {
  if (data.empty()) ThrowData("block influence: empty dataset");
  BIAccumulator acc(model.weights().blocks.size());
  BIEstimate est;
  for (const auto& rec : data) {
    const std::string& text = target == BITarget::kLabel ? rec.answer_text() : rec.rationale;
    const auto pair = distill::TokenizePair(vocab, rec.question, text, options.limits,
                                            model.config().max_seq_len, /*append_eos=*/true);
    if (pair.truncated) ++est.truncated_samples;
    const auto ex = distill::ToExample(pair);
    const auto trace = model.Forward(ex.inputs, /*capture_hidden=*/true);
    // Row p predicts token p + 1, so target rows start one before the target.
    const std::size_t first =
        options.positions == PositionSet::kAll ? 0 : pair.target_begin - 1;
    acc.Add(*trace.hidden_states, first);
    est.row_count += ex.inputs.size() - first;
  }
  est.scores = acc.Scores();
  est.sample_count = data.size();
  est.degenerate_rows = acc.degenerate_rows();
  return est;
}

std::vector<double> CombineBI(const std::vector<double>& label,
                              const std::vector<double>& rationale) {
  if (label.size() != rationale.size()) {
    ThrowData("combine_bi: length mismatch (" + std::to_string(label.size()) + " vs " +
              std::to_string(rationale.size()) + ")");
  }
  std::vector<double> out(label.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label[i] + rationale[i];
  return out;
}

std::vector<double> SeqImportance(std::size_t n_layers) {
  if (n_layers < 1) ThrowData("seq importance: need at least one layer");
  std::vector<double> scores(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) {
    scores[i] = static_cast<double>(n_layers - i) / static_cast<double>(n_layers);
  }
  return scores;
}

std::vector<double> BIReport::combined() const {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.bi_combined);
  return out;
}

std::vector<std::uint32_t> BIReport::layer_ids() const {
  std::vector<std::uint32_t> out;
  for (const auto& r : rows) out.push_back(r.layer_id);
  return out;
}

BIReport RationaleAwareBI(const model::Model& model, const model::Vocabulary& vocab,
                          const std::vector<SyntheticRecord>& data, bool use_rationale,
                          const BIOptions& options) {
  const auto label = ComputeBI(model, vocab, data, BITarget::kLabel, options);
  BIEstimate rationale;
  rationale.scores.assign(label.scores.size(), 0.0);
  if (use_rationale) rationale = ComputeBI(model, vocab, data, BITarget::kRationale, options);
  const auto combined = CombineBI(label.scores, rationale.scores);
  BIReport report;
  report.metric = "bi";
  const auto ids = model.layer_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    report.rows.push_back({ids[i], label.scores[i], rationale.scores[i], combined[i]});
  }
  report.sample_count = data.size();
  report.degenerate_rows = label.degenerate_rows + rationale.degenerate_rows;
  report.truncated_samples = label.truncated_samples + rationale.truncated_samples;
  report.note = std::string("label target: question+answer text; rationale target: ") +
                (use_rationale ? "question+rationale" : "disabled (zero)") +
                "; positions: " + PositionSetName(options.positions) +
                "; teacher forced; pooled over rows";
  return report;
}

BIReport SeqReport(const model::Model& model) {
  const auto ids = model.layer_ids();
  const auto scores = SeqImportance(ids.size());
  BIReport report;
  report.metric = "seq";
  for (std::size_t i = 0; i < ids.size(); ++i) report.rows.push_back({ids[i], 0.0, 0.0, scores[i]});
  report.note = "depth order: shallower layers score higher";
  return report;
}

nlohmann::json ToJson(const BIReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"layer_id", row.layer_id},
                    {"bi_label", row.bi_label},
                    {"bi_rationale", row.bi_rationale},
                    {"bi_combined", row.bi_combined}});
  }
  return {{"metric", r.metric},
          {"rows", rows},
          {"sample_count", r.sample_count},
          {"degenerate_rows", r.degenerate_rows},
          {"truncated_samples", r.truncated_samples},
          {"note", r.note}};
}

BIReport BIReportFromJson(const nlohmann::json& j) {
  try {
    BIReport r;
    r.metric = j.at("metric").get<std::string>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("layer_id").get<std::uint32_t>(), row.at("bi_label").get<double>(),
                        row.at("bi_rationale").get<double>(),
                        row.at("bi_combined").get<double>()});
    }
    r.sample_count = j.value("sample_count", std::size_t{0});
    r.degenerate_rows = j.value("degenerate_rows", std::size_t{0});
    r.truncated_samples = j.value("truncated_samples", std::size_t{0});
    r.note = j.value("note", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string("bi report: ") + e.what());
  }
}

std::string FormatBIReport(const BIReport& r) {
  std::ostringstream out;
  out << "layer_id\tbi_label\tbi_rationale\tbi_combined\n";
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%u\t%.9f\t%.9f\t%.9f\n", row.layer_id, row.bi_label,
                  row.bi_rationale, row.bi_combined);
    out << buf;
  }
  return out.str();
}

}  // namespace ppcf::prune
