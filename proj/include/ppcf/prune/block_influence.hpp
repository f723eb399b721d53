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

#pragma once

// Block Influence: BI_i = 1 - E_{X,t} cos(X_{i,t}, X_{i+1,t}), where X_i is
// the input of the i-th surviving block. The expectation pools every token
// row of every sample, so duplicating a dataset leaves the scores unchanged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/error.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/distill/sequence.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::prune {

// Cosine of two rows in double precision, clamped to [-1, 1]; nullopt when
// either row has zero norm.
template <typename T>
std::optional<double> RowCosine(const T* a, const T* b, std::size_t d) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double x = static_cast<double>(a[j]);
    const double y = static_cast<double>(b[j]);
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) return std::nullopt;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

// Streaming accumulator of per-layer cosine sums. Rows whose cosine is
// undefined are skipped and counted.
class BIAccumulator {
 public:
  explicit BIAccumulator(std::size_t n_layers)
      : cos_sum_(n_layers, 0.0), rows_(n_layers, 0) {}

  // Adds rows [first_row, seq) of one trace's hidden states X_0..X_L.
  template <typename T>
  void Add(const std::vector<model::Tensor<T>>& hidden, std::size_t first_row = 0) {
    if (hidden.size() != cos_sum_.size() + 1) {
      ThrowData("block influence: expected " + std::to_string(cos_sum_.size() + 1) +
                " hidden states, got " + std::to_string(hidden.size()));
    }
    for (std::size_t i = 0; i < cos_sum_.size(); ++i) {
      const auto& a = hidden[i];
      const auto& b = hidden[i + 1];
      const std::size_t seq = a.shape[0];
      const std::size_t d = a.shape[1];
      for (std::size_t t = first_row; t < seq; ++t) {
        const auto c = RowCosine(a.ptr() + t * d, b.ptr() + t * d, d);
        if (!c) {
          ++degenerate_rows_;
          continue;
        }
        cos_sum_[i] += *c;
        ++rows_[i];
      }
    }
  }

  // 1 - mean cosine per layer; throws a numeric error for a layer without a
  // single valid row.
  std::vector<double> Scores() const;
  std::size_t degenerate_rows() const { return degenerate_rows_; }
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<double> cos_sum_;
  std::vector<std::size_t> rows_;
  std::size_t degenerate_rows_ = 0;
};

// BI of a single captured trace, over all rows.
std::vector<double> LayerCosineBI(const model::ForwardTrace<float>& trace);
std::vector<double> LayerCosineBI(const std::vector<model::Tensor<double>>& hidden);

enum class BITarget { kLabel, kRationale };
enum class PositionSet {
  kAll,     // every row of the teacher-forced sequence
  kTarget,  // rows that predict a target token only
};

std::string BITargetName(BITarget t);
std::string PositionSetName(PositionSet p);
PositionSet ParsePositionSet(const std::string& name);

struct BIOptions {
  PositionSet positions = PositionSet::kAll;
  distill::SequenceLimits limits;
};

struct BIEstimate {
  std::vector<double> scores;  // one per surviving layer, in model order
  std::size_t sample_count = 0;
  std::size_t row_count = 0;
  std::size_t degenerate_rows = 0;
  std::size_t truncated_samples = 0;
};

// Teacher-forced passes over question (+) answer text (label target) or
// question (+) rationale (rationale target).
BIEstimate ComputeBI(const model::Model& model, const model::Vocabulary& vocab,
                     const std::vector<SyntheticRecord>& data, BITarget target,
                     const BIOptions& options = {});

// Element-wise sum; throws on length mismatch.
std::vector<double> CombineBI(const std::vector<double>& label,
                              const std::vector<double>& rationale);

// Depth-order baseline: layer 0 scores highest, strictly decreasing.
std::vector<double> SeqImportance(std::size_t n_layers);

struct BIRow {
  std::uint32_t layer_id = 0;
  double bi_label = 0.0;
  double bi_rationale = 0.0;
  double bi_combined = 0.0;
};

struct BIReport {
  std::string metric = "bi";  // "bi" or "seq"
  std::vector<BIRow> rows;
  std::size_t sample_count = 0;
  std::size_t degenerate_rows = 0;
  std::size_t truncated_samples = 0;
  std::string note;

  std::vector<double> combined() const;
  std::vector<std::uint32_t> layer_ids() const;
};

// Rationale-aware report: label and rationale passes, summed per layer. With
// `use_rationale` false the rationale term is zero (ablation).
BIReport RationaleAwareBI(const model::Model& model, const model::Vocabulary& vocab,
                          const std::vector<SyntheticRecord>& data, bool use_rationale,
                          const BIOptions& options = {});
BIReport SeqReport(const model::Model& model);

nlohmann::json ToJson(const BIReport& r);
BIReport BIReportFromJson(const nlohmann::json& j);
// Tab-separated table with a header line.
std::string FormatBIReport(const BIReport& r);

}  // namespace ppcf::prune
