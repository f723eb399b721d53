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

#include "ppcf/dp/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/kernels.hpp"

namespace ppcf::dp {

EmbeddingTable::EmbeddingTable(std::vector<double> vectors, std::size_t vocab_size,
                               std::size_t dim, EmbeddingSource source)
    : vectors_(std::move(vectors)), vocab_size_(vocab_size), dim_(dim), source_(source) {
  if (vocab_size_ == 0) ThrowData("embedding table: empty vocabulary");
  if (dim_ == 0 || vectors_.size() != vocab_size_ * dim_) {
    ThrowData("embedding table: shape mismatch");
  }
  norms_.resize(vocab_size_);
  for (std::size_t i = 0; i < vocab_size_; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double v = vectors_[i * dim_ + j];
      if (!std::isfinite(v)) ThrowData("embedding table: non-finite entry in row " + std::to_string(i));
      sq += v * v;
    }
    if (sq == 0.0) ThrowData("embedding table: zero-norm row " + std::to_string(i));
    norms_[i] = std::sqrt(sq);
  }
}

EmbeddingTable EmbeddingTable::FromModel(const model::Model& m) {
  const auto& e = m.weights().token_embedding;
  std::vector<double> v(e.data.begin(), e.data.end());
  return EmbeddingTable(std::move(v), e.shape.at(0), e.shape.at(1), EmbeddingSource::kModel);
}

EmbeddingTable EmbeddingTable::Load(const std::filesystem::path& path) {
  const auto c = model::DecodeContainer(ReadFileBytes(path));
  if (c.tensors.size() != 1 || c.tensors[0].name != "embedding" ||
      c.tensors[0].tensor.shape.size() != 2) {
    ThrowData("embedding file must hold exactly one 2-D tensor named 'embedding'");
  }
  const auto& t = c.tensors[0].tensor;
  return EmbeddingTable(std::vector<double>(t.data.begin(), t.data.end()), t.shape[0],
                        t.shape[1], EmbeddingSource::kExternalFile);
}

void EmbeddingTable::Save(const std::filesystem::path& path) const {
  model::TensorContainer c;
  model::Tensor<float> t = model::Tensor<float>::Zeros({vocab_size_, dim_});
  for (std::size_t i = 0; i < vectors_.size(); ++i) t.data[i] = static_cast<float>(vectors_[i]);
  c.tensors.push_back({"embedding", std::move(t)});
  WriteFileBytes(path, model::EncodeContainer(c));
}

double EmbeddingTable::Utility(TokenId x, TokenId y) const {
  if (x >= vocab_size_ || y >= vocab_size_) ThrowData("utility: token id out of range");
  const double* a = vectors_.data() + static_cast<std::size_t>(x) * dim_;
  const double* b = vectors_.data() + static_cast<std::size_t>(y) * dim_;
  double dot = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) dot += a[j] * b[j];
  return std::clamp(dot / (norms_[x] * norms_[y]), -1.0, 1.0);
}

void PrivacyBudget::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) ThrowData("privacy budget: epsilon must be > 0");
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    ThrowData("privacy budget: degenerate sensitivity (must be > 0)");
  }
}

double ExactSensitivity(const EmbeddingTable& table) {
  const std::size_t V = table.vocab_size();
  double best = 0.0;
  for (TokenId y = 0; y < V; ++y) {
    double lo = 1.0, hi = -1.0;
    for (TokenId x = 0; x < V; ++x) {
      const double u = table.Utility(x, y);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

double Sensitivity(const EmbeddingTable& table, SensitivityMode mode) {
  return mode == SensitivityMode::kBound ? 2.0 : ExactSensitivity(table);
}

std::vector<double> ReplacementLogProbabilities(TokenId x, const PrivacyBudget& budget,
                                                const EmbeddingTable& table) {
  budget.Validate();
  const std::size_t V = table.vocab_size();
  std::vector<double> logits(V);
  const double scale = budget.epsilon / (2.0 * budget.sensitivity);
  for (TokenId y = 0; y < V; ++y) logits[y] = scale * table.Utility(x, y);
  const double lse = model::kernels::LogSumExp(logits.data(), V);
  for (double& l : logits) l -= lse;
  return logits;
}

std::vector<double> ReplacementDistribution(TokenId x, const PrivacyBudget& budget,
                                            const EmbeddingTable& table) {
  auto p = ReplacementLogProbabilities(x, budget, table);
  for (double& v : p) v = std::exp(v);
  return p;
}

double ExpectedUtility(TokenId x, const PrivacyBudget& budget, const EmbeddingTable& table) {
  const auto p = ReplacementDistribution(x, budget, table);
  double e = 0.0;
  for (TokenId y = 0; y < p.size(); ++y) e += p[y] * table.Utility(x, y);
  return e;
}

TokenPerturber::TokenPerturber(const EmbeddingTable& table, PrivacyBudget budget)
    : table_(table), budget_(budget), cdf_(table.vocab_size()) {
  budget_.Validate();
}

TokenId TokenPerturber::Sample(TokenId x, Rng& rng) {
  if (x >= table_.vocab_size()) ThrowData("perturb: token id out of range");
  auto& cdf = cdf_[x];
  if (cdf.empty()) {
    cdf = ReplacementDistribution(x, budget_, table_);
    for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] += cdf[i - 1];
  }
  const double u = rng.Uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const std::size_t idx = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
  return static_cast<TokenId>(idx);
}

TokenId PerturbToken(TokenId x, const PrivacyBudget& budget, const EmbeddingTable& table,
                     Rng& rng) {
  TokenPerturber p(table, budget);
  return p.Sample(x, rng);
}

std::vector<PerturbedRecord> PerturbDataset(const std::vector<QARecord>& records,
                                            const PrivacyBudget& budget,
                                            const EmbeddingTable& table,
                                            const model::Vocabulary& vocab, Rng& rng) {
  if (records.empty()) ThrowData("perturb_dataset: no records");
  if (vocab.size() != table.vocab_size()) {
    ThrowData("perturb_dataset: vocabulary and embedding table sizes differ");
  }
  TokenPerturber perturber(table, budget);
  const Rng base(rng.NextU64());
  std::vector<PerturbedRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Rng stream = base.Split(i);
    try {
      std::vector<TokenId> ids = vocab.Encode(records[i].question);
      for (TokenId& t : ids) t = perturber.Sample(t, stream);
      out.push_back({records[i].id, vocab.Decode(ids)});
    } catch (const Error& e) {
      throw Error(e.kind(), "record " + std::to_string(i) + " (" + records[i].id + "): " + e.what());
    }
  }
  return out;
}

}  // namespace ppcf::dp
