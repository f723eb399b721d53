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

// Token-level exponential mechanism. A token x is replaced by y with
// probability proportional to exp(epsilon * u(x, y) / (2 * sensitivity)),
// where u is the cosine similarity of embedding rows and the candidate set is
// the full vocabulary.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ppcf/core/records.hpp"
#include "ppcf/core/rng.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::dp {

using model::TokenId;

enum class EmbeddingSource { kModel, kExternalFile };

class EmbeddingTable {
 public:
  // `vectors` is row-major [vocab_size, dim]. Rejects zero rows and
  // non-finite entries.
  EmbeddingTable(std::vector<double> vectors, std::size_t vocab_size, std::size_t dim,
                 EmbeddingSource source);

  static EmbeddingTable FromModel(const model::Model& model);
  // Container file holding a single tensor named "embedding".
  static EmbeddingTable Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dim() const { return dim_; }
  EmbeddingSource source() const { return source_; }

  // Cosine similarity in [-1, 1]; symmetric.
  double Utility(TokenId x, TokenId y) const;

 private:
  std::vector<double> vectors_;
  std::vector<double> norms_;
  std::size_t vocab_size_;
  std::size_t dim_;
  EmbeddingSource source_;
};

struct PrivacyBudget {
  double epsilon = 3.0;
  double sensitivity = 2.0;

  void Validate() const;  // both strictly positive
};

enum class SensitivityMode {
  kExact,  // brute force over the table
  kBound,  // the cosine range bound, 2
};

// max over (x, x', y) of |u(x, y) - u(x', y)|, computed as
// max_y (max_x u(x, y) - min_x u(x, y)).
double ExactSensitivity(const EmbeddingTable& table);
double Sensitivity(const EmbeddingTable& table, SensitivityMode mode);

// Natural-log probabilities of every replacement y for input x,
// normalized with log-sum-exp.
std::vector<double> ReplacementLogProbabilities(TokenId x, const PrivacyBudget& budget,
                                                const EmbeddingTable& table);
std::vector<double> ReplacementDistribution(TokenId x, const PrivacyBudget& budget,
                                            const EmbeddingTable& table);

// E_{y ~ P(.|x)} u(x, y).
double ExpectedUtility(TokenId x, const PrivacyBudget& budget, const EmbeddingTable& table);

// Caches one inverse-CDF table per input token.
class TokenPerturber {
 public:
  TokenPerturber(const EmbeddingTable& table, PrivacyBudget budget);

  TokenId Sample(TokenId x, Rng& rng);

 private:
  const EmbeddingTable& table_;
  PrivacyBudget budget_;
  std::vector<std::vector<double>> cdf_;
};

TokenId PerturbToken(TokenId x, const PrivacyBudget& budget, const EmbeddingTable& table,
                     Rng& rng);

// Perturbs every question token independently. Record i draws from stream
// i of a base seed taken from `rng`. Labels and choices are not carried over.
std::vector<PerturbedRecord> PerturbDataset(const std::vector<QARecord>& records,
                                            const PrivacyBudget& budget,
                                            const EmbeddingTable& table,
                                            const model::Vocabulary& vocab, Rng& rng);

}  // namespace ppcf::dp
