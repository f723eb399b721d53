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

#include <cstdint>

#include "ppcf/model/transformer.hpp"

namespace ppcf::model {

struct AdamWParams {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
};

// First and second moments, structurally aligned with the model weights.
struct AdamWState {
  std::uint64_t step = 0;
  Weights<double> first_moment;
  Weights<double> second_moment;
};

AdamWState MakeAdamWState(const Model& model);

// One decoupled-weight-decay Adam step. Weight decay applies to matrices and
// embeddings only, not to norm gains or biases. Throws on shape mismatch.
void ApplyAdamW(Model& model, const Gradients& grads, AdamWState& state,
                const AdamWParams& params);

double GradientNorm(const Gradients& grads);

}  // namespace ppcf::model
