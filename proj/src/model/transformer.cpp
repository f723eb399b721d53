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

#include "ppcf/model/transformer.hpp"

#include <cmath>
#include <string>

#include "ppcf/core/rng.hpp"

namespace ppcf::model {

std::size_t PerLayerParameterCount(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t f = c.d_ff;
  return 4 * d                // two norms
         + 3 * d * d + 3 * d  // qkv
         + d * d + d          // attention output
         + d * f + f          // fc1
         + f * d + d;         // fc2
}

Model InitModel(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  if (config.n_layers < 2) ThrowData("model config: n_layers must be >= 2");
  constexpr double kStd = 0.02;
  const double residual_std = kStd / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  const std::size_t d = config.d_model;
  const std::size_t f = config.d_ff;

  Rng rng(seed);
  auto normal = [&](std::vector<std::size_t> shape, double std) {
    Tensor<float> t = Tensor<float>::Zeros(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.Normal() * std);
    return t;
  };
  auto filled = [](std::size_t n, float value) {
    Tensor<float> t = Tensor<float>::Zeros({n});
    for (float& v : t.data) v = value;
    return t;
  };

  Weights<float> w;
  w.token_embedding = normal({config.vocab_size, d}, kStd);
  w.position_embedding = normal({config.max_seq_len, d}, kStd);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    BlockWeights<float> b;
    b.layer_id = static_cast<std::uint32_t>(l);
    b.norm1_gain = filled(d, 1.0f);
    b.norm1_bias = filled(d, 0.0f);
    b.qkv_weight = normal({d, 3 * d}, kStd);
    b.qkv_bias = filled(3 * d, 0.0f);
    b.attn_out_weight = normal({d, d}, residual_std);
    b.attn_out_bias = filled(d, 0.0f);
    b.norm2_gain = filled(d, 1.0f);
    b.norm2_bias = filled(d, 0.0f);
    b.fc1_weight = normal({d, f}, kStd);
    b.fc1_bias = filled(f, 0.0f);
    b.fc2_weight = normal({f, d}, residual_std);
    b.fc2_bias = filled(d, 0.0f);
    w.blocks.push_back(std::move(b));
  }
  w.final_norm_gain = filled(d, 1.0f);
  w.final_norm_bias = filled(d, 0.0f);
  return Model(config, std::move(w));
}

Model RemoveLayers(const Model& model, const std::set<std::uint32_t>& layer_ids) {
  const auto current = model.layer_ids();
  for (std::uint32_t id : layer_ids) {
    bool found = false;
    for (std::uint32_t c : current) found = found || (c == id);
    if (!found) ThrowData("remove_layers: unknown layer id " + std::to_string(id));
  }
  if (layer_ids.size() >= current.size()) {
    ThrowData("remove_layers: at least one layer must survive");
  }
  Weights<float> w = model.weights();
  std::vector<BlockWeights<float>> kept;
  for (auto& b : w.blocks) {
    if (!layer_ids.contains(b.layer_id)) kept.push_back(std::move(b));
  }
  w.blocks = std::move(kept);
  return Model(model.config(), std::move(w));
}

}  // namespace ppcf::model
