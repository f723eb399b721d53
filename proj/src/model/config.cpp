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

#include "ppcf/model/config.hpp"

#include <string>

#include "ppcf/core/error.hpp"

namespace ppcf::model {

void ModelConfig::Validate() const {
  auto require_positive = [](std::size_t v, const char* name) {
    if (v < 1) ThrowData(std::string("model config: ") + name + " must be >= 1");
  };
  require_positive(vocab_size, "vocab_size");
  require_positive(d_model, "d_model");
  require_positive(n_heads, "n_heads");
  require_positive(d_ff, "d_ff");
  require_positive(max_seq_len, "max_seq_len");
  require_positive(n_layers, "n_layers");
  if (d_model % n_heads != 0) {
    ThrowData("model config: d_model " + std::to_string(d_model) +
              " not divisible by n_heads " + std::to_string(n_heads));
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
                     {"n_layers", c.n_layers},     {"n_heads", c.n_heads},
                     {"d_ff", c.d_ff},             {"max_seq_len", c.max_seq_len}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("d_model").get_to(c.d_model);
  j.at("n_layers").get_to(c.n_layers);
  j.at("n_heads").get_to(c.n_heads);
  j.at("d_ff").get_to(c.d_ff);
  j.at("max_seq_len").get_to(c.max_seq_len);
}

}  // namespace ppcf::model
