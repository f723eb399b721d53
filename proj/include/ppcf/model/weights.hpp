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

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ppcf::model {

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  static Tensor Zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return Tensor{std::move(shape), std::vector<T>(n, T(0))};
  }

  std::size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  bool operator==(const Tensor&) const = default;
};

// Weights of one decoder block. Matrices are stored [in, out] row-major.
template <typename T>
struct BlockWeights {
  std::uint32_t layer_id = 0;  // index in the original, unpruned model
  Tensor<T> norm1_gain, norm1_bias;
  Tensor<T> qkv_weight, qkv_bias;  // [d, 3d]
  Tensor<T> attn_out_weight, attn_out_bias;  // [d, d]
  Tensor<T> norm2_gain, norm2_bias;
  Tensor<T> fc1_weight, fc1_bias;  // [d, d_ff]
  Tensor<T> fc2_weight, fc2_bias;  // [d_ff, d]

  bool operator==(const BlockWeights&) const = default;
};

template <typename T>
struct Weights {
  Tensor<T> token_embedding;     // [vocab, d], tied with the output head
  Tensor<T> position_embedding;  // [max_seq_len, d]
  std::vector<BlockWeights<T>> blocks;
  Tensor<T> final_norm_gain, final_norm_bias;

  bool operator==(const Weights&) const = default;
};

// Calls fn(suffix, tensor) for every tensor of a block, in canonical order.
template <typename B, typename Fn>
void VisitBlock(B& block, Fn&& fn) {
  fn("norm1.gain", block.norm1_gain);
  fn("norm1.bias", block.norm1_bias);
  fn("attn.qkv.weight", block.qkv_weight);
  fn("attn.qkv.bias", block.qkv_bias);
  fn("attn.out.weight", block.attn_out_weight);
  fn("attn.out.bias", block.attn_out_bias);
  fn("norm2.gain", block.norm2_gain);
  fn("norm2.bias", block.norm2_bias);
  fn("ffn.fc1.weight", block.fc1_weight);
  fn("ffn.fc1.bias", block.fc1_bias);
  fn("ffn.fc2.weight", block.fc2_weight);
  fn("ffn.fc2.bias", block.fc2_bias);
}

// Calls fn(name, tensor) for every parameter tensor in canonical order.
// Block tensors are named by original layer id, so names survive pruning.
template <typename W, typename Fn>
void VisitTensors(W& weights, Fn&& fn) {
  fn(std::string("token_embedding"), weights.token_embedding);
  fn(std::string("position_embedding"), weights.position_embedding);
  for (auto& block : weights.blocks) {
    const std::string prefix = "layers." + std::to_string(block.layer_id) + ".";
    VisitBlock(block, [&](const char* suffix, auto& t) { fn(prefix + suffix, t); });
  }
  fn(std::string("final_norm.gain"), weights.final_norm_gain);
  fn(std::string("final_norm.bias"), weights.final_norm_bias);
}

// Visits matching tensors of two structurally identical weight sets.
template <typename WA, typename WB, typename Fn>
void VisitTensorPairs(WA& a, WB& b, Fn&& fn) {
  fn(std::string("token_embedding"), a.token_embedding, b.token_embedding);
  fn(std::string("position_embedding"), a.position_embedding, b.position_embedding);
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    auto& ba = a.blocks[i];
    auto& bb = b.blocks[i];
    const std::string prefix = "layers." + std::to_string(ba.layer_id) + ".";
    fn(prefix + "norm1.gain", ba.norm1_gain, bb.norm1_gain);
    fn(prefix + "norm1.bias", ba.norm1_bias, bb.norm1_bias);
    fn(prefix + "attn.qkv.weight", ba.qkv_weight, bb.qkv_weight);
    fn(prefix + "attn.qkv.bias", ba.qkv_bias, bb.qkv_bias);
    fn(prefix + "attn.out.weight", ba.attn_out_weight, bb.attn_out_weight);
    fn(prefix + "attn.out.bias", ba.attn_out_bias, bb.attn_out_bias);
    fn(prefix + "norm2.gain", ba.norm2_gain, bb.norm2_gain);
    fn(prefix + "norm2.bias", ba.norm2_bias, bb.norm2_bias);
    fn(prefix + "ffn.fc1.weight", ba.fc1_weight, bb.fc1_weight);
    fn(prefix + "ffn.fc1.bias", ba.fc1_bias, bb.fc1_bias);
    fn(prefix + "ffn.fc2.weight", ba.fc2_weight, bb.fc2_weight);
    fn(prefix + "ffn.fc2.bias", ba.fc2_bias, bb.fc2_bias);
  }
  fn(std::string("final_norm.gain"), a.final_norm_gain, b.final_norm_gain);
  fn(std::string("final_norm.bias"), a.final_norm_bias, b.final_norm_bias);
}

// Same structure (shapes, layer ids) with a different scalar type, zero filled.
template <typename U, typename T>
Weights<U> ZerosLike(const Weights<T>& w) {
  Weights<U> out;
  out.blocks.resize(w.blocks.size());
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    out.blocks[i].layer_id = w.blocks[i].layer_id;
  }
  VisitTensorPairs(out, w, [](const std::string&, Tensor<U>& dst, const Tensor<T>& src) {
    dst = Tensor<U>::Zeros(src.shape);
  });
  return out;
}

template <typename U, typename T>
Weights<U> CastWeights(const Weights<T>& w) {
  Weights<U> out = ZerosLike<U>(w);
  VisitTensorPairs(out, w, [](const std::string&, Tensor<U>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst.data[i] = static_cast<U>(src.data[i]);
  });
  return out;
}

template <typename T>
std::size_t CountParameters(const Weights<T>& w) {
  std::size_t n = 0;
  VisitTensors(w, [&](const std::string&, const Tensor<T>& t) { n += t.size(); });
  return n;
}

}  // namespace ppcf::model
