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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ppcf/core/error.hpp"
#include "ppcf/model/config.hpp"
#include "ppcf/model/kernels.hpp"
#include "ppcf/model/weights.hpp"

namespace ppcf::model {

using TokenId = std::uint32_t;

// One teacher-forced sequence. `targets[t]` is the token expected after
// `inputs[0..t]`; positions with mask 0 do not contribute to the loss.
struct SequenceExample {
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<std::uint8_t> mask;
};

template <typename T>
struct ForwardTrace {
  Tensor<T> logits;  // [seq, vocab]
  // X_0 .. X_L when requested: X_0 is the embedding output, X_{i+1} the
  // output of the i-th surviving block. Each is [seq, d_model].
  std::optional<std::vector<Tensor<T>>> hidden_states;
};

using Gradients = Weights<double>;

struct LossAndGradients {
  double loss = 0.0;  // mean cross-entropy over masked positions
  std::size_t target_count = 0;
  Gradients grads;
};

std::size_t PerLayerParameterCount(const ModelConfig& config);

template <typename T>
class TransformerModel {
 public:
  TransformerModel() = default;
  TransformerModel(ModelConfig config, Weights<T> weights)
      : config_(config), weights_(std::move(weights)) {
    config_.n_layers = weights_.blocks.size();
  }

  const ModelConfig& config() const { return config_; }
  const Weights<T>& weights() const { return weights_; }
  Weights<T>& mutable_weights() { return weights_; }

  std::vector<std::uint32_t> layer_ids() const {
    std::vector<std::uint32_t> ids;
    for (const auto& b : weights_.blocks) ids.push_back(b.layer_id);
    return ids;
  }

  std::size_t parameter_count() const { return CountParameters(weights_); }

  template <typename U>
  TransformerModel<U> Cast() const {
    return TransformerModel<U>(config_, CastWeights<U>(weights_));
  }

  ForwardTrace<T> Forward(std::span<const TokenId> tokens, bool capture_hidden) const {
    ForwardTrace<T> trace;
    Cache cache;
    std::vector<Tensor<T>> hidden;
    RunForward(tokens, cache, capture_hidden ? &hidden : nullptr);
    trace.logits = Tensor<T>{{tokens.size(), config_.vocab_size}, std::move(cache.logits)};
    if (capture_hidden) trace.hidden_states = std::move(hidden);
    return trace;
  }

  // Adds `weight` times the gradient of the summed masked cross-entropy of
  // one example into `grads`. Returns the unweighted summed cross-entropy.
  double AccumulateGradients(const SequenceExample& example, double weight,
                             Gradients& grads) const {
    CheckExample(example);
    Cache cache;
    RunForward(example.inputs, cache, nullptr);
    return Backward(example, weight, cache, grads);
  }

  // Summed masked cross-entropy of one example, without gradients.
  double SummedLoss(const SequenceExample& example) const {
    CheckExample(example);
    Cache cache;
    RunForward(example.inputs, cache, nullptr);
    const std::size_t V = config_.vocab_size;
    double total = 0.0;
    std::vector<double> row(V);
    for (std::size_t t = 0; t < example.inputs.size(); ++t) {
      if (!example.mask[t]) continue;
      for (std::size_t v = 0; v < V; ++v) row[v] = static_cast<double>(cache.logits[t * V + v]);
      total += kernels::LogSumExp(row.data(), V) - row[example.targets[t]];
    }
    return total;
  }

 private:
  struct BlockCache {
    std::vector<T> x_in, norm1, qkv, attn, x_mid, norm2, fc1, act;
    std::vector<double> mean1, rstd1, mean2, rstd2, probs;
  };
  struct Cache {
    std::vector<TokenId> tokens;
    std::vector<BlockCache> blocks;
    std::vector<T> x_final, norm_final, logits;
    std::vector<double> mean_final, rstd_final;
  };

  void CheckTokens(std::span<const TokenId> tokens) const {
    if (tokens.empty()) ThrowData("forward: empty token sequence");
    if (tokens.size() > config_.max_seq_len) {
      ThrowData("forward: sequence length " + std::to_string(tokens.size()) +
                " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
    }
    for (TokenId id : tokens) {
      if (id >= config_.vocab_size) {
        ThrowData("forward: token id " + std::to_string(id) + " out of vocabulary");
      }
    }
  }

  void CheckExample(const SequenceExample& ex) const {
    if (ex.targets.size() != ex.inputs.size() || ex.mask.size() != ex.inputs.size()) {
      ThrowData("loss: inputs, targets and mask lengths differ");
    }
    for (TokenId id : ex.targets) {
      if (id >= config_.vocab_size) ThrowData("loss: target id out of vocabulary");
    }
  }

  void RunForward(std::span<const TokenId> tokens, Cache& c,
                  std::vector<Tensor<T>>* hidden) const {
    CheckTokens(tokens);
    const std::size_t S = tokens.size();
    const std::size_t d = config_.d_model;
    const std::size_t V = config_.vocab_size;
    const std::size_t F = config_.d_ff;
    const std::size_t H = config_.n_heads;
    const std::size_t hd = config_.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    c.tokens.assign(tokens.begin(), tokens.end());
    std::vector<T> x(S * d);
    for (std::size_t t = 0; t < S; ++t) {
      const T* te = weights_.token_embedding.ptr() + tokens[t] * d;
      const T* pe = weights_.position_embedding.ptr() + t * d;
      for (std::size_t j = 0; j < d; ++j) {
        x[t * d + j] = static_cast<T>(static_cast<double>(te[j]) + static_cast<double>(pe[j]));
      }
    }
    if (hidden) hidden->push_back(Tensor<T>{{S, d}, x});

    c.blocks.resize(weights_.blocks.size());
    std::vector<double> scores(S);
    for (std::size_t l = 0; l < weights_.blocks.size(); ++l) {
      const BlockWeights<T>& w = weights_.blocks[l];
      BlockCache& bc = c.blocks[l];
      bc.x_in = x;
      bc.norm1.resize(S * d);
      bc.mean1.resize(S);
      bc.rstd1.resize(S);
      kernels::LayerNorm(x.data(), S, d, w.norm1_gain.ptr(), w.norm1_bias.ptr(),
                         bc.norm1.data(), bc.mean1.data(), bc.rstd1.data());
      bc.qkv.resize(S * 3 * d);
      kernels::Linear(bc.norm1.data(), S, d, w.qkv_weight.ptr(), w.qkv_bias.ptr(), 3 * d,
                      bc.qkv.data());

      bc.probs.assign(H * S * S, 0.0);
      bc.attn.assign(S * d, T(0));
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t t = 0; t < S; ++t) {
          const T* q = bc.qkv.data() + t * 3 * d + h * hd;
          double mx = -INFINITY;
          for (std::size_t s = 0; s <= t; ++s) {
            const T* k = bc.qkv.data() + s * 3 * d + d + h * hd;
            double dot = 0.0;
            for (std::size_t j = 0; j < hd; ++j) {
              dot += static_cast<double>(q[j]) * static_cast<double>(k[j]);
            }
            scores[s] = dot * scale;
            mx = std::max(mx, scores[s]);
          }
          double sum = 0.0;
          for (std::size_t s = 0; s <= t; ++s) {
            scores[s] = std::exp(scores[s] - mx);
            sum += scores[s];
          }
          double* p = bc.probs.data() + (h * S + t) * S;
          for (std::size_t s = 0; s <= t; ++s) p[s] = scores[s] / sum;
          T* out = bc.attn.data() + t * d + h * hd;
          for (std::size_t j = 0; j < hd; ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s <= t; ++s) {
              acc += p[s] * static_cast<double>(bc.qkv[s * 3 * d + 2 * d + h * hd + j]);
            }
            out[j] = static_cast<T>(acc);
          }
        }
      }

      std::vector<T> proj(S * d);
      kernels::Linear(bc.attn.data(), S, d, w.attn_out_weight.ptr(), w.attn_out_bias.ptr(), d,
                      proj.data());
      bc.x_mid.resize(S * d);
      for (std::size_t i = 0; i < S * d; ++i) {
        bc.x_mid[i] = static_cast<T>(static_cast<double>(x[i]) + static_cast<double>(proj[i]));
      }

      bc.norm2.resize(S * d);
      bc.mean2.resize(S);
      bc.rstd2.resize(S);
      kernels::LayerNorm(bc.x_mid.data(), S, d, w.norm2_gain.ptr(), w.norm2_bias.ptr(),
                         bc.norm2.data(), bc.mean2.data(), bc.rstd2.data());
      bc.fc1.resize(S * F);
      kernels::Linear(bc.norm2.data(), S, d, w.fc1_weight.ptr(), w.fc1_bias.ptr(), F,
                      bc.fc1.data());
      bc.act.resize(S * F);
      for (std::size_t i = 0; i < S * F; ++i) {
        bc.act[i] = static_cast<T>(kernels::Gelu(static_cast<double>(bc.fc1[i])));
      }
      kernels::Linear(bc.act.data(), S, F, w.fc2_weight.ptr(), w.fc2_bias.ptr(), d, proj.data());
      for (std::size_t i = 0; i < S * d; ++i) {
        x[i] = static_cast<T>(static_cast<double>(bc.x_mid[i]) + static_cast<double>(proj[i]));
      }
      if (hidden) hidden->push_back(Tensor<T>{{S, d}, x});
    }

    c.x_final = x;
    c.norm_final.resize(S * d);
    c.mean_final.resize(S);
    c.rstd_final.resize(S);
    kernels::LayerNorm(x.data(), S, d, weights_.final_norm_gain.ptr(),
                       weights_.final_norm_bias.ptr(), c.norm_final.data(),
                       c.mean_final.data(), c.rstd_final.data());
    // Tied output head: logits = norm_final * token_embedding^T.
    c.logits.resize(S * V);
    const T* emb = weights_.token_embedding.ptr();
    for (std::size_t t = 0; t < S; ++t) {
      const T* hr = c.norm_final.data() + t * d;
      for (std::size_t v = 0; v < V; ++v) {
        const T* er = emb + v * d;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t j = 0; j < d; ++j) {
          acc += static_cast<double>(hr[j]) * static_cast<double>(er[j]);
        }
        c.logits[t * V + v] = static_cast<T>(acc);
      }
    }
  }

  double Backward(const SequenceExample& ex, double weight, const Cache& c,
                  Gradients& g) const {
    const std::size_t S = c.tokens.size();
    const std::size_t d = config_.d_model;
    const std::size_t V = config_.vocab_size;
    const std::size_t F = config_.d_ff;
    const std::size_t H = config_.n_heads;
    const std::size_t hd = config_.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    double loss_sum = 0.0;
    std::vector<double> dnorm_final(S * d, 0.0);
    std::vector<double> row(V);
    const T* emb = weights_.token_embedding.ptr();
    double* demb = g.token_embedding.ptr();
    for (std::size_t t = 0; t < S; ++t) {
      if (!ex.mask[t]) continue;
      for (std::size_t v = 0; v < V; ++v) row[v] = static_cast<double>(c.logits[t * V + v]);
      const double lse = kernels::LogSumExp(row.data(), V);
      loss_sum += lse - row[ex.targets[t]];
      const T* hr = c.norm_final.data() + t * d;
      double* dh = dnorm_final.data() + t * d;
      for (std::size_t v = 0; v < V; ++v) {
        double dl = std::exp(row[v] - lse);
        if (v == ex.targets[t]) dl -= 1.0;
        dl *= weight;
        const T* er = emb + v * d;
        double* der = demb + v * d;
        for (std::size_t j = 0; j < d; ++j) {
          dh[j] += dl * static_cast<double>(er[j]);
          der[j] += dl * static_cast<double>(hr[j]);
        }
      }
    }

    std::vector<double> dx(S * d);
    kernels::LayerNormBackward(c.x_final.data(), S, d, weights_.final_norm_gain.ptr(),
                               c.mean_final.data(), c.rstd_final.data(), dnorm_final.data(),
                               dx.data(), g.final_norm_gain.ptr(), g.final_norm_bias.ptr());

    std::vector<double> dact(S * F), dfc1(S * F), dnorm(S * d), dtmp(S * d), dattn(S * d),
        dqkv(S * 3 * d);
    for (std::size_t l = weights_.blocks.size(); l-- > 0;) {
      const BlockWeights<T>& w = weights_.blocks[l];
      BlockWeights<double>& gw = g.blocks[l];
      const BlockCache& bc = c.blocks[l];

      // FFN branch: x_out = x_mid + fc2(gelu(fc1(norm2(x_mid)))).
      kernels::LinearBackward(bc.act.data(), S, F, w.fc2_weight.ptr(), d, dx.data(),
                              dact.data(), gw.fc2_weight.ptr(), gw.fc2_bias.ptr());
      for (std::size_t i = 0; i < S * F; ++i) {
        dfc1[i] = dact[i] * kernels::GeluDerivative(static_cast<double>(bc.fc1[i]));
      }
      kernels::LinearBackward(bc.norm2.data(), S, d, w.fc1_weight.ptr(), F, dfc1.data(),
                              dnorm.data(), gw.fc1_weight.ptr(), gw.fc1_bias.ptr());
      kernels::LayerNormBackward(bc.x_mid.data(), S, d, w.norm2_gain.ptr(), bc.mean2.data(),
                                 bc.rstd2.data(), dnorm.data(), dtmp.data(),
                                 gw.norm2_gain.ptr(), gw.norm2_bias.ptr());
      for (std::size_t i = 0; i < S * d; ++i) dx[i] += dtmp[i];

      // Attention branch: x_mid = x_in + out(attn(qkv(norm1(x_in)))).
      kernels::LinearBackward(bc.attn.data(), S, d, w.attn_out_weight.ptr(), d, dx.data(),
                              dattn.data(), gw.attn_out_weight.ptr(), gw.attn_out_bias.ptr());
      std::fill(dqkv.begin(), dqkv.end(), 0.0);
      std::vector<double> dp(S);
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t t = 0; t < S; ++t) {
          const double* p = bc.probs.data() + (h * S + t) * S;
          const double* dout = dattn.data() + t * d + h * hd;
          double dot_sum = 0.0;
          for (std::size_t s = 0; s <= t; ++s) {
            const T* v = bc.qkv.data() + s * 3 * d + 2 * d + h * hd;
            double* dv = dqkv.data() + s * 3 * d + 2 * d + h * hd;
            double acc = 0.0;
            for (std::size_t j = 0; j < hd; ++j) {
              acc += dout[j] * static_cast<double>(v[j]);
              dv[j] += p[s] * dout[j];
            }
            dp[s] = acc;
            dot_sum += p[s] * acc;
          }
          const T* q = bc.qkv.data() + t * 3 * d + h * hd;
          double* dq = dqkv.data() + t * 3 * d + h * hd;
          for (std::size_t s = 0; s <= t; ++s) {
            const double dscore = p[s] * (dp[s] - dot_sum) * scale;
            const T* k = bc.qkv.data() + s * 3 * d + d + h * hd;
            double* dk = dqkv.data() + s * 3 * d + d + h * hd;
            for (std::size_t j = 0; j < hd; ++j) {
              dq[j] += dscore * static_cast<double>(k[j]);
              dk[j] += dscore * static_cast<double>(q[j]);
            }
          }
        }
      }
      kernels::LinearBackward(bc.norm1.data(), S, d, w.qkv_weight.ptr(), 3 * d, dqkv.data(),
                              dnorm.data(), gw.qkv_weight.ptr(), gw.qkv_bias.ptr());
      kernels::LayerNormBackward(bc.x_in.data(), S, d, w.norm1_gain.ptr(), bc.mean1.data(),
                                 bc.rstd1.data(), dnorm.data(), dtmp.data(),
                                 gw.norm1_gain.ptr(), gw.norm1_bias.ptr());
      for (std::size_t i = 0; i < S * d; ++i) dx[i] += dtmp[i];
    }

    double* dpos = g.position_embedding.ptr();
    for (std::size_t t = 0; t < S; ++t) {
      double* dte = demb + c.tokens[t] * d;
      double* dpe = dpos + t * d;
      for (std::size_t j = 0; j < d; ++j) {
        dte[j] += dx[t * d + j];
        dpe[j] += dx[t * d + j];
      }
    }
    return loss_sum;
  }

  ModelConfig config_;
  Weights<T> weights_;
};

using Model = TransformerModel<float>;
using Model64 = TransformerModel<double>;

// Deterministic initialization: normal(0, 0.02) for embeddings and input
// projections, additionally scaled by 1/sqrt(2L) on the attention and FFN
// output projections; biases zero, norm gains one.
Model InitModel(const ModelConfig& config, std::uint64_t seed);

// Mean masked cross-entropy over the whole batch and its gradient.
template <typename T>
LossAndGradients ComputeLossAndGradients(const TransformerModel<T>& model,
                                         std::span<const SequenceExample> batch) {
  std::size_t count = 0;
  for (const auto& ex : batch) {
    for (std::uint8_t m : ex.mask) count += m ? 1 : 0;
  }
  if (count == 0) ThrowData("loss: mask selects no target positions");
  LossAndGradients out;
  out.grads = ZerosLike<double>(model.weights());
  out.target_count = count;
  const double weight = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (const auto& ex : batch) sum += model.AccumulateGradients(ex, weight, out.grads);
  out.loss = sum / static_cast<double>(count);
  return out;
}

template <typename T>
double ComputeLoss(const TransformerModel<T>& model, std::span<const SequenceExample> batch) {
  std::size_t count = 0;
  double sum = 0.0;
  for (const auto& ex : batch) {
    for (std::uint8_t m : ex.mask) count += m ? 1 : 0;
    sum += model.SummedLoss(ex);
  }
  if (count == 0) ThrowData("loss: mask selects no target positions");
  return sum / static_cast<double>(count);
}

// Drops the blocks whose original layer ids are listed. Surviving blocks keep
// their order and weights bit-exactly.
Model RemoveLayers(const Model& model, const std::set<std::uint32_t>& layer_ids);

}  // namespace ppcf::model
