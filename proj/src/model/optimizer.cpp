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

#include "ppcf/model/optimizer.hpp"

#include <cmath>
#include <string>

namespace ppcf::model {
namespace {

bool SameStructure(const Weights<float>& w, const Weights<double>& g) {
  if (w.blocks.size() != g.blocks.size()) return false;
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    if (w.blocks[i].layer_id != g.blocks[i].layer_id) return false;
  }
  bool ok = true;
  VisitTensorPairs(w, g, [&](const std::string&, const Tensor<float>& a, const Tensor<double>& b) {
    ok = ok && a.shape == b.shape && a.size() == b.size();
  });
  return ok;
}

}  // namespace

AdamWState MakeAdamWState(const Model& model) {
  AdamWState s;
  s.first_moment = ZerosLike<double>(model.weights());
  s.second_moment = ZerosLike<double>(model.weights());
  return s;
}

double GradientNorm(const Gradients& grads) {
  double sq = 0.0;
  VisitTensors(grads, [&](const std::string&, const Tensor<double>& t) {
    for (double v : t.data) sq += v * v;
  });
  return std::sqrt(sq);
}

void ApplyAdamW(Model& model, const Gradients& grads, AdamWState& state,
                const AdamWParams& params) {
  Weights<float>& w = model.mutable_weights();
  if (!SameStructure(w, grads) || !SameStructure(w, state.first_moment) ||
      !SameStructure(w, state.second_moment)) {
    ThrowData("apply_update: gradient or optimizer state shape mismatch");
  }
  double clip = 1.0;
  if (params.clip_norm > 0.0) {
    const double norm = GradientNorm(grads);
    if (!std::isfinite(norm)) ThrowNumeric("apply_update: non-finite gradient norm");
    if (norm > params.clip_norm) clip = params.clip_norm / norm;
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(params.beta1, t);
  const double bias2 = 1.0 - std::pow(params.beta2, t);

  // Walk parameters, gradients and both moments in lockstep.
  std::vector<Tensor<float>*> p;
  std::vector<const Tensor<double>*> g;
  std::vector<Tensor<double>*> m1, m2;
  std::vector<bool> decay;
  VisitTensors(w, [&](const std::string&, Tensor<float>& t_) {
    p.push_back(&t_);
    decay.push_back(t_.shape.size() >= 2);
  });
  VisitTensors(grads, [&](const std::string&, const Tensor<double>& t_) { g.push_back(&t_); });
  VisitTensors(state.first_moment, [&](const std::string&, Tensor<double>& t_) { m1.push_back(&t_); });
  VisitTensors(state.second_moment, [&](const std::string&, Tensor<double>& t_) { m2.push_back(&t_); });

  for (std::size_t k = 0; k < p.size(); ++k) {
    float* pd = p[k]->ptr();
    const double* gd = g[k]->ptr();
    double* a = m1[k]->ptr();
    double* b = m2[k]->ptr();
    const double wd = decay[k] ? params.weight_decay : 0.0;
    for (std::size_t i = 0; i < p[k]->size(); ++i) {
      const double gi = gd[i] * clip;
      a[i] = params.beta1 * a[i] + (1.0 - params.beta1) * gi;
      b[i] = params.beta2 * b[i] + (1.0 - params.beta2) * gi * gi;
      const double mhat = a[i] / bias1;
      const double vhat = b[i] / bias2;
      const double pi = static_cast<double>(pd[i]);
      const double update = mhat / (std::sqrt(vhat) + params.epsilon) + wd * pi;
      const double next = pi - params.learning_rate * update;
      if (!std::isfinite(next)) ThrowNumeric("apply_update: non-finite parameter");
      pd[i] = static_cast<float>(next);
    }
  }
}

}  // namespace ppcf::model
