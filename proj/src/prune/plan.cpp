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

#include "ppcf/prune/plan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ppcf/core/error.hpp"

namespace ppcf::prune {

std::size_t LayersToRemove(double ratio, std::size_t n_layers) {
  return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n_layers)));
}

PruningPlan PlanPruning(const std::vector<double>& scores,
                        const std::vector<std::uint32_t>& layer_ids, double ratio,
                        const std::string& metric) {
  if (scores.size() != layer_ids.size()) {
    ThrowData("plan_pruning: " + std::to_string(scores.size()) + " scores for " +
              std::to_string(layer_ids.size()) + " layers");
  }
  if (!(ratio >= 0.0 && ratio < 1.0)) ThrowData("plan_pruning: ratio must be in [0, 1)");
  const std::size_t L = scores.size();
  const std::size_t k = LayersToRemove(ratio, L);
  if (k + 1 > L) {
    ThrowData("plan_pruning: ratio " + std::to_string(ratio) + " removes " + std::to_string(k) +
              " of " + std::to_string(L) + " layers, leaving none");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) ThrowNumeric("plan_pruning: non-finite score");
  }
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a > b;  // ties: deeper layer first
  });
  PruningPlan plan;
  plan.ratio = ratio;
  plan.metric = metric;
  for (std::size_t i = 0; i < k; ++i) plan.remove.push_back(layer_ids[order[i]]);
  return plan;
}

model::Model Prune(const model::Model& model, const PruningPlan& plan) {
  const std::set<std::uint32_t> ids(plan.remove.begin(), plan.remove.end());
  if (ids.size() != plan.remove.size()) ThrowData("prune: plan lists a layer twice");
  return model::RemoveLayers(model, ids);
}

nlohmann::json ToJson(const PruningPlan& p) {
  return {{"remove", p.remove}, {"ratio", p.ratio}, {"metric", p.metric}};
}

PruningPlan PruningPlanFromJson(const nlohmann::json& j) {
  try {
    PruningPlan p;
    p.remove = j.at("remove").get<std::vector<std::uint32_t>>();
    p.ratio = j.at("ratio").get<double>();
    p.metric = j.at("metric").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string("pruning plan: ") + e.what());
  }
}

model::Checkpoint PruneCheckpoint(const model::Checkpoint& dense, const PruningPlan& plan,
                                  const BIReport& report) {
  model::Checkpoint out;
  out.model = Prune(dense.model, plan);
  out.vocab = dense.vocab;
  out.metadata = dense.metadata;
  out.metadata["pruning_plan"] = ToJson(plan);
  out.metadata["bi_report"] = ToJson(report);
  return out;
}

}  // namespace ppcf::prune
