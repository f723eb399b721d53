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
#include <vector>

#include <json.hpp>

#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/transformer.hpp"
#include "ppcf/prune/block_influence.hpp"

namespace ppcf::prune {

struct PruningPlan {
  // Layer ids in removal order (lowest score first).
  std::vector<std::uint32_t> remove;
  double ratio = 0.0;
  std::string metric = "bi";
  bool operator==(const PruningPlan&) const = default;
};

// Number of layers a ratio removes: round(ratio * L), halves away from zero.
std::size_t LayersToRemove(double ratio, std::size_t n_layers);

// Picks the k = round(ratio * L) lowest scores; ties remove the deeper layer
// first. Throws a data error for a ratio outside [0, 1) or one that would
// leave no layer.
PruningPlan PlanPruning(const std::vector<double>& scores,
                        const std::vector<std::uint32_t>& layer_ids, double ratio,
                        const std::string& metric);

model::Model Prune(const model::Model& model, const PruningPlan& plan);

nlohmann::json ToJson(const PruningPlan& p);
PruningPlan PruningPlanFromJson(const nlohmann::json& j);

// Pruned checkpoint carrying the plan and report in its metadata under
// "pruning_plan" and "bi_report".
model::Checkpoint PruneCheckpoint(const model::Checkpoint& dense, const PruningPlan& plan,
                                  const BIReport& report);

}  // namespace ppcf::prune
