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

#include "ppcf/synth/factory.hpp"

#include "ppcf/core/error.hpp"

namespace ppcf::synth {

BackendKind ParseBackendKind(const std::string& name) {
  if (name == "stub") return BackendKind::kStub;
  if (name == "remote") return BackendKind::kRemote;
  ThrowUsage("unknown backend '" + name + "' (expected stub | remote)");
}

std::string BackendKindName(BackendKind kind) {
  return kind == BackendKind::kStub ? "stub" : "remote";
}

nlohmann::json ToJson(const BackendConfig& c) {
  nlohmann::json j = {{"kind", BackendKindName(c.kind)}};
  if (c.kind == BackendKind::kStub) {
    j["world"] = c.world;
    j["seed"] = c.stub.seed;
    j["disagree_rate"] = c.stub.disagree_rate;
    j["disagree_attempts"] = c.stub.disagree_attempts;
  } else {
    j["base_url"] = c.remote.base_url;
    j["model"] = c.remote.model;
    j["api_key_env"] = c.remote.api_key_env;
    j["timeout_seconds"] = c.remote.timeout_seconds;
    j["retries"] = c.remote.retries;
  }
  return j;
}

std::unique_ptr<LLMBackend> MakeBackend(const BackendConfig& config) {
  if (config.kind == BackendKind::kStub) {
    return std::make_unique<StubBackend>(config.world, config.stub);
  }
  return std::make_unique<RemoteBackend>(config.remote);
}

}  // namespace ppcf::synth
