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

#include <memory>
#include <string>

#include <json.hpp>

#include "ppcf/eval/toy_task.hpp"
#include "ppcf/synth/backend.hpp"
#include "ppcf/synth/remote_backend.hpp"
#include "ppcf/synth/stub_backend.hpp"

namespace ppcf::synth {

enum class BackendKind { kStub, kRemote };

BackendKind ParseBackendKind(const std::string& name);
std::string BackendKindName(BackendKind kind);

struct BackendConfig {
  BackendKind kind = BackendKind::kStub;
  eval::ToyTaskSpec world;  // ground truth of the stub
  StubOptions stub;
  RemoteOptions remote;
};

// Never includes the API token, only the name of its environment variable.
nlohmann::json ToJson(const BackendConfig& c);

std::unique_ptr<LLMBackend> MakeBackend(const BackendConfig& config);

}  // namespace ppcf::synth
