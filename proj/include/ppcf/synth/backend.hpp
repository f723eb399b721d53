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
#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

namespace ppcf::synth {

// Every backend call made while synthesizing carries a deterministic id:
//   call_id = attempt * kSlotsPerAttempt + slot
// with slot 0 for question generation, 1..kMaxVotes for the answer votes and
// kRationaleSlot for the rationale.
inline constexpr std::uint64_t kMaxVotes = 5;
inline constexpr std::uint64_t kRationaleSlot = kMaxVotes + 1;
inline constexpr std::uint64_t kSlotsPerAttempt = kMaxVotes + 2;

inline std::uint64_t MakeCallId(std::uint64_t attempt, std::uint64_t slot) {
  return attempt * kSlotsPerAttempt + slot;
}
inline std::uint64_t CallAttempt(std::uint64_t call_id) { return call_id / kSlotsPerAttempt; }
inline std::uint64_t CallSlot(std::uint64_t call_id) { return call_id % kSlotsPerAttempt; }

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::uint64_t call_id = 0;
};

// Chat-completion style text generator. Implementations must be safe to call
// from several threads at once.
class LLMBackend {
 public:
  virtual ~LLMBackend() = default;
  virtual std::string kind() const = 0;
  // Returns the assistant text; throws a backend error on transport failure.
  virtual std::string Complete(const ChatRequest& request) = 0;
};

// Adapts a callable; used for scripted replies in tests.
class FunctionBackend final : public LLMBackend {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionBackend(Fn fn, std::string kind = "function")
      : fn_(std::move(fn)), kind_(std::move(kind)) {}
  std::string kind() const override { return kind_; }
  std::string Complete(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
  std::string kind_;
};

}  // namespace ppcf::synth
