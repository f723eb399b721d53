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

// OpenAI-compatible chat-completions client:
//   POST {base_url}/chat/completions
//   {"model", "messages": [{"role": "system"}, {"role": "user"}],
//    "temperature", "seed"}
// and reads choices[0].message.content. The bearer token is read from the
// environment variable named by `api_key_env` at construction.

#include <atomic>
#include <cstddef>
#include <string>

#include "ppcf/synth/backend.hpp"

namespace ppcf::synth {

struct RemoteOptions {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "PPCF_LLM_API_KEY";
  double timeout_seconds = 60.0;
  // Additional attempts after a failed one; retries = 2 means 3 attempts.
  std::size_t retries = 2;
  double backoff_seconds = 0.5;  // doubled after every failed attempt
};

class RemoteBackend final : public LLMBackend {
 public:
  explicit RemoteBackend(RemoteOptions options);

  std::string kind() const override { return "remote"; }
  std::string Complete(const ChatRequest& request) override;

  // Number of HTTP attempts made so far, including failed ones.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace ppcf::synth
