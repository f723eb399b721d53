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

// Client and server ends of one federation session, over sockets or fully
// in-process (loopback). Both modes run the same phases on the same encoded
// messages, so fixed seeds give bit-identical checkpoints.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/dp/mechanism.hpp"
#include "ppcf/fed/server_pipeline.hpp"
#include "ppcf/fed/socket.hpp"
#include "ppcf/fed/wire.hpp"

namespace ppcf::fed {

enum class SessionPhase { kHandshake, kReceiving, kProcessing, kDelivering, kClosed };
std::string SessionPhaseName(SessionPhase p);

// Monotone phase tracker; moving backwards throws.
class SessionState {
 public:
  SessionPhase phase() const { return phase_; }
  void Advance(SessionPhase next);
  std::uint32_t version = 0;
  std::size_t records_received = 0;

 private:
  SessionPhase phase_ = SessionPhase::kHandshake;
};

// Bounded queue of PROGRESS bodies; a full queue drops its oldest entry so
// producers never block.
class ProgressQueue {
 public:
  explicit ProgressQueue(std::size_t capacity) : capacity_(capacity < 1 ? 1 : capacity) {}
  void Push(nlohmann::json item);
  // Blocks until an item is available or the queue is closed and drained.
  std::optional<nlohmann::json> Pop();
  void Close();
  std::size_t dropped() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<nlohmann::json> items_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

// Framed message I/O over a socket. `dump`, when set, receives a copy of
// every byte sent.
void SendMessage(Socket& socket, const Message& msg, std::ostream* dump = nullptr);
Message ReceiveMessage(Socket& socket, std::optional<std::uint32_t> expected_version = kProtocolVersion);

struct ServeOptions {
  std::size_t max_sessions = 0;  // 0 = unbounded
  std::size_t progress_capacity = 64;
  std::filesystem::path artifact_dir;  // per-session subdirectories when set
  std::ostream* log = nullptr;
};

// Runs one session on an accepted connection. Returns normally after sending
// ERROR for protocol or pipeline failures.
void ServeSession(Socket& socket, const model::Checkpoint& base, const ServerConfig& cfg,
                  const ServeOptions& options = {}, std::size_t session_index = 0);

// Accepts sessions one at a time.
void Serve(Listener& listener, const model::Checkpoint& base, const ServerConfig& cfg,
           const ServeOptions& options = {});

struct ClientConfig {
  std::filesystem::path private_data;  // JSONL of private records
  std::filesystem::path eval_data;     // JSONL used for local evaluation
  // Public base checkpoint providing the vocabulary and, unless
  // `embedding_table` is set, the perturbation embeddings.
  std::filesystem::path base_checkpoint;
  std::filesystem::path embedding_table;
  double epsilon = 3.0;
  dp::SensitivityMode sensitivity_mode = dp::SensitivityMode::kExact;
  distill::TrainConfig finetune;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
  std::filesystem::path wire_dump;  // client -> server bytes
  bool evaluate_base = false;       // also report the dense base model

  void Validate() const;
};

nlohmann::json ToJson(const ClientConfig& c);

struct ClientOutcome {
  std::vector<PerturbedRecord> perturbed;
  model::Checkpoint received;
  model::Checkpoint final_model;
  std::vector<distill::TrainLogEntry> finetune_log;
  std::vector<nlohmann::json> progress;
  nlohmann::json metrics;
};

// Phase 1 on the client: D -> D_p.
std::vector<PerturbedRecord> PerturbPrivateData(const std::vector<QARecord>& records,
                                                const model::Checkpoint& base,
                                                const ClientConfig& cfg, double* sensitivity = nullptr);

// Connects to a server, runs the whole client side and writes its outputs.
ClientOutcome RunClient(const Endpoint& server, const ClientConfig& cfg,
                        std::ostream* log = nullptr);

// Same phases in-process: messages are encoded and decoded exactly as on the
// wire, the server pipeline runs in this process.
ClientOutcome RunLoopback(const ClientConfig& client, const model::Checkpoint& server_base,
                          const ServerConfig& server, std::ostream* log = nullptr,
                          const std::filesystem::path& server_artifact_dir = {});

}  // namespace ppcf::fed
