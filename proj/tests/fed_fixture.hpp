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

// A tiny but complete federation setup (toy data on disk, random base model,
// stub backend) and a test-side scanner for the client -> server transcript.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ppcf/core/io.hpp"
#include "ppcf/core/records.hpp"
#include "ppcf/eval/toy_task.hpp"
#include "ppcf/fed/session.hpp"
#include "ppcf/model/checkpoint.hpp"
#include "ppcf/model/transformer.hpp"

namespace ppcf::testutil {

struct FedFixture {
  std::filesystem::path dir;
  eval::ToyTaskSpec spec;
  std::vector<QARecord> private_records;
  model::Checkpoint base;
  fed::ClientConfig client;
  fed::ServerConfig server;
};

inline FedFixture MakeFedFixture(const std::string& name, std::size_t private_records = 12) {
  FedFixture f;
  f.dir = FreshDir(name);
  f.spec.vocab_slice = 8;
  f.spec.train_size = private_records;
  f.spec.val_size = 4;
  f.spec.test_size = 8;
  f.spec.public_size = 8;
  const auto data = eval::MakeToyTask(f.spec);
  eval::WriteToyTask(data, f.dir / "data");
  f.private_records = eval::AsQARecords(data.train);

  model::ModelConfig mc;
  const auto vocab = eval::ToyWorld(f.spec).MakeVocabulary();
  mc.vocab_size = vocab.size();
  mc.d_model = 16;
  mc.n_layers = 4;
  mc.n_heads = 2;
  mc.d_ff = 32;
  mc.max_seq_len = 48;
  f.base = model::Checkpoint{model::InitModel(mc, 21), vocab, {}};
  model::SaveCheckpoint(f.dir / "base.ckpt", f.base);

  f.client.private_data = f.dir / "data" / "train.jsonl";
  f.client.eval_data = f.dir / "data" / "test.jsonl";
  f.client.base_checkpoint = f.dir / "base.ckpt";
  f.client.epsilon = 3.0;
  f.client.finetune.batch_size = 4;
  f.client.finetune.learning_rate = 1e-3;
  f.client.finetune.max_steps = 3;
  f.client.finetune.eval_every = 0;
  f.client.seed = 5;
  f.client.output_dir = f.dir / "client";
  f.client.wire_dump = f.dir / "client" / "wire.bin";

  f.server.backend.world = f.spec;
  f.server.synth.ratio = 1;
  f.server.prune_ratio = 0.5;
  f.server.retrain.batch_size = 4;
  f.server.retrain.learning_rate = 1e-3;
  f.server.retrain.max_steps = 3;
  f.server.retrain.eval_every = 0;
  f.server.server_eval_samples = 4;
  f.server.seed = 9;
  return f;
}

// Runs the server in a forked child process serving exactly one session,
// and the client in this process.
inline fed::ClientOutcome RunTwoProcess(const FedFixture& f) {
  fed::Listener listener(fed::Endpoint{"127.0.0.1", 0});
  const std::uint16_t port = listener.port();
  std::cout.flush();
  std::cerr.flush();
  std::fflush(nullptr);
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    int code = 0;
    try {
      auto sock = listener.Accept();
      fed::ServeSession(sock, f.base, f.server);
    } catch (...) {
      code = 1;
    }
    _exit(code);
  }
  listener.Close();
  fed::ClientOutcome outcome;
  std::exception_ptr failure;
  try {
    outcome = fed::RunClient(fed::Endpoint{"127.0.0.1", port}, f.client);
  } catch (...) {
    failure = std::current_exception();
  }
  int status = 0;
  waitpid(pid, &status, 0);
  if (failure) std::rethrow_exception(failure);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw std::runtime_error("server process failed");
  return outcome;
}

// Every raw private string that occurs verbatim in the transcript: whole
// questions, and the private-only field names.
inline std::vector<std::string> ScanTranscript(const std::vector<std::uint8_t>& bytes,
                                               const std::vector<QARecord>& records) {
  const std::string hay(bytes.begin(), bytes.end());
  std::vector<std::string> leaks;
  for (const auto& r : records) {
    if (hay.find(r.question) != std::string::npos) leaks.push_back(r.id + ": " + r.question);
  }
  for (const char* key : {"\"question\"", "\"choices\"", "\"answer\"", "\"rationale\""}) {
    if (hay.find(key) != std::string::npos) leaks.push_back(std::string("field ") + key);
  }
  return leaks;
}

}  // namespace ppcf::testutil
