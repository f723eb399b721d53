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

#include "ppcf/fed/session.hpp"

#include <fstream>
#include <thread>

#include "ppcf/core/io.hpp"
#include "ppcf/eval/evaluate.hpp"

namespace ppcf::fed {
namespace {

void Log(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

struct ClientInputs {
  std::vector<QARecord> private_records;
  std::vector<QARecord> eval_records;
  model::Checkpoint base;
};

ClientInputs LoadClientInputs(const ClientConfig& cfg) {
  cfg.Validate();
  ClientInputs in;
  in.private_records = LoadQARecords(cfg.private_data);
  in.eval_records = LoadQARecords(cfg.eval_data);
  in.base = model::LoadCheckpoint(cfg.base_checkpoint);
  if (in.private_records.empty()) ThrowData("client: private dataset is empty");
  if (in.eval_records.empty()) ThrowData("client: evaluation dataset is empty");
  return in;
}

// Fine-tunes the received model, evaluates and writes the client outputs.
void FinishClient(const ClientConfig& cfg, const ClientInputs& in, ClientOutcome& out,
                  double sensitivity, std::ostream* log) {
  const auto limits = cfg.finetune.limits();
  const auto& vocab = out.received.vocab;
  const auto pre = eval::Evaluate(out.received.model, vocab, in.eval_records, "eval", limits);
  Log(log, "client: received model with " + std::to_string(out.received.model.layer_ids().size()) +
               " layers, accuracy before fine-tuning " + std::to_string(pre.accuracy));
  distill::TrainHooks hooks;
  hooks.progress = [&](const distill::TrainLogEntry& e) {
    Log(log, "client: finetune step " + std::to_string(e.step) + " loss " + std::to_string(e.label));
  };
  auto tuned = distill::FinetuneClient(out.received.model, vocab, in.private_records, cfg.finetune, hooks);
  out.finetune_log = std::move(tuned.log);
  out.final_model.model = std::move(tuned.model);
  out.final_model.vocab = vocab;
  out.final_model.metadata = out.received.metadata;
  out.final_model.metadata["stage"] = "client_finetuned";
  out.final_model.metadata["client_finetune"] = cfg.finetune;
  const auto post = eval::Evaluate(out.final_model.model, vocab, in.eval_records, "eval", limits);

  out.metrics = {{"pre_finetune_accuracy", pre.accuracy},
                 {"post_finetune_accuracy", post.accuracy},
                 {"eval_samples", post.sample_count},
                 {"private_records", in.private_records.size()},
                 {"records_sent", out.perturbed.size()},
                 {"epsilon", cfg.epsilon},
                 {"sensitivity", sensitivity},
                 {"layer_ids", out.final_model.model.layer_ids()},
                 {"parameters", out.final_model.model.parameter_count()},
                 {"base_parameters", in.base.model.parameter_count()}};
  if (cfg.evaluate_base) {
    out.metrics["base_accuracy"] =
        eval::Evaluate(in.base.model, in.base.vocab, in.eval_records, "eval", limits).accuracy;
  }
  Log(log, "client: accuracy after fine-tuning " + std::to_string(post.accuracy));

  if (cfg.output_dir.empty()) return;
  const auto config = ToJson(cfg);
  const auto& dir = cfg.output_dir;
  auto sidecar = [&](const std::filesystem::path& p) { WriteSidecar(p, config, cfg.seed); };
  WriteJsonLines(dir / "perturbed.jsonl", ToJsonRows(out.perturbed));
  sidecar(dir / "perturbed.jsonl");
  model::SaveCheckpoint(dir / "received.ckpt", out.received);
  sidecar(dir / "received.ckpt");
  model::SaveCheckpoint(dir / "final.ckpt", out.final_model);
  sidecar(dir / "final.ckpt");
  distill::WriteTrainingLog(dir / "finetune_log.jsonl", out.finetune_log);
  sidecar(dir / "finetune_log.jsonl");
  WriteJsonLines(dir / "progress.jsonl", out.progress);
  sidecar(dir / "progress.jsonl");
  nlohmann::json metrics = out.metrics;
  metrics["pre_finetune"] = eval::ToJson(pre);
  metrics["post_finetune"] = eval::ToJson(post);
  WriteFileText(dir / "metrics.json", metrics.dump(2) + "\n");
  sidecar(dir / "metrics.json");
}

class Dump {
 public:
  explicit Dump(const std::filesystem::path& path) {
    if (path.empty()) return;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) ThrowData("cannot open wire dump " + path.string());
  }
  std::ostream* stream() { return file_.is_open() ? &file_ : nullptr; }
  void Write(const std::vector<std::uint8_t>& bytes) {
    if (file_.is_open()) file_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }

 private:
  std::ofstream file_;
};

}  // namespace

std::string SessionPhaseName(SessionPhase p) {
  switch (p) {
    case SessionPhase::kHandshake:
      return "handshake";
    case SessionPhase::kReceiving:
      return "receiving";
    case SessionPhase::kProcessing:
      return "processing";
    case SessionPhase::kDelivering:
      return "delivering";
    case SessionPhase::kClosed:
      return "closed";
  }
  return "?";
}

void SessionState::Advance(SessionPhase next) {
  if (static_cast<int>(next) < static_cast<int>(phase_)) {
    ThrowData("session: cannot move from " + SessionPhaseName(phase_) + " back to " +
              SessionPhaseName(next));
  }
  phase_ = next;
}

void ProgressQueue::Push(nlohmann::json item) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;
    if (items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(std::move(item));
  }
  cv_.notify_one();
}

std::optional<nlohmann::json> ProgressQueue::Pop() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return !items_.empty() || closed_; });
  if (items_.empty()) return std::nullopt;
  auto item = std::move(items_.front());
  items_.pop_front();
  return item;
}

void ProgressQueue::Close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t ProgressQueue::dropped() const {
  std::lock_guard<std::mutex> lock(mu_);
  return dropped_;
}

void SendMessage(Socket& socket, const Message& msg, std::ostream* dump) {
  const auto bytes = EncodeMessage(msg);
  if (dump) dump->write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  socket.SendAll(bytes);
}

Message ReceiveMessage(Socket& socket, std::optional<std::uint32_t> expected_version) {
  const auto prefix = socket.RecvExact(4);
  const std::uint32_t n = DecodeLengthPrefix(prefix);
  const auto payload = socket.RecvExact(n);
  Message msg = DecodeControl(payload, expected_version);
  if (msg.kind == MessageKind::kModel) AttachBlob(msg, socket.RecvExact(DeclaredBlobLength(msg)));
  return msg;
}

void ServeSession(Socket& socket, const model::Checkpoint& base, const ServerConfig& cfg,
                  const ServeOptions& options, std::size_t session_index) {
  SessionState state;
  std::ostream* log = options.log;
  const std::string tag = "server[" + std::to_string(session_index) + "]: ";
  auto fail = [&](const std::string& phase, const std::string& message) {
    Log(log, tag + "error in " + phase + ": " + message);
    try {
      SendMessage(socket, MakeError(phase, message));
    } catch (const Error&) {
    }
    state.Advance(SessionPhase::kClosed);
  };

  std::vector<PerturbedRecord> dp;
  try {
    const Message hello = ReceiveMessage(socket, std::nullopt);
    if (hello.kind != MessageKind::kHello) return fail("handshake", "expected HELLO first");
    if (hello.version != kProtocolVersion) {
      return fail("handshake", "unsupported protocol version " + std::to_string(hello.version) +
                                   " (server speaks " + std::to_string(kProtocolVersion) + ")");
    }
    if (hello.body["role"] != "client") return fail("handshake", "peer is not a client");
    state.version = hello.version;
    SendMessage(socket, MakeHello("server"));
    state.Advance(SessionPhase::kReceiving);
    const Message data = ReceiveMessage(socket, kProtocolVersion);
    if (data.kind == MessageKind::kBye) {
      state.Advance(SessionPhase::kClosed);
      return;
    }
    if (data.kind != MessageKind::kPerturbedData) {
      return fail("receiving", "expected PERTURBED_DATA, got " + MessageKindName(data.kind));
    }
    dp = PerturbedRecordsFromMessage(data);
    state.records_received = dp.size();
  } catch (const WireError& e) {
    return fail(SessionPhaseName(state.phase()), e.what());
  } catch (const Error& e) {
    Log(log, tag + "transport failure in " + SessionPhaseName(state.phase()) + ": " + e.what());
    return;
  }
  Log(log, tag + "received " + std::to_string(dp.size()) + " perturbed records");

  state.Advance(SessionPhase::kProcessing);
  ProgressQueue queue(options.progress_capacity);
  std::thread sender([&] {
    while (auto item = queue.Pop()) {
      try {
        SendMessage(socket, MakeProgress(*item));
      } catch (const Error&) {
        // A vanished client surfaces when MODEL is sent.
      }
    }
  });
  ServerArtifacts artifacts;
  try {
    artifacts = RunServerPipeline(base, dp, cfg, [&](const nlohmann::json& b) { queue.Push(b); });
  } catch (const PhaseError& e) {
    queue.Close();
    sender.join();
    return fail(e.phase(), e.what());
  } catch (const Error& e) {
    queue.Close();
    sender.join();
    return fail("processing", e.what());
  }
  queue.Close();
  sender.join();
  if (queue.dropped() > 0) Log(log, tag + std::to_string(queue.dropped()) + " progress events dropped");

  state.Advance(SessionPhase::kDelivering);
  try {
    SendMessage(socket, MakeModel(model::EncodeCheckpoint(artifacts.model),
                                  artifacts.model.model.layer_ids()));
    Log(log, tag + "sent model with " + std::to_string(artifacts.model.model.layer_ids().size()) + " layers");
    if (!options.artifact_dir.empty()) {
      WriteServerArtifacts(artifacts, cfg,
                           options.artifact_dir / ("session-" + std::to_string(session_index)));
    }
    socket.SetReceiveTimeout(30.0);
    (void)ReceiveMessage(socket, kProtocolVersion);  // BYE
  } catch (const Error& e) {
    Log(log, tag + "after delivery: " + e.what());
  }
  state.Advance(SessionPhase::kClosed);
}

void Serve(Listener& listener, const model::Checkpoint& base, const ServerConfig& cfg,
           const ServeOptions& options) {
  for (std::size_t n = 0; options.max_sessions == 0 || n < options.max_sessions; ++n) {
    Socket s = listener.Accept();
    ServeSession(s, base, cfg, options, n);
  }
}

void ClientConfig::Validate() const {
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) ThrowUsage(std::string("client: ") + what + " path is required");
    if (!std::filesystem::exists(p)) ThrowData(std::string("client: ") + what + " not found: " + p.string());
  };
  need(private_data, "private data");
  need(eval_data, "evaluation data");
  need(base_checkpoint, "base checkpoint");
  if (!embedding_table.empty()) need(embedding_table, "embedding table");
  if (!(epsilon > 0.0)) ThrowUsage("client: epsilon must be > 0");
  if (finetune.max_steps > 0) finetune.Validate();
}

nlohmann::json ToJson(const ClientConfig& c) {
  return {{"private_data", c.private_data.string()},
          {"eval_data", c.eval_data.string()},
          {"base_checkpoint", c.base_checkpoint.string()},
          {"embedding_table", c.embedding_table.string()},
          {"epsilon", c.epsilon},
          {"sensitivity_mode", c.sensitivity_mode == dp::SensitivityMode::kExact ? "exact" : "bound"},
          {"finetune", c.finetune},
          {"seed", c.seed}};
}

std::vector<PerturbedRecord> PerturbPrivateData(const std::vector<QARecord>& records,
                                                const model::Checkpoint& base,
                                                const ClientConfig& cfg, double* sensitivity) {
  const dp::EmbeddingTable table = cfg.embedding_table.empty()
                                       ? dp::EmbeddingTable::FromModel(base.model)
                                       : dp::EmbeddingTable::Load(cfg.embedding_table);
  if (table.vocab_size() != base.vocab.size()) {
    ThrowData("client: embedding table has " + std::to_string(table.vocab_size()) +
              " rows for a vocabulary of " + std::to_string(base.vocab.size()));
  }
  dp::PrivacyBudget budget;
  budget.epsilon = cfg.epsilon;
  budget.sensitivity = dp::Sensitivity(table, cfg.sensitivity_mode);
  if (sensitivity) *sensitivity = budget.sensitivity;
  Rng rng = Rng(cfg.seed).Split(0x7065727475726221);  // "perturb!"
  return dp::PerturbDataset(records, budget, table, base.vocab, rng);
}

ClientOutcome RunClient(const Endpoint& server, const ClientConfig& cfg, std::ostream* log) {
  const ClientInputs in = LoadClientInputs(cfg);
  ClientOutcome out;
  double sensitivity = 0.0;
  out.perturbed = PerturbPrivateData(in.private_records, in.base, cfg, &sensitivity);
  Log(log, "client: perturbed " + std::to_string(out.perturbed.size()) + " records");

  Dump dump(cfg.wire_dump);
  Socket socket = Connect(server);
  SendMessage(socket, MakeHello("client"), dump.stream());
  const Message reply = ReceiveMessage(socket, std::nullopt);
  if (reply.kind == MessageKind::kError) {
    ThrowBackend("server rejected handshake: " + reply.body["message"].get<std::string>());
  }
  if (reply.kind != MessageKind::kHello || reply.version != kProtocolVersion) {
    ThrowData("client: unexpected handshake reply " + MessageKindName(reply.kind));
  }
  SendMessage(socket, MakePerturbedData(out.perturbed), dump.stream());
  while (true) {
    Message msg = ReceiveMessage(socket, kProtocolVersion);
    if (msg.kind == MessageKind::kProgress) {
      Log(log, "client: progress " + msg.body.dump());
      out.progress.push_back(std::move(msg.body));
    } else if (msg.kind == MessageKind::kError) {
      ThrowBackend("server error in phase " + msg.body["phase"].get<std::string>() + ": " +
                   msg.body["message"].get<std::string>());
    } else if (msg.kind == MessageKind::kModel) {
      out.received = model::DecodeCheckpoint(msg.blob);
      break;
    } else {
      ThrowData("client: unexpected " + MessageKindName(msg.kind) + " while waiting for MODEL");
    }
  }
  SendMessage(socket, MakeBye(), dump.stream());
  socket.Close();
  FinishClient(cfg, in, out, sensitivity, log);
  return out;
}

ClientOutcome RunLoopback(const ClientConfig& client, const model::Checkpoint& server_base,
                          const ServerConfig& server, std::ostream* log,
                          const std::filesystem::path& server_artifact_dir) {
  const ClientInputs in = LoadClientInputs(client);
  ClientOutcome out;
  double sensitivity = 0.0;
  out.perturbed = PerturbPrivateData(in.private_records, in.base, client, &sensitivity);
  Log(log, "client: perturbed " + std::to_string(out.perturbed.size()) + " records");

  Dump dump(client.wire_dump);
  const auto hello_bytes = EncodeMessage(MakeHello("client"));
  const auto data_bytes = EncodeMessage(MakePerturbedData(out.perturbed));
  dump.Write(hello_bytes);
  dump.Write(data_bytes);

  // Server side of the exchange, on the decoded bytes.
  const Message hello = DecodeMessage(hello_bytes, kProtocolVersion);
  if (hello.kind != MessageKind::kHello) ThrowData("loopback: expected HELLO");
  const auto dp = PerturbedRecordsFromMessage(DecodeMessage(data_bytes, kProtocolVersion));
  const auto artifacts = RunServerPipeline(server_base, dp, server, [&](const nlohmann::json& b) {
    Log(log, "client: progress " + b.dump());
    out.progress.push_back(b);
  });
  if (!server_artifact_dir.empty()) WriteServerArtifacts(artifacts, server, server_artifact_dir);
  const auto model_bytes = EncodeMessage(
      MakeModel(model::EncodeCheckpoint(artifacts.model), artifacts.model.model.layer_ids()));

  const Message model_msg = DecodeMessage(model_bytes, kProtocolVersion);
  out.received = model::DecodeCheckpoint(model_msg.blob);
  dump.Write(EncodeMessage(MakeBye()));
  FinishClient(client, in, out, sensitivity, log);
  return out;
}

}  // namespace ppcf::fed
