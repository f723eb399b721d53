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

#include "ppcf/fed/wire.hpp"

#include <set>

#include "ppcf/core/io.hpp"

namespace ppcf::fed {
namespace {

using nlohmann::json;

void RequireKeys(const json& body, const std::set<std::string>& required,
                 const std::set<std::string>& optional, const std::string& kind) {
  if (!body.is_object()) throw WireError(WireErrorCode::kSchema, kind + " body must be an object");
  for (const auto& key : required) {
    if (!body.contains(key)) throw WireError(WireErrorCode::kSchema, kind + " body lacks '" + key + "'");
  }
  for (const auto& [key, value] : body.items()) {
    if (!required.count(key) && !optional.count(key)) {
      throw WireError(WireErrorCode::kSchema, kind + " body has unexpected field '" + key + "'");
    }
  }
}

bool IsHexDigest(const json& v) {
  if (!v.is_string()) return false;
  const auto& s = v.get_ref<const std::string&>();
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

std::string MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kHello:
      return "HELLO";
    case MessageKind::kPerturbedData:
      return "PERTURBED_DATA";
    case MessageKind::kProgress:
      return "PROGRESS";
    case MessageKind::kModel:
      return "MODEL";
    case MessageKind::kError:
      return "ERROR";
    case MessageKind::kBye:
      return "BYE";
  }
  return "?";
}

std::optional<MessageKind> ParseMessageKind(const std::string& name) {
  for (auto k : {MessageKind::kHello, MessageKind::kPerturbedData, MessageKind::kProgress,
                 MessageKind::kModel, MessageKind::kError, MessageKind::kBye}) {
    if (MessageKindName(k) == name) return k;
  }
  return std::nullopt;
}

std::string WireErrorCodeName(WireErrorCode code) {
  switch (code) {
    case WireErrorCode::kTruncated:
      return "truncated";
    case WireErrorCode::kOversize:
      return "oversize";
    case WireErrorCode::kMalformed:
      return "malformed";
    case WireErrorCode::kUnknownKind:
      return "unknown-kind";
    case WireErrorCode::kVersion:
      return "version";
    case WireErrorCode::kSchema:
      return "schema";
    case WireErrorCode::kChecksum:
      return "checksum";
  }
  return "?";
}

void ValidateBody(MessageKind kind, const json& body) {
  const std::string name = MessageKindName(kind);
  switch (kind) {
    case MessageKind::kHello:
      RequireKeys(body, {"role"}, {}, name);
      if (!body["role"].is_string() || (body["role"] != "client" && body["role"] != "server")) {
        throw WireError(WireErrorCode::kSchema, "HELLO role must be \"client\" or \"server\"");
      }
      break;
    case MessageKind::kPerturbedData:
      RequireKeys(body, {"records"}, {}, name);
      if (!body["records"].is_array()) {
        throw WireError(WireErrorCode::kSchema, "PERTURBED_DATA records must be an array");
      }
      for (const auto& r : body["records"]) {
        try {
          (void)PerturbedRecordFromJson(r);
        } catch (const Error& e) {
          throw WireError(WireErrorCode::kSchema, std::string("PERTURBED_DATA record: ") + e.what());
        }
      }
      break;
    case MessageKind::kProgress:
      if (!body.is_object() || !body.contains("phase") || !body["phase"].is_string()) {
        throw WireError(WireErrorCode::kSchema, "PROGRESS body needs a string 'phase'");
      }
      break;
    case MessageKind::kModel:
      RequireKeys(body, {"byte_length", "sha256", "layer_ids"}, {}, name);
      if (!body["byte_length"].is_number_unsigned()) {
        throw WireError(WireErrorCode::kSchema, "MODEL byte_length must be an unsigned integer");
      }
      if (body["byte_length"].get<std::uint64_t>() > kMaxBlobBytes) {
        throw WireError(WireErrorCode::kOversize, "MODEL blob exceeds cap");
      }
      if (!IsHexDigest(body["sha256"])) {
        throw WireError(WireErrorCode::kSchema, "MODEL sha256 must be 64 lowercase hex digits");
      }
      if (!body["layer_ids"].is_array()) {
        throw WireError(WireErrorCode::kSchema, "MODEL layer_ids must be an array");
      }
      for (const auto& id : body["layer_ids"]) {
        if (!id.is_number_unsigned()) {
          throw WireError(WireErrorCode::kSchema, "MODEL layer_ids must be unsigned integers");
        }
      }
      break;
    case MessageKind::kError:
      RequireKeys(body, {"phase", "message"}, {}, name);
      if (!body["phase"].is_string() || !body["message"].is_string()) {
        throw WireError(WireErrorCode::kSchema, "ERROR phase and message must be strings");
      }
      break;
    case MessageKind::kBye:
      RequireKeys(body, {}, {}, name);
      break;
  }
}

Message MakeHello(const std::string& role) {
  return {MessageKind::kHello, kProtocolVersion, {{"role", role}}, {}};
}

Message MakePerturbedData(const std::vector<PerturbedRecord>& records) {
  return {MessageKind::kPerturbedData, kProtocolVersion, {{"records", ToJsonRows(records)}}, {}};
}

Message MakeProgress(const json& fields) {
  ValidateBody(MessageKind::kProgress, fields);
  return {MessageKind::kProgress, kProtocolVersion, fields, {}};
}

Message MakeModel(std::vector<std::uint8_t> checkpoint, const std::vector<std::uint32_t>& layer_ids) {
  Message m{MessageKind::kModel, kProtocolVersion, json::object(), {}};
  m.body["byte_length"] = static_cast<std::uint64_t>(checkpoint.size());
  m.body["sha256"] = Sha256Hex(checkpoint);
  m.body["layer_ids"] = layer_ids;
  m.blob = std::move(checkpoint);
  return m;
}

Message MakeError(const std::string& phase, const std::string& message) {
  return {MessageKind::kError, kProtocolVersion, {{"phase", phase}, {"message", message}}, {}};
}

Message MakeBye() { return {MessageKind::kBye, kProtocolVersion, json::object(), {}}; }

std::vector<PerturbedRecord> PerturbedRecordsFromMessage(const Message& msg) {
  if (msg.kind != MessageKind::kPerturbedData) {
    throw WireError(WireErrorCode::kSchema, "expected PERTURBED_DATA, got " + MessageKindName(msg.kind));
  }
  ValidateBody(msg.kind, msg.body);
  std::vector<PerturbedRecord> out;
  for (const auto& r : msg.body["records"]) out.push_back(PerturbedRecordFromJson(r));
  return out;
}

std::vector<std::uint8_t> EncodeMessage(const Message& msg) {
  ValidateBody(msg.kind, msg.body);
  if (msg.kind == MessageKind::kModel) {
    if (msg.blob.size() != msg.body["byte_length"].get<std::uint64_t>()) {
      throw WireError(WireErrorCode::kSchema, "MODEL blob does not match byte_length");
    }
  } else if (!msg.blob.empty()) {
    throw WireError(WireErrorCode::kSchema, "only MODEL messages carry a blob");
  }
  const json control = {{"kind", MessageKindName(msg.kind)}, {"version", msg.version}, {"body", msg.body}};
  const std::string payload = control.dump();
  if (payload.size() > kMaxControlBytes) throw WireError(WireErrorCode::kOversize, "control frame exceeds cap");
  std::vector<std::uint8_t> out;
  out.reserve(4 + payload.size() + msg.blob.size());
  const auto n = static_cast<std::uint32_t>(payload.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  out.insert(out.end(), msg.blob.begin(), msg.blob.end());
  return out;
}

std::uint32_t DecodeLengthPrefix(std::span<const std::uint8_t> b) {
  if (b.size() < 4) throw WireError(WireErrorCode::kTruncated, "length prefix needs 4 bytes");
  const std::uint32_t n = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
                          (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  if (n > kMaxControlBytes) {
    throw WireError(WireErrorCode::kOversize,
                    "control frame of " + std::to_string(n) + " bytes exceeds the 64 MiB cap");
  }
  return n;
}

Message DecodeControl(std::span<const std::uint8_t> payload,
                      std::optional<std::uint32_t> expected_version) {
  json control;
  try {
    control = json::parse(payload.begin(), payload.end());
  } catch (const json::exception& e) {
    throw WireError(WireErrorCode::kMalformed, std::string("control payload is not JSON: ") + e.what());
  }
  if (!control.is_object() || control.size() != 3 || !control.contains("kind") ||
      !control.contains("version") || !control.contains("body")) {
    throw WireError(WireErrorCode::kMalformed, "control payload must be {kind, version, body}");
  }
  if (!control["kind"].is_string()) throw WireError(WireErrorCode::kMalformed, "kind must be a string");
  const auto kind = ParseMessageKind(control["kind"].get<std::string>());
  if (!kind) {
    throw WireError(WireErrorCode::kUnknownKind, "unknown message kind '" + control["kind"].get<std::string>() + "'");
  }
  if (!control["version"].is_number_unsigned() ||
      control["version"].get<std::uint64_t>() > 0xffffffffULL) {
    throw WireError(WireErrorCode::kMalformed, "version must be a u32");
  }
  Message msg;
  msg.kind = *kind;
  msg.version = control["version"].get<std::uint32_t>();
  if (expected_version && msg.version != *expected_version) {
    throw WireError(WireErrorCode::kVersion, "protocol version " + std::to_string(msg.version) +
                                                 " (expected " + std::to_string(*expected_version) + ")");
  }
  msg.body = std::move(control["body"]);
  ValidateBody(msg.kind, msg.body);
  return msg;
}

std::size_t DeclaredBlobLength(const Message& msg) {
  if (msg.kind != MessageKind::kModel) return 0;
  return static_cast<std::size_t>(msg.body["byte_length"].get<std::uint64_t>());
}

void AttachBlob(Message& msg, std::vector<std::uint8_t> blob) {
  if (blob.size() != DeclaredBlobLength(msg)) {
    throw WireError(WireErrorCode::kTruncated, "MODEL blob has " + std::to_string(blob.size()) +
                                                   " bytes, declared " +
                                                   std::to_string(DeclaredBlobLength(msg)));
  }
  if (Sha256Hex(blob) != msg.body["sha256"].get<std::string>()) {
    throw WireError(WireErrorCode::kChecksum, "MODEL blob checksum mismatch");
  }
  msg.blob = std::move(blob);
}

StreamDecodeResult TryDecodeMessage(std::span<const std::uint8_t> bytes,
                                    std::optional<std::uint32_t> expected_version) {
  StreamDecodeResult out;
  if (bytes.size() < 4) return out;
  const std::uint32_t n = DecodeLengthPrefix(bytes.first(4));
  if (bytes.size() < 4 + std::size_t{n}) return out;
  Message msg = DecodeControl(bytes.subspan(4, n), expected_version);
  const std::size_t blob_len = DeclaredBlobLength(msg);
  const std::size_t total = 4 + std::size_t{n} + blob_len;
  if (bytes.size() < total) return out;
  if (blob_len > 0 || msg.kind == MessageKind::kModel) {
    const auto blob = bytes.subspan(4 + n, blob_len);
    AttachBlob(msg, std::vector<std::uint8_t>(blob.begin(), blob.end()));
  }
  out.message = std::move(msg);
  out.consumed = total;
  return out;
}

Message DecodeMessage(std::span<const std::uint8_t> bytes,
                      std::optional<std::uint32_t> expected_version) {
  auto r = TryDecodeMessage(bytes, expected_version);
  if (!r.message) throw WireError(WireErrorCode::kTruncated, "incomplete frame");
  if (r.consumed != bytes.size()) {
    throw WireError(WireErrorCode::kMalformed, std::to_string(bytes.size() - r.consumed) +
                                                   " trailing bytes after frame");
  }
  return std::move(*r.message);
}

}  // namespace ppcf::fed
