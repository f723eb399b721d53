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

// Wire protocol between client and server.
//
// Every message is one control frame:
//   u32 big-endian payload length N (N <= kMaxControlBytes)
//   N bytes of UTF-8 JSON: {"kind": <KIND>, "version": <u32>, "body": {...}}
// A MODEL control frame is immediately followed by a raw blob of exactly
// body.byte_length bytes whose SHA-256 equals body.sha256 (lowercase hex).
//
// Body schemas (extra keys are rejected):
//   HELLO           {"role": "client" | "server"}
//   PERTURBED_DATA  {"records": [{"id", "perturbed_question"}, ...]}
//   PROGRESS        {"phase": str, ...free-form counters and losses}
//   MODEL           {"byte_length": u64, "sha256": hex, "layer_ids": [u32]}
//   ERROR           {"phase": str, "message": str}
//   BYE             {}

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/core/error.hpp"
#include "ppcf/core/records.hpp"

namespace ppcf::fed {

inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxControlBytes = 64u << 20;  // 64 MiB
inline constexpr std::size_t kMaxBlobBytes = 1u << 30;      // 1 GiB

enum class MessageKind { kHello, kPerturbedData, kProgress, kModel, kError, kBye };

std::string MessageKindName(MessageKind kind);
std::optional<MessageKind> ParseMessageKind(const std::string& name);

struct Message {
  MessageKind kind = MessageKind::kBye;
  std::uint32_t version = kProtocolVersion;
  nlohmann::json body = nlohmann::json::object();
  std::vector<std::uint8_t> blob;  // MODEL only

  bool operator==(const Message& other) const {
    return kind == other.kind && version == other.version && body == other.body &&
           blob == other.blob;
  }
};

enum class WireErrorCode {
  kTruncated,
  kOversize,
  kMalformed,
  kUnknownKind,
  kVersion,
  kSchema,
  kChecksum,
};

std::string WireErrorCodeName(WireErrorCode code);

class WireError : public Error {
 public:
  WireError(WireErrorCode code, const std::string& message)
      : Error(ErrorKind::kData, "wire " + WireErrorCodeName(code) + ": " + message), code_(code) {}
  WireErrorCode code() const noexcept { return code_; }

 private:
  WireErrorCode code_;
};

// Builders; they fill in the schema-mandated fields.
Message MakeHello(const std::string& role);
Message MakePerturbedData(const std::vector<PerturbedRecord>& records);
Message MakeProgress(const nlohmann::json& fields);  // must contain "phase"
Message MakeModel(std::vector<std::uint8_t> checkpoint, const std::vector<std::uint32_t>& layer_ids);
Message MakeError(const std::string& phase, const std::string& message);
Message MakeBye();

// Validates the body schema of a message; throws WireError(kSchema).
void ValidateBody(MessageKind kind, const nlohmann::json& body);

std::vector<PerturbedRecord> PerturbedRecordsFromMessage(const Message& msg);

std::vector<std::uint8_t> EncodeMessage(const Message& msg);

// Parses a control payload (without its length prefix). A MODEL message
// comes back with its blob still empty and must be completed with AttachBlob.
Message DecodeControl(std::span<const std::uint8_t> payload,
                      std::optional<std::uint32_t> expected_version = std::nullopt);

// Verifies a MODEL blob against its declared length and digest.
void AttachBlob(Message& msg, std::vector<std::uint8_t> blob);

// Declared blob length of a (decoded) MODEL control message, else 0.
std::size_t DeclaredBlobLength(const Message& msg);

// Reads the u32 big-endian length and enforces the control-frame cap.
std::uint32_t DecodeLengthPrefix(std::span<const std::uint8_t> four_bytes);

// Decodes exactly one complete message occupying all of `bytes`.
Message DecodeMessage(std::span<const std::uint8_t> bytes,
                      std::optional<std::uint32_t> expected_version = std::nullopt);

// Incremental decoding of a byte stream: returns the first complete message
// and how many bytes it used, or nullopt if more bytes are needed.
struct StreamDecodeResult {
  std::optional<Message> message;
  std::size_t consumed = 0;
};
StreamDecodeResult TryDecodeMessage(std::span<const std::uint8_t> bytes,
                                    std::optional<std::uint32_t> expected_version = std::nullopt);

}  // namespace ppcf::fed
