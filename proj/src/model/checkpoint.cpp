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

#include "ppcf/model/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>

#include "ppcf/core/error.hpp"
#include "ppcf/core/io.hpp"

namespace ppcf::model {
namespace {

constexpr std::size_t kPreambleSize = 8 + 4 + 8;
constexpr std::uint64_t kMaxHeaderBytes = 64ULL << 20;

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t GetU32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t GetU64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t ShapeElements(const std::vector<std::size_t>& shape) {
  std::uint64_t n = 1;
  for (std::size_t s : shape) {
    if (s != 0 && n > (~std::uint64_t{0}) / s) ThrowData("container: shape overflow");
    n *= s;
  }
  return n;
}

}  // namespace

std::vector<std::uint8_t> EncodeContainer(const TensorContainer& container) {
  nlohmann::json header = container.fields;
  if (!header.is_object()) ThrowData("container: header fields must be an object");
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& nt : container.tensors) {
    if (ShapeElements(nt.tensor.shape) != nt.tensor.size()) {
      ThrowData("container: tensor " + nt.name + " shape does not match data");
    }
    const std::uint64_t nbytes = 4 * static_cast<std::uint64_t>(nt.tensor.size());
    index.push_back({{"name", nt.name},
                     {"dtype", "f32"},
                     {"shape", nt.tensor.shape},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["tensors"] = std::move(index);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleSize + text.size() + offset);
  out.insert(out.end(), kContainerMagic, kContainerMagic + 8);
  PutU32(out, kContainerVersion);
  PutU64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& nt : container.tensors) {
    for (float f : nt.tensor.data) PutU32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

TensorContainer DecodeContainer(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize) ThrowData("container: truncated preamble");
  if (std::memcmp(bytes.data(), kContainerMagic, 8) != 0) ThrowData("container: bad magic");
  const std::uint32_t version = GetU32(bytes.data() + 8);
  if (version != kContainerVersion) {
    ThrowData("container: unsupported version " + std::to_string(version));
  }
  const std::uint64_t header_len = GetU64(bytes.data() + 12);
  if (header_len > kMaxHeaderBytes || header_len > bytes.size() - kPreambleSize) {
    ThrowData("container: header length out of bounds");
  }
  const char* hp = reinterpret_cast<const char*>(bytes.data() + kPreambleSize);
  nlohmann::json header = nlohmann::json::parse(hp, hp + header_len, nullptr, false);
  if (header.is_discarded() || !header.is_object() || !header.contains("tensors") ||
      !header["tensors"].is_array()) {
    ThrowData("container: malformed header");
  }
  const std::uint8_t* payload = bytes.data() + kPreambleSize + header_len;
  const std::uint64_t payload_size = bytes.size() - kPreambleSize - header_len;

  TensorContainer out;
  std::uint64_t expected_offset = 0;
  try {
    for (const auto& entry : header["tensors"]) {
      NamedTensor nt;
      nt.name = entry.at("name").get<std::string>();
      if (entry.at("dtype").get<std::string>() != "f32") {
        ThrowData("container: tensor " + nt.name + " has unsupported dtype");
      }
      nt.tensor.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
      const std::uint64_t count = ShapeElements(nt.tensor.shape);
      if (count > (~std::uint64_t{0}) / 4 || nbytes != 4 * count) {
        ThrowData("container: tensor " + nt.name + " byte size disagrees with shape");
      }
      if (offset != expected_offset || offset > payload_size || nbytes > payload_size - offset) {
        ThrowData("container: tensor " + nt.name + " offset overlapping or out of bounds");
      }
      nt.tensor.data.resize(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        nt.tensor.data[i] = std::bit_cast<float>(GetU32(payload + offset + 4 * i));
      }
      expected_offset = offset + nbytes;
      out.tensors.push_back(std::move(nt));
    }
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string("container: malformed tensor index: ") + e.what());
  }
  if (expected_offset != payload_size) ThrowData("container: payload has trailing bytes");
  header.erase("tensors");
  out.fields = std::move(header);
  return out;
}

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  TensorContainer c;
  c.fields["config"] = ckpt.model.config();
  c.fields["layer_ids"] = ckpt.model.layer_ids();
  c.fields["vocab"] = ckpt.vocab.tokens();
  c.fields["metadata"] = ckpt.metadata;
  VisitTensors(ckpt.model.weights(), [&](const std::string& name, const Tensor<float>& t) {
    c.tensors.push_back({name, t});
  });
  return EncodeContainer(c);
}

Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  TensorContainer c = DecodeContainer(bytes);
  Checkpoint out;
  ModelConfig config;
  std::vector<std::uint32_t> layer_ids;
  try {
    config = c.fields.at("config").get<ModelConfig>();
    layer_ids = c.fields.at("layer_ids").get<std::vector<std::uint32_t>>();
    if (c.fields.contains("vocab")) {
      out.vocab = Vocabulary::FromTokens(c.fields["vocab"].get<std::vector<std::string>>());
    }
    if (c.fields.contains("metadata")) out.metadata = c.fields["metadata"];
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string("checkpoint: malformed header: ") + e.what());
  }
  config.Validate();
  if (layer_ids.size() != config.n_layers || layer_ids.empty()) {
    ThrowData("checkpoint: layer_ids do not match n_layers");
  }
  for (std::size_t i = 1; i < layer_ids.size(); ++i) {
    if (layer_ids[i] <= layer_ids[i - 1]) ThrowData("checkpoint: layer_ids not increasing");
  }
  if (c.fields.contains("vocab") && out.vocab.size() != config.vocab_size) {
    ThrowData("checkpoint: vocabulary size disagrees with config");
  }

  // Build the expected structure, then move tensors in by name.
  const std::size_t d = config.d_model, f = config.d_ff;
  Weights<float> w;
  w.token_embedding.shape = {config.vocab_size, d};
  w.position_embedding.shape = {config.max_seq_len, d};
  for (std::uint32_t id : layer_ids) {
    BlockWeights<float> b;
    b.layer_id = id;
    b.norm1_gain.shape = b.norm1_bias.shape = {d};
    b.qkv_weight.shape = {d, 3 * d};
    b.qkv_bias.shape = {3 * d};
    b.attn_out_weight.shape = {d, d};
    b.attn_out_bias.shape = {d};
    b.norm2_gain.shape = b.norm2_bias.shape = {d};
    b.fc1_weight.shape = {d, f};
    b.fc1_bias.shape = {f};
    b.fc2_weight.shape = {f, d};
    b.fc2_bias.shape = {d};
    w.blocks.push_back(std::move(b));
  }
  w.final_norm_gain.shape = w.final_norm_bias.shape = {d};

  std::map<std::string, Tensor<float>*> slots;
  VisitTensors(w, [&](const std::string& name, Tensor<float>& t) { slots[name] = &t; });
  if (slots.size() != c.tensors.size()) ThrowData("checkpoint: unexpected tensor count");
  for (auto& nt : c.tensors) {
    auto it = slots.find(nt.name);
    if (it == slots.end()) ThrowData("checkpoint: unexpected tensor " + nt.name);
    if (it->second->shape != nt.tensor.shape) ThrowData("checkpoint: shape mismatch for " + nt.name);
    if (!it->second->data.empty()) ThrowData("checkpoint: duplicate tensor " + nt.name);
    it->second->data = std::move(nt.tensor.data);
  }
  out.model = Model(config, std::move(w));
  return out;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = EncodeCheckpoint(checkpoint);
  WriteFileBytes(path, bytes);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return DecodeCheckpoint(bytes);
}

}  // namespace ppcf::model
