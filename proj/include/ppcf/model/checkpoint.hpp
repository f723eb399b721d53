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

// Binary tensor container and model checkpoint.
//
// Layout (all integers little-endian):
//   [0, 8)    magic "PPCFCKPT"
//   [8, 12)   u32 format version (currently 1)
//   [12, 20)  u64 header length H
//   [20, 20+H) UTF-8 JSON header
//   [20+H, ..) payload: packed little-endian IEEE-754 f32 tensor data
//
// The header holds a "tensors" array of {name, dtype:"f32", shape, offset,
// nbytes}; offsets are relative to the payload start, sorted, non-overlapping
// and must exactly tile the payload. Checkpoints add "config", "layer_ids",
// "vocab" and a free-form "metadata" object. Keys are serialized sorted, so
// encoding is a pure function of the contents.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppcf/model/transformer.hpp"
#include "ppcf/model/vocabulary.hpp"

namespace ppcf::model {

inline constexpr char kContainerMagic[8] = {'P', 'P', 'C', 'F', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

struct TensorContainer {
  nlohmann::json fields = nlohmann::json::object();  // everything but "tensors"
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> EncodeContainer(const TensorContainer& container);
TensorContainer DecodeContainer(std::span<const std::uint8_t> bytes);

struct Checkpoint {
  Model model;
  Vocabulary vocab;
  nlohmann::json metadata = nlohmann::json::object();
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace ppcf::model
