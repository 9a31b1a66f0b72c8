// Copyright 2026 The ecgmv Authors.
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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgmv/nn/model.hpp"

namespace ecgmv::ensemble {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::string> default_class_map();

struct Checkpoint {
  std::string id;  // caller-chosen name, not serialized
  std::vector<std::string> class_map = default_class_map();
  nn::Model model;
};

/// Container: "ECGMV1", u32 version, u32-length metadata text
/// (arch/width/seed/classes lines), u32 tensor count, then per tensor
/// u32 name length + name, u8 rank, u32 dims, float32 values.
/// Values are written in single precision.
std::vector<std::uint8_t> encode_checkpoint(const nn::Model& model,
                                            const std::vector<std::string>& class_map = default_class_map());
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const nn::Model& model, const std::filesystem::path& path,
                     const std::vector<std::string>& class_map = default_class_map());
/// The checkpoint id is the file stem.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ecgmv::ensemble
