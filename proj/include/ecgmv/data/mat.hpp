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

#include "ecgmv/data/record.hpp"

namespace ecgmv::data {

// Level-5 MAT element types and array classes used by the reader.
inline constexpr std::uint32_t kMiInt8 = 1;
inline constexpr std::uint32_t kMiUint8 = 2;
inline constexpr std::uint32_t kMiInt16 = 3;
inline constexpr std::uint32_t kMiUint16 = 4;
inline constexpr std::uint32_t kMiInt32 = 5;
inline constexpr std::uint32_t kMiUint32 = 6;
inline constexpr std::uint32_t kMiSingle = 7;
inline constexpr std::uint32_t kMiDouble = 9;
inline constexpr std::uint32_t kMiInt64 = 12;
inline constexpr std::uint32_t kMiUint64 = 13;
inline constexpr std::uint32_t kMiMatrix = 14;
inline constexpr std::uint32_t kMiCompressed = 15;

inline constexpr std::uint8_t kMxStructClass = 2;
inline constexpr std::uint8_t kMxDoubleClass = 6;
inline constexpr std::uint8_t kMxInt16Class = 10;

/// Parses the first 12-lead numeric variable of a MAT file image. Accepts a
/// bare 12xN (or Nx12) matrix or a struct whose `data` field holds one.
/// The returned record has no id and no labels.
EcgRecord parse_mat_record(std::span<const std::uint8_t> bytes);

/// Reads `path` and parses it; the record id is the file stem.
EcgRecord load_mat_record(const std::filesystem::path& path);

}  // namespace ecgmv::data
