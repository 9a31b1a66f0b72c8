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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgmv/data/record.hpp"

namespace ecgmv::data {

inline constexpr std::size_t kSegmentSamples = 15000;
inline constexpr double kZScoreEpsilon = 1e-8;

/// Z-scores each lead over the whole record, then cuts consecutive 15000-sample
/// segments; the last one is zero-padded at the tail. Throws
/// RejectedRecordError when the signal contains NaN or infinity.
std::vector<Tensor> preprocess_record(const EcgRecord& rec);

struct Segment {
  std::string record_id;
  std::vector<int> labels;
  Tensor signal;  // [12, 15000]
};

struct SegmentSet {
  std::vector<Segment> segments;
  std::vector<std::string> rejected;
};

/// Preprocesses every record; rejected records are listed, not thrown.
SegmentSet segment_records(std::span<const EcgRecord> records);

struct SegmentBatch {
  Tensor batch;  // [B, 12, 15000]
  std::vector<std::string> record_ids;
  std::vector<std::vector<int>> labels;

  std::vector<int> primary_labels() const;
};

SegmentBatch make_batch(std::span<const Segment> segments, std::span<const std::size_t> indices);

struct DatasetSplit {
  std::vector<EcgRecord> train;
  std::vector<EcgRecord> val;
  std::vector<EcgRecord> test;
  std::vector<std::string> warnings;
};

/// Multi-label records go to test. Single-label records are sorted by id,
/// shuffled with `seed`, and split per primary label; remainders go to train.
DatasetSplit split_dataset(std::vector<EcgRecord> records, std::array<double, 3> ratios, std::uint64_t seed);

// Dataset cache: "ECGDS1", u32 record count, then per record u32 id length,
// id bytes, u8 label count, u8 codes, u32 N, and 12*N float32 samples lead-major.
std::vector<std::uint8_t> encode_dataset(std::span<const EcgRecord> records);
std::vector<EcgRecord> decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, std::span<const EcgRecord> records);
std::vector<EcgRecord> load_dataset(const std::filesystem::path& path);

}  // namespace ecgmv::data
