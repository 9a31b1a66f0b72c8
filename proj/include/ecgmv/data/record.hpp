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
#include <string>
#include <string_view>
#include <vector>

#include "ecgmv/autodiff/tensor.hpp"

namespace ecgmv::data {

using ad::Tensor;

inline constexpr int kNumClasses = 9;
inline constexpr std::size_t kLeads = 12;
inline constexpr double kSamplingRateHz = 500.0;

/// Class names indexed by code - 1.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames{"SNR", "AF",  "I-AVB", "LBBB", "RBBB",
                                                                       "PAC", "PVC", "STD",   "STE"};

inline constexpr std::array<std::string_view, kLeads> kLeadNames{"I",  "II", "III", "aVR", "aVL", "aVF",
                                                                 "V1", "V2", "V3",  "V4",  "V5",  "V6"};

/// Name for a code in 1..9; throws ConfigError otherwise.
std::string_view class_name(int code);
/// Code for a class name (case-sensitive); throws ConfigError if unknown.
int class_code(std::string_view name);
bool valid_class_code(int code);

enum class RecordSource { kFile, kSynthetic };

struct EcgRecord {
  std::string id;
  double sampling_rate_hz = kSamplingRateHz;
  Tensor signal;            // [12, N]
  std::vector<int> labels;  // 1..3 codes, first is primary
  RecordSource source = RecordSource::kFile;

  std::size_t length() const { return signal.dim(1); }
  int primary_label() const { return labels.at(0); }

  /// Throws ContractError when any record invariant is broken.
  void validate() const;
};

}  // namespace ecgmv::data
