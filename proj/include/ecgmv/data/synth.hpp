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
#include <random>
#include <vector>

#include "ecgmv/data/record.hpp"

namespace ecgmv::data {

/// Pseudo-ECG at 500 Hz built from Gaussian P/QRS/T bumps with class-specific
/// rhythm and morphology. duration_s must lie in [6, 60].
EcgRecord synth_record(int class_code, double duration_s, std::mt19937_64& rng);

struct SynthOptions {
  std::size_t n_records = 600;
  std::vector<int> classes{1, 2, 5};
  double min_duration_s = 10.0;
  double max_duration_s = 10.0;
  std::uint64_t seed = 0;
};

/// Record i has class classes[i % k], id "S%05d" (1-based), and its own
/// stream derived from (seed, i).
std::vector<EcgRecord> synth_dataset(const SynthOptions& options);

}  // namespace ecgmv::data
