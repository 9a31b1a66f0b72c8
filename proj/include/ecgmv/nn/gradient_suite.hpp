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
#include <functional>
#include <string>
#include <vector>

namespace ecgmv::nn {

/// One gradient-check target: a primitive, a composite block, or the full model.
struct GradientCase {
  std::string name;
  double tolerance;
  /// Runs the check for one seed and returns the max relative error.
  std::function<double(std::uint64_t seed)> run;
};

struct GradientResult {
  std::string name;
  double tolerance;
  double max_error;  // worst over seeds
  bool passed() const { return max_error < tolerance; }
};

/// Every autodiff primitive (tolerance 1e-4), every composite block (1e-4) and
/// small full models with loss (1e-3).
std::vector<GradientCase> gradient_cases();

/// Runs every case for seeds 0..n_seeds-1.
std::vector<GradientResult> run_gradient_suite(std::size_t n_seeds);

}  // namespace ecgmv::nn
