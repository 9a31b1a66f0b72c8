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

#include <span>
#include <vector>

namespace ecgmv {

/// Correctly rounded floating-point sum (Shewchuk partials). The result does
/// not depend on the order of `values`.
double exact_sum(std::span<const double> values);

/// Component-wise mean of equally sized vectors, computed as
/// ref + exact_sum(v - ref) / k with ref the lexicographically smallest
/// vector. Identical inputs return that input bit-for-bit and any reordering
/// of `rows` gives the same result.
std::vector<double> stable_mean(std::span<const std::vector<double>> rows);

}  // namespace ecgmv
