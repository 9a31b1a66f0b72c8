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

#include "ecgmv/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "ecgmv/errors.hpp"

namespace ecgmv {

double exact_sum(std::span<const double> values) {
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;
  // Add the partials from the largest down, stopping once the low part is exact,
  // and fix up round-half-even cases that the last addition can get wrong.
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

std::vector<double> stable_mean(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw ContractError("mean of an empty set");
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim) throw DimensionError("mean over vectors of different lengths");
  }
  const auto& ref = *std::min_element(rows.begin(), rows.end());
  std::vector<double> out(dim), diffs(rows.size());
  const double k = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) diffs[i] = rows[i][j] - ref[j];
    out[j] = ref[j] + exact_sum(diffs) / k;
  }
  return out;
}

}  // namespace ecgmv
