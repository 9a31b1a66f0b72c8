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

#include <functional>
#include <vector>

#include "ecgmv/autodiff/tensor.hpp"

namespace ecgmv::ad {

struct GradCheckOptions {
  double step = 1e-5;
  /// When nonzero, at most this many coordinates per input are probed (chosen
  /// with a fixed stride so the result is deterministic).
  std::size_t max_coords_per_input = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences. Returns max |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
/// over every probed coordinate of every input.
///
/// `f` is evaluated repeatedly and must be deterministic in its inputs.
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                  const GradCheckOptions& options = {});

}  // namespace ecgmv::ad
