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

#include "ecgmv/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ecgmv/errors.hpp"

namespace ecgmv::ad {

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                  const GradCheckOptions& options) {
  for (auto& t : inputs) {
    for (double v : t.data()) {
      if (!std::isfinite(v)) throw ContractError("grad_check: inputs must be finite");
    }
    t.set_requires_grad(true);
    t.zero_grad();
  }

  Tape tape;
  {
    TapeScope scope(tape);
    Tensor out = f(inputs);
    if (out.size() != 1) throw ContractError("grad_check: function must return a scalar");
    tape.backward(out);
  }

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.size(), 0.0);
    }
  }
  tape.clear();

  auto evaluate = [&]() { return f(inputs).item(); };

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].data();
    const std::size_t n = data.size();
    std::size_t stride = 1;
    if (options.max_coords_per_input > 0 && n > options.max_coords_per_input) {
      stride = (n + options.max_coords_per_input - 1) / options.max_coords_per_input;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = data[i];
      data[i] = saved + options.step;
      const double up = evaluate();
      data[i] = saved - options.step;
      const double down = evaluate();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace ecgmv::ad
