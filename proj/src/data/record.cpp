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

#include "ecgmv/data/record.hpp"

#include <algorithm>

#include "ecgmv/errors.hpp"

namespace ecgmv::data {

bool valid_class_code(int code) { return code >= 1 && code <= kNumClasses; }

std::string_view class_name(int code) {
  if (!valid_class_code(code)) throw ConfigError("class code out of range 1..9: " + std::to_string(code));
  return kClassNames[static_cast<std::size_t>(code - 1)];
}

int class_code(std::string_view name) {
  const auto it = std::find(kClassNames.begin(), kClassNames.end(), name);
  if (it == kClassNames.end()) throw ConfigError("unknown class name: " + std::string(name));
  return static_cast<int>(it - kClassNames.begin()) + 1;
}

void EcgRecord::validate() const {
  if (!signal.defined() || signal.rank() != 2 || signal.dim(0) != kLeads) {
    throw ContractError("record " + id + ": signal must be 12 x N");
  }
  if (!(sampling_rate_hz > 0)) throw ContractError("record " + id + ": sampling rate must be positive");
  if (labels.empty() || labels.size() > 3) throw ContractError("record " + id + ": expected 1 to 3 labels");
  for (int c : labels) {
    if (!valid_class_code(c)) throw ContractError("record " + id + ": label code out of range");
  }
}

}  // namespace ecgmv::data
