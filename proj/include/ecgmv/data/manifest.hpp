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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ecgmv::data {

using Manifest = std::map<std::string, std::vector<int>>;

/// Parses `Recording,First_label,Second_label,Third_label` text. Empty label
/// cells are skipped and label order is kept. Errors name the 1-based data row.
Manifest load_manifest(std::string_view csv_text);

std::string write_manifest(const Manifest& manifest);

}  // namespace ecgmv::data
