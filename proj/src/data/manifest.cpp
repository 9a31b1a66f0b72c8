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

#include "ecgmv/data/manifest.hpp"

#include <charconv>
#include <sstream>

#include "ecgmv/data/record.hpp"
#include "ecgmv/errors.hpp"

namespace ecgmv::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Manifest load_manifest(std::string_view csv_text) {
  Manifest out;
  std::size_t row = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= csv_text.size()) {
    const auto nl = csv_text.find('\n', pos);
    const auto line = trim(csv_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? csv_text.size() + 1 : nl + 1;
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    if (!header_seen) {
      if (cells.front() != "Recording") throw ParseError("manifest: missing header row starting with 'Recording'");
      header_seen = true;
      continue;
    }
    ++row;
    const std::string where = "manifest row " + std::to_string(row);
    const std::string id(cells.front());
    if (id.empty()) throw ParseError(where + ": empty recording id");
    if (cells.size() > 4) throw ParseError(where + ": too many columns");
    std::vector<int> labels;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) continue;
      int code = 0;
      const auto* end = cells[c].data() + cells[c].size();
      const auto res = std::from_chars(cells[c].data(), end, code);
      if (res.ec != std::errc() || res.ptr != end) {
        throw ParseError(where + ": label '" + std::string(cells[c]) + "' is not an integer");
      }
      if (!valid_class_code(code)) throw ParseError(where + ": label code " + std::to_string(code) + " outside 1..9");
      labels.push_back(code);
    }
    if (labels.empty()) throw ParseError(where + ": record " + id + " has no labels");
    if (!out.emplace(id, std::move(labels)).second) throw ParseError(where + ": duplicate recording " + id);
  }
  if (!header_seen) throw ParseError("manifest: missing header row starting with 'Recording'");
  return out;
}

std::string write_manifest(const Manifest& manifest) {
  std::ostringstream os;
  os << "Recording,First_label,Second_label,Third_label\n";
  for (const auto& [id, labels] : manifest) {
    os << id;
    for (std::size_t i = 0; i < 3; ++i) {
      os << ',';
      if (i < labels.size()) os << labels[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ecgmv::data
