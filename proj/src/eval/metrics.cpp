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

#include "ecgmv/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "ecgmv/errors.hpp"

namespace ecgmv::eval {

namespace {

std::size_t index_of(int code) {
  if (code < 1 || code > kNumClasses) throw ContractError("class code out of range 1..9: " + std::to_string(code));
  return static_cast<std::size_t>(code - 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void ConfusionMatrix::accumulate(int predicted, std::span<const int> labels) {
  if (labels.empty() || labels.size() > 3) throw ContractError("a record carries 1 to 3 labels");
  const std::size_t p = index_of(predicted);
  for (int l : labels) index_of(l);
  if (std::find(labels.begin(), labels.end(), predicted) != labels.end()) {
    ++counts[p][p];
  } else {
    ++counts[index_of(labels.front())][p];
  }
}

std::uint64_t ConfusionMatrix::at(int true_code, int predicted_code) const {
  return counts[index_of(true_code)][index_of(predicted_code)];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int code) const {
  std::uint64_t s = 0;
  for (auto c : counts[index_of(code)]) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int code) const {
  const std::size_t j = index_of(code);
  std::uint64_t s = 0;
  for (const auto& row : counts) s += row[j];
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    for (std::size_t j = 0; j < kNumClasses; ++j) counts[i][j] += other.counts[i][j];
  return *this;
}

ClassScores f1_per_class(const ConfusionMatrix& cm) {
  ClassScores f1{};
  for (int c = 1; c <= kNumClasses; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double fp = static_cast<double>(cm.col_sum(c)) - tp;
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double denom = 2 * tp + fp + fn;
    f1[static_cast<std::size_t>(c - 1)] = denom == 0 ? 0.0 : 2 * tp / denom;
  }
  return f1;
}

EvalReport report(const ConfusionMatrix& cm) {
  EvalReport r;
  r.per_class = f1_per_class(cm);
  const auto& f = r.per_class;
  double sum = 0;
  for (double v : f) sum += v;
  r.macro_f1 = sum / kNumClasses;
  r.f_af = f[1];
  r.f_block = (f[2] + f[3] + f[4]) / 3.0;
  r.f_pc = (f[5] + f[6]) / 2.0;
  r.f_st = (f[7] + f[8]) / 2.0;
  double present_sum = 0;
  int present = 0;
  for (int c = 1; c <= kNumClasses; ++c) {
    if (cm.row_sum(c) > 0) {
      present_sum += f[static_cast<std::size_t>(c - 1)];
      ++present;
    }
  }
  r.present_macro_f1 = present == 0 ? 0.0 : present_sum / present;
  return r;
}

int argmax_class(std::span<const double> probs) {
  if (probs.size() != kNumClasses) throw DimensionError("expected 9 class probabilities");
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()) + 1;
}

std::string report_csv_header() { return "name,F_AF,F_Block,F_PC,F_ST,F1"; }

std::string report_csv_row(const std::string& name, const EvalReport& r) {
  return name + "," + fmt(r.f_af) + "," + fmt(r.f_block) + "," + fmt(r.f_pc) + "," + fmt(r.f_st) + "," +
         fmt(r.macro_f1);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SizeStats> size_stats(std::span<const std::pair<std::size_t, double>> results) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto& [size, score] : results) groups[size].push_back(score);
  std::vector<SizeStats> out;
  for (auto& [size, scores] : groups) {
    std::sort(scores.begin(), scores.end());
    SizeStats s;
    s.size = size;
    s.count = scores.size();
    s.median = quantile_sorted(scores, 0.5);
    s.q1 = quantile_sorted(scores, 0.25);
    s.q3 = quantile_sorted(scores, 0.75);
    s.iqr = s.q3 - s.q1;
    s.max = scores.back();
    out.push_back(s);
  }
  return out;
}

std::string size_stats_csv(std::span<const SizeStats> stats) {
  std::string out = "size,count,median,q1,q3,iqr,max\n";
  for (const auto& s : stats) {
    out += std::to_string(s.size) + "," + std::to_string(s.count) + "," + fmt(s.median) + "," + fmt(s.q1) + "," +
           fmt(s.q3) + "," + fmt(s.iqr) + "," + fmt(s.max) + "\n";
  }
  return out;
}

}  // namespace ecgmv::eval
