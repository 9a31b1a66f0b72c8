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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ecgmv::eval {

inline constexpr int kNumClasses = 9;

using ClassScores = std::array<double, kNumClasses>;

/// Rows are true classes, columns predicted classes, both indexed by code - 1.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  /// A prediction found among the labels counts on the diagonal; otherwise
  /// the primary label's row is charged.
  void accumulate(int predicted, std::span<const int> labels);

  std::uint64_t at(int true_code, int predicted_code) const;
  std::uint64_t total() const;
  std::uint64_t row_sum(int code) const;
  std::uint64_t col_sum(int code) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// F1 = 2TP / (2TP + FP + FN), 0 when the denominator is 0.
ClassScores f1_per_class(const ConfusionMatrix& cm);

struct EvalReport {
  ClassScores per_class{};
  double macro_f1 = 0;
  double f_af = 0;
  double f_block = 0;
  double f_pc = 0;
  double f_st = 0;
  /// Mean F1 over classes with at least one true record.
  double present_macro_f1 = 0;
};

EvalReport report(const ConfusionMatrix& cm);

/// Code of the largest probability; the lowest code wins ties.
int argmax_class(std::span<const double> probs);

/// One comma-separated line per report in the column order
/// F_AF,F_Block,F_PC,F_ST,F1 preceded by a `name` column.
std::string report_csv_header();
std::string report_csv_row(const std::string& name, const EvalReport& r);

struct SizeStats {
  std::size_t size = 0;
  std::size_t count = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double iqr = 0;
  double max = 0;
};

/// Type-7 quantile of already sorted values, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Per ensemble size statistics of (size, score) pairs, ordered by size.
std::vector<SizeStats> size_stats(std::span<const std::pair<std::size_t, double>> results);

std::string size_stats_csv(std::span<const SizeStats> stats);

}  // namespace ecgmv::eval
