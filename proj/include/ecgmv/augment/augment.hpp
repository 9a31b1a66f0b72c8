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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecgmv/autodiff/tensor.hpp"

namespace ecgmv::augment {

using ad::Tensor;
using Rng = std::mt19937_64;

struct Range {
  double lo;
  double hi;
  bool operator==(const Range&) const = default;
};

struct IntRange {
  int lo;
  int hi;
  bool operator==(const IntRange&) const = default;
};

/// Parameter space the per-batch pipeline samples from. Amplitudes are in
/// units of the z-scored signal.
struct AugmentConfig {
  bool enabled = true;
  Range jitter_sigma{0.01, 0.05};
  Range scale{0.8, 1.2};
  int magwarp_knots = 4;
  Range magwarp_sigma{0.05, 0.2};
  int timewarp_knots = 4;
  Range timewarp_sigma{0.05, 0.2};
  IntRange permute_segments{2, 5};
  double resample_min_rate = 0.8;
  bool randomize_order = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

enum class OpKind { kJitter, kScale, kMagnitudeWarp, kTimeWarp, kPermute, kRandomResample };

inline constexpr std::array<OpKind, 6> kCanonicalOrder{OpKind::kJitter,   OpKind::kScale,
                                                       OpKind::kMagnitudeWarp, OpKind::kTimeWarp,
                                                       OpKind::kPermute,  OpKind::kRandomResample};

std::string op_name(OpKind kind);

/// Values sampled once per mini-batch.
struct PipelineParams {
  double jitter_sigma = 0.0;
  Range scale{1.0, 1.0};
  int magwarp_knots = 4;
  double magwarp_sigma = 0.0;
  int timewarp_knots = 4;
  double timewarp_sigma = 0.0;
  int permute_segments = 1;
  double resample_min_rate = 1.0;
};

struct PipelineDraw {
  std::vector<OpKind> ops;
  PipelineParams params;
  std::uint64_t seed = 0;

  bool empty() const { return ops.empty(); }
};

/// Natural cubic spline through (xs[i], ys[i]) with strictly increasing xs.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> xs, std::vector<double> ys);
  double operator()(double x) const;

 private:
  std::vector<double> xs_, ys_, m_;  // m_: second derivatives at the knots
};

// Single-record operations on a [leads, N] signal. Each returns a new tensor.
Tensor jitter(const Tensor& signal, double sigma, Rng& rng);
Tensor scale(const Tensor& signal, Range factor_range, Rng& rng);
Tensor magnitude_warp(const Tensor& signal, int knots, double sigma, Rng& rng);
Tensor time_warp(const Tensor& signal, int knots, double sigma, Rng& rng);
Tensor permute(const Tensor& signal, int n_segments, Rng& rng);
Tensor random_resample(const Tensor& signal, double min_rate, Rng& rng);

/// Multiplier curve m(t), t = 0..n-1, through `knots` Gaussian(1, sigma^2) values.
std::vector<double> magnitude_curve(std::size_t n, int knots, double sigma, Rng& rng);
/// Knot anchors evenly spaced over [0, n-1].
std::vector<double> knot_anchors(std::size_t n, int knots);
/// Monotone time map with tau(0) = 0 and tau(n-1) = n-1.
std::vector<double> time_warp_map(std::size_t n, int knots, double sigma, Rng& rng);
/// Reads each lead at fractional positions by linear interpolation.
Tensor interpolate_at(const Tensor& signal, std::span<const double> positions);
/// Reorders the segments delimited by `cuts` (sorted interior indices) into `order`.
Tensor permute_segments(const Tensor& signal, std::span<const std::size_t> cuts,
                        std::span<const std::size_t> order);
/// Samples the signal at `positions` and re-interpolates back onto the integer grid.
Tensor resample_at(const Tensor& signal, std::span<const double> positions);

PipelineDraw draw_pipeline(const AugmentConfig& cfg, Rng& rng);

/// Applies the drawn operations to one record using the given stream.
Tensor apply_pipeline(const Tensor& signal, const PipelineDraw& draw, Rng& rng);

/// Stream for record `index` of a batch augmented with `draw`.
Rng record_stream(const PipelineDraw& draw, std::size_t index);

/// Augments every record of a [B, leads, N] batch. Results do not depend on
/// `threads`.
Tensor apply_batch(const Tensor& batch, const PipelineDraw& draw, std::size_t threads = 1);

}  // namespace ecgmv::augment
