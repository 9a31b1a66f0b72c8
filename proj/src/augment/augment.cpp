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

#include "ecgmv/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "ecgmv/errors.hpp"

namespace ecgmv::augment {

namespace {

void require_signal(const Tensor& signal) {
  if (signal.rank() != 2) {
    throw DimensionError("augmentation expects a [leads, N] signal, got " + ad::shape_to_string(signal.shape()));
  }
}

void require_range(const Range& r, const char* field) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string(field) + ": range lower bound exceeds upper bound");
}

double uniform(Rng& rng, Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); }

std::vector<double> gaussian_knots(int knots, double sigma, Rng& rng) {
  std::normal_distribution<double> dist(1.0, sigma);
  std::vector<double> ys(static_cast<std::size_t>(knots));
  for (auto& y : ys) y = dist(rng);
  return ys;
}

void check_knots(int knots, double sigma) {
  if (knots < 2) throw ContractError("at least two knots are required");
  if (!(sigma >= 0.0)) throw ContractError("sigma must be non-negative");
}

}  // namespace

void AugmentConfig::validate() const {
  require_range(jitter_sigma, "jitter_sigma");
  require_range(scale, "scale");
  require_range(magwarp_sigma, "magwarp_sigma");
  require_range(timewarp_sigma, "timewarp_sigma");
  if (jitter_sigma.lo < 0) throw ConfigError("jitter_sigma: must be non-negative");
  if (scale.lo <= 0) throw ConfigError("scale: factors must be positive");
  if (magwarp_sigma.lo < 0) throw ConfigError("magwarp_sigma: must be non-negative");
  if (timewarp_sigma.lo < 0) throw ConfigError("timewarp_sigma: must be non-negative");
  if (magwarp_knots < 2) throw ConfigError("magwarp_knots: must be at least 2");
  if (timewarp_knots < 2) throw ConfigError("timewarp_knots: must be at least 2");
  if (permute_segments.lo < 1 || permute_segments.lo > permute_segments.hi) {
    throw ConfigError("permute_segments: expected 1 <= lo <= hi");
  }
  if (!(resample_min_rate > 0.0 && resample_min_rate <= 1.0)) {
    throw ConfigError("resample_min_rate: must lie in (0, 1]");
  }
}

std::string op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kJitter: return "jitter";
    case OpKind::kScale: return "scale";
    case OpKind::kMagnitudeWarp: return "magnitude_warp";
    case OpKind::kTimeWarp: return "time_warp";
    case OpKind::kPermute: return "permute";
    case OpKind::kRandomResample: return "random_resample";
  }
  return "unknown";
}

CubicSpline::CubicSpline(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
  const std::size_t n = xs_.size();
  if (n < 2 || ys_.size() != n) throw ContractError("cubic spline needs at least two matching knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw ContractError("cubic spline knots must be strictly increasing");
  }
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Thomas algorithm on the interior second derivatives (natural ends: m0 = mn = 0).
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = xs_[i] - xs_[i - 1], h1 = xs_[i + 1] - xs_[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((ys_[i + 1] - ys_[i]) / h1 - (ys_[i] - ys_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = xs_[i + 1] - xs_[i];
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = k; i-- > 0;) {
    const double next = i + 1 < k ? m_[i + 2] : 0.0;
    m_[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
  }
}

double CubicSpline::operator()(double x) const {
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t i = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
  i = std::min(i, xs_.size() - 2);
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h, b = (x - xs_[i]) / h;
  return a * ys_[i] + b * ys_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

std::vector<double> knot_anchors(std::size_t n, int knots) {
  std::vector<double> xs(static_cast<std::size_t>(knots));
  const double span = static_cast<double>(n - 1);
  for (int i = 0; i < knots; ++i) xs[static_cast<std::size_t>(i)] = span * i / (knots - 1);
  xs.back() = span;
  return xs;
}

std::vector<double> magnitude_curve(std::size_t n, int knots, double sigma, Rng& rng) {
  check_knots(knots, sigma);
  if (sigma == 0.0 || n < 2) return std::vector<double>(n, 1.0);
  CubicSpline spline(knot_anchors(n, knots), gaussian_knots(knots, sigma, rng));
  std::vector<double> m(n);
  for (std::size_t t = 0; t < n; ++t) m[t] = spline(static_cast<double>(t));
  return m;
}

std::vector<double> time_warp_map(std::size_t n, int knots, double sigma, Rng& rng) {
  check_knots(knots, sigma);
  std::vector<double> tau(n);
  std::iota(tau.begin(), tau.end(), 0.0);
  if (sigma == 0.0 || n < 2) return tau;
  CubicSpline spline(knot_anchors(n, knots), gaussian_knots(knots, sigma, rng));
  std::vector<double> speed(n);
  for (std::size_t t = 0; t < n; ++t) speed[t] = std::max(0.1, spline(static_cast<double>(t)));
  tau[0] = 0.0;
  for (std::size_t t = 1; t < n; ++t) tau[t] = tau[t - 1] + 0.5 * (speed[t - 1] + speed[t]);
  const double rescale = static_cast<double>(n - 1) / tau[n - 1];
  for (auto& v : tau) v *= rescale;
  tau[n - 1] = static_cast<double>(n - 1);
  return tau;
}

Tensor interpolate_at(const Tensor& signal, std::span<const double> positions) {
  require_signal(signal);
  const std::size_t leads = signal.dim(0), n = signal.dim(1);
  Tensor out({leads, positions.size()});
  const auto x = signal.data();
  auto y = out.data();
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const double p = std::clamp(positions[j], 0.0, static_cast<double>(n - 1));
    std::size_t i = static_cast<std::size_t>(p);
    if (n == 1) {
      for (std::size_t l = 0; l < leads; ++l) y[l * positions.size() + j] = x[l];
      continue;
    }
    i = std::min(i, n - 2);
    const double f = p - static_cast<double>(i);
    for (std::size_t l = 0; l < leads; ++l) {
      const double* row = &x[l * n];
      y[l * positions.size() + j] = row[i] * (1.0 - f) + row[i + 1] * f;
    }
  }
  return out;
}

Tensor jitter(const Tensor& signal, double sigma, Rng& rng) {
  require_signal(signal);
  if (!(sigma >= 0.0)) throw ContractError("jitter sigma must be non-negative");
  Tensor out = signal.detach();
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.data()) v += noise(rng);
  return out;
}

Tensor scale(const Tensor& signal, Range factor_range, Rng& rng) {
  require_signal(signal);
  if (!(factor_range.lo > 0.0 && factor_range.lo <= factor_range.hi)) {
    throw ContractError("scale factors must form a positive range");
  }
  Tensor out = signal.detach();
  const std::size_t n = signal.dim(1);
  auto y = out.data();
  for (std::size_t l = 0; l < signal.dim(0); ++l) {
    const double factor = uniform(rng, factor_range);
    for (std::size_t t = 0; t < n; ++t) y[l * n + t] *= factor;
  }
  return out;
}

Tensor magnitude_warp(const Tensor& signal, int knots, double sigma, Rng& rng) {
  require_signal(signal);
  check_knots(knots, sigma);
  Tensor out = signal.detach();
  if (sigma == 0.0) return out;
  const std::size_t n = signal.dim(1);
  auto y = out.data();
  for (std::size_t l = 0; l < signal.dim(0); ++l) {
    const auto m = magnitude_curve(n, knots, sigma, rng);
    for (std::size_t t = 0; t < n; ++t) y[l * n + t] *= m[t];
  }
  return out;
}

Tensor time_warp(const Tensor& signal, int knots, double sigma, Rng& rng) {
  require_signal(signal);
  check_knots(knots, sigma);
  if (sigma == 0.0) return signal.detach();
  const auto tau = time_warp_map(signal.dim(1), knots, sigma, rng);
  return interpolate_at(signal, tau);
}

Tensor permute_segments(const Tensor& signal, std::span<const std::size_t> cuts, std::span<const std::size_t> order) {
  require_signal(signal);
  const std::size_t leads = signal.dim(0), n = signal.dim(1);
  if (order.size() != cuts.size() + 1) throw ContractError("segment order must have one entry per segment");
  std::vector<std::size_t> bounds{0};
  for (auto c : cuts) {
    if (c <= bounds.back() || c >= n) throw ContractError("cut points must be increasing interior indices");
    bounds.push_back(c);
  }
  bounds.push_back(n);
  std::vector<bool> seen(order.size(), false);
  for (auto o : order) {
    if (o >= order.size() || seen[o]) throw ContractError("segment order is not a permutation");
    seen[o] = true;
  }
  Tensor out({leads, n});
  const auto x = signal.data();
  auto y = out.data();
  for (std::size_t l = 0; l < leads; ++l) {
    std::size_t dst = l * n;
    for (auto seg : order) {
      for (std::size_t t = bounds[seg]; t < bounds[seg + 1]; ++t) y[dst++] = x[l * n + t];
    }
  }
  return out;
}

Tensor permute(const Tensor& signal, int n_segments, Rng& rng) {
  require_signal(signal);
  const std::size_t n = signal.dim(1);
  if (n_segments < 1 || static_cast<std::size_t>(n_segments) > n) {
    throw ContractError("permute needs 1 <= n_segments <= N");
  }
  if (n_segments == 1) return signal.detach();
  std::vector<std::size_t> interior(n - 1);
  std::iota(interior.begin(), interior.end(), std::size_t{1});
  std::vector<std::size_t> cuts;
  std::sample(interior.begin(), interior.end(), std::back_inserter(cuts), n_segments - 1, rng);
  std::vector<std::size_t> order(static_cast<std::size_t>(n_segments));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return permute_segments(signal, cuts, order);
}

Tensor resample_at(const Tensor& signal, std::span<const double> positions) {
  require_signal(signal);
  const std::size_t leads = signal.dim(0), n = signal.dim(1);
  const std::size_t m = positions.size();
  if (m < 2) throw ContractError("resampling needs at least two positions");
  for (std::size_t j = 1; j < m; ++j) {
    if (positions[j] < positions[j - 1]) throw ContractError("resample positions must be sorted");
  }
  const Tensor sampled = interpolate_at(signal, positions);
  const auto v = sampled.data();
  Tensor out({leads, n});
  auto y = out.data();
  std::size_t j = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    while (j + 2 < m && positions[j + 1] <= tt) ++j;
    const double p0 = positions[j], p1 = positions[j + 1];
    const double f = p1 > p0 ? std::clamp((tt - p0) / (p1 - p0), 0.0, 1.0) : 0.0;
    for (std::size_t l = 0; l < leads; ++l) y[l * n + t] = v[l * m + j] * (1.0 - f) + v[l * m + j + 1] * f;
  }
  return out;
}

Tensor random_resample(const Tensor& signal, double min_rate, Rng& rng) {
  require_signal(signal);
  if (!(min_rate > 0.0 && min_rate <= 1.0)) throw ContractError("min_rate must lie in (0, 1]");
  const std::size_t n = signal.dim(1);
  if (n < 2) return signal.detach();
  const double rate = uniform(rng, {min_rate, 1.0});
  const auto m = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n))));
  std::uniform_real_distribution<double> pos(0.0, static_cast<double>(n - 1));
  std::vector<double> positions(m);
  for (auto& p : positions) p = pos(rng);
  std::sort(positions.begin(), positions.end());
  positions.front() = 0.0;
  positions.back() = static_cast<double>(n - 1);
  return resample_at(signal, positions);
}

PipelineDraw draw_pipeline(const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  PipelineDraw draw;
  const int k = std::uniform_int_distribution<int>(0, 6)(rng);
  std::array<std::size_t, 6> idx{0, 1, 2, 3, 4, 5};
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> chosen(idx.begin(), idx.begin() + k);
  if (!cfg.randomize_order) std::sort(chosen.begin(), chosen.end());
  for (auto i : chosen) draw.ops.push_back(kCanonicalOrder[i]);

  auto& p = draw.params;
  p.jitter_sigma = uniform(rng, cfg.jitter_sigma);
  p.scale = cfg.scale;
  p.magwarp_knots = cfg.magwarp_knots;
  p.magwarp_sigma = uniform(rng, cfg.magwarp_sigma);
  p.timewarp_knots = cfg.timewarp_knots;
  p.timewarp_sigma = uniform(rng, cfg.timewarp_sigma);
  p.permute_segments = std::uniform_int_distribution<int>(cfg.permute_segments.lo, cfg.permute_segments.hi)(rng);
  p.resample_min_rate = cfg.resample_min_rate;
  draw.seed = rng();
  if (!cfg.enabled) draw.ops.clear();
  return draw;
}

Tensor apply_pipeline(const Tensor& signal, const PipelineDraw& draw, Rng& rng) {
  require_signal(signal);
  Tensor x = signal.detach();
  const auto& p = draw.params;
  for (auto op : draw.ops) {
    switch (op) {
      case OpKind::kJitter: x = jitter(x, p.jitter_sigma, rng); break;
      case OpKind::kScale: x = scale(x, p.scale, rng); break;
      case OpKind::kMagnitudeWarp: x = magnitude_warp(x, p.magwarp_knots, p.magwarp_sigma, rng); break;
      case OpKind::kTimeWarp: x = time_warp(x, p.timewarp_knots, p.timewarp_sigma, rng); break;
      case OpKind::kPermute:
        x = permute(x, std::min<int>(p.permute_segments, static_cast<int>(x.dim(1))), rng);
        break;
      case OpKind::kRandomResample: x = random_resample(x, p.resample_min_rate, rng); break;
    }
  }
  return x;
}

Rng record_stream(const PipelineDraw& draw, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(draw.seed), static_cast<std::uint32_t>(draw.seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return Rng(seq);
}

Tensor apply_batch(const Tensor& batch, const PipelineDraw& draw, std::size_t threads) {
  if (batch.rank() != 3) {
    throw DimensionError("apply_batch expects [B, leads, N], got " + ad::shape_to_string(batch.shape()));
  }
  Tensor out = batch.detach();
  if (draw.empty()) return out;
  const std::size_t b = batch.dim(0), per = batch.dim(1) * batch.dim(2);
  const auto src = batch.data();
  auto dst = out.data();
  auto work = [&](std::size_t r) {
    Tensor rec({batch.dim(1), batch.dim(2)}, std::vector<double>(src.begin() + r * per, src.begin() + (r + 1) * per));
    Rng rng = record_stream(draw, r);
    const Tensor aug = apply_pipeline(rec, draw, rng);
    std::copy(aug.data().begin(), aug.data().end(), dst.begin() + r * per);
  };
  threads = std::clamp<std::size_t>(threads, 1, b);
  if (threads == 1) {
    for (std::size_t r = 0; r < b; ++r) work(r);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < b; r += threads) work(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace ecgmv::augment
