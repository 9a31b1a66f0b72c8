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

#include "ecgmv/data/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ecgmv/errors.hpp"

namespace ecgmv::data {

namespace {

using Rng = std::mt19937_64;

enum class BeatKind { kSinus, kPrematureAtrial, kPrematureVentricular };

struct Beat {
  double time;
  BeatKind kind;
};

// Relative QRS amplitude per lead (I, II, III, aVR, aVL, aVF, V1..V6).
constexpr std::array<double, kLeads> kQrsGain{0.6, 1.0, 0.4, -0.8, 0.3, 0.7, -0.6, -0.3, 0.4, 1.1, 1.0, 0.8};
constexpr std::array<double, kLeads> kPGain{0.10, 0.15, 0.06, -0.12, 0.05, 0.10, 0.05, 0.08, 0.08, 0.10, 0.10, 0.08};
constexpr std::array<double, kLeads> kTGain{0.20, 0.30, 0.10, -0.25, 0.10, 0.20, -0.05, 0.25, 0.35, 0.35, 0.30, 0.25};
constexpr std::array<bool, kLeads> kLateral{true, false, false, false, true, false, false, false, false, false, true, true};
constexpr std::array<bool, kLeads> kRightPrecordial{false, false, false, false, false, false, true, true,
                                                    false, false, false, false};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::vector<Beat> beat_schedule(int code, double duration_s, double base_rr, Rng& rng) {
  std::normal_distribution<double> tiny(0.0, 0.005);
  std::vector<Beat> beats;
  double t = uniform(rng, 0.1, 0.5);
  bool after_pvc = false;
  while (t < duration_s + 0.5) {
    BeatKind kind = BeatKind::kSinus;
    double rr = base_rr * (1.0 + tiny(rng));
    if (code == 2) {
      rr = base_rr * uniform(rng, 0.55, 1.45);
    } else if ((code == 6 || code == 7) && !beats.empty() && !after_pvc && uniform(rng, 0, 1) < 0.25) {
      kind = code == 6 ? BeatKind::kPrematureAtrial : BeatKind::kPrematureVentricular;
      t -= rr * 0.38;
    }
    beats.push_back({t, kind});
    after_pvc = kind == BeatKind::kPrematureVentricular;
    t += after_pvc ? rr * 1.38 : rr;
  }
  return beats;
}

void add_bump(std::vector<double>& lead, double center_s, double sigma_s, double amp) {
  if (amp == 0.0) return;
  const double fs = kSamplingRateHz;
  const auto n = static_cast<long>(lead.size());
  const long lo = std::max(0L, static_cast<long>(std::floor((center_s - 5 * sigma_s) * fs)));
  const long hi = std::min(n - 1, static_cast<long>(std::ceil((center_s + 5 * sigma_s) * fs)));
  for (long i = lo; i <= hi; ++i) {
    const double d = (static_cast<double>(i) / fs - center_s) / sigma_s;
    lead[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * d * d);
  }
}

}  // namespace

EcgRecord synth_record(int code, double duration_s, Rng& rng) {
  if (!valid_class_code(code)) throw ContractError("synth_record: class code out of range 1..9");
  if (!(duration_s >= 6.0 && duration_s <= 60.0)) throw ContractError("synth_record: duration must lie in [6, 60] s");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSamplingRateHz));

  const double amplitude = uniform(rng, 0.8, 1.2);
  const double base_rr = uniform(rng, 0.75, 1.1);
  std::array<double, kLeads> jitter_gain{};
  for (auto& g : jitter_gain) g = uniform(rng, 0.85, 1.15);
  const auto beats = beat_schedule(code, duration_s, base_rr, rng);

  const double pr = code == 3 ? 0.32 : 0.16;
  const double qrs_sigma = (code == 4 || code == 5) ? 0.022 : 0.010;
  const double st_amp = code == 8 ? -0.25 : code == 9 ? 0.25 : 0.0;

  std::vector<std::vector<double>> leads(kLeads, std::vector<double>(n, 0.0));
  for (std::size_t l = 0; l < kLeads; ++l) {
    auto& x = leads[l];
    const double g = amplitude * jitter_gain[l];
    for (const auto& b : beats) {
      const double t = b.time;
      const double t_delay = 0.3 * std::sqrt(base_rr);
      if (b.kind == BeatKind::kPrematureVentricular) {
        add_bump(x, t, 0.04, -1.4 * g * kQrsGain[l]);
        add_bump(x, t + t_delay, 0.07, 0.5 * g * kQrsGain[l]);
        continue;
      }
      if (code != 2) {
        const double p_amp = b.kind == BeatKind::kPrematureAtrial ? -0.8 * kPGain[l] : kPGain[l];
        add_bump(x, t - pr, 0.02, g * p_amp);
      }
      add_bump(x, t - 0.025, 0.008, -0.15 * g * kQrsGain[l]);
      add_bump(x, t, qrs_sigma, g * kQrsGain[l]);
      add_bump(x, t + 0.03 + (qrs_sigma - 0.01), 0.01, -0.3 * g * std::abs(kQrsGain[l]));
      if (code == 5) {
        add_bump(x, t + 0.07, 0.015, (kRightPrecordial[l] ? 0.7 : 0.0) * g);
        add_bump(x, t + 0.07, 0.025, (kLateral[l] ? -0.35 : 0.0) * g);
      }
      if (code == 4) {
        add_bump(x, t + 0.04, 0.02, (kLateral[l] ? 0.5 : 0.0) * g);
        add_bump(x, t + 0.03, 0.03, (kRightPrecordial[l] ? -0.8 : 0.0) * g);
      }
      if (st_amp != 0.0) add_bump(x, t + 0.16, 0.05, (l == 3 ? -st_amp : st_amp) * g);
      add_bump(x, t + t_delay, 0.05, g * kTGain[l]);
    }
  }

  // Recording artifacts: white noise, baseline wander, and fibrillatory waves for AF.
  std::normal_distribution<double> noise(0.0, 0.02);
  const double wander_amp = uniform(rng, 0.0, 0.1);
  const double wander_hz = uniform(rng, 0.15, 0.4);
  const double wander_phase = uniform(rng, 0.0, 2 * std::numbers::pi);
  const double f_hz = uniform(rng, 5.0, 7.0);
  Tensor signal({kLeads, n});
  auto d = signal.data();
  for (std::size_t l = 0; l < kLeads; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kSamplingRateHz;
      double v = leads[l][i] + noise(rng) + wander_amp * std::sin(2 * std::numbers::pi * wander_hz * t + wander_phase);
      if (code == 2) v += 0.04 * std::sin(2 * std::numbers::pi * f_hz * t + 0.7 * static_cast<double>(l));
      d[l * n + i] = v;
    }
  }

  EcgRecord rec;
  rec.signal = std::move(signal);
  rec.labels = {code};
  rec.source = RecordSource::kSynthetic;
  return rec;
}

std::vector<EcgRecord> synth_dataset(const SynthOptions& options) {
  if (options.classes.empty()) throw ConfigError("synth: at least one class is required");
  if (!(options.min_duration_s <= options.max_duration_s)) throw ConfigError("synth: min duration exceeds max");
  std::vector<EcgRecord> out;
  out.reserve(options.n_records);
  for (std::size_t i = 0; i < options.n_records; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    Rng rng(seq);
    const int code = options.classes[i % options.classes.size()];
    const double duration = uniform(rng, options.min_duration_s, options.max_duration_s);
    EcgRecord rec = synth_record(code, duration, rng);
    char id[16];
    std::snprintf(id, sizeof id, "S%05zu", i + 1);
    rec.id = id;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ecgmv::data
