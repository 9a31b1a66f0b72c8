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

#include "ecgmv/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>

#include "ecgmv/autodiff/ops.hpp"
#include "ecgmv/data/dataset.hpp"
#include "ecgmv/ensemble/ensemble.hpp"
#include "ecgmv/errors.hpp"

namespace ecgmv::train {

namespace {

enum class Stream : std::uint32_t { kShuffle = 1, kAugment = 2, kDropout = 3 };

std::mt19937_64 stream(std::uint64_t seed, Stream which) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(which)};
  return std::mt19937_64(seq);
}

std::vector<ad::Tensor> handles(const nn::Model& model) {
  std::vector<ad::Tensor> out;
  for (const auto& p : model.parameters()) out.push_back(p.tensor);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(eta0 > 0) || !std::isfinite(eta0)) throw ConfigError("eta0 must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam.eps >= 0)) throw ConfigError("adam eps must be non-negative");
  if (!(width_multiplier > 0)) throw ConfigError("width_multiplier must be positive");
  if (!(clip_norm >= 0)) throw ConfigError("clip_norm must be non-negative");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  augment.validate();
}

double cosine_lr(std::size_t step, std::size_t total_steps, double eta0) {
  if (total_steps < 1 || step > total_steps) throw ContractError("cosine_lr needs 0 <= step <= total_steps");
  if (step == total_steps) return 0.0;
  if (2 * step == total_steps) return eta0 / 2;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * eta0 * (1.0 + std::cos(std::numbers::pi * frac));
}

void adam_step(std::span<ad::Tensor> params, AdamState& state, double lr, const AdamHyper& hyper) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state does not match parameter list");
  ++state.t;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw DimensionError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    auto w = p.data();
    const bool has = p.has_grad();
    const auto g = has ? p.grad() : std::span<const double>{};
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = has ? g[j] : 0.0;
      m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * gj;
      v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      if (mhat != 0.0) w[j] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }
}

double clip_grad_norm(std::span<ad::Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= s;
    }
  }
  return norm;
}

double train_step(nn::Model& model, AdamState& state, const ad::Tensor& batch, std::span<const int> codes,
                  double lr, const TrainConfig& cfg, std::mt19937_64& dropout_rng) {
  std::vector<int> targets;
  targets.reserve(codes.size());
  for (int c : codes) {
    if (!data::valid_class_code(c)) throw ContractError("train_step: invalid class code " + std::to_string(c));
    targets.push_back(c - 1);
  }
  auto params = handles(model);
  for (auto& p : params) p.zero_grad();
  ad::Tape tape;
  double loss = 0.0;
  {
    ad::TapeScope scope(tape);
    const auto probs = nn::model_forward(model, batch, nn::Mode::kTrain, &dropout_rng);
    const auto l = ad::cross_entropy(probs, targets);
    loss = l.item();
    if (!std::isfinite(loss)) return loss;
    tape.backward(l);
  }
  tape.clear();
  if (cfg.clip_norm > 0) clip_grad_norm(params, cfg.clip_norm);
  adam_step(params, state, lr, cfg.adam);
  for (auto& p : params) p.zero_grad();
  return loss;
}

std::string history_csv(const History& history) {
  std::string out = "epoch,loss,val_f1,lr\n";
  char buf[128];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%.9g\n", h.epoch, h.loss, h.val_f1, h.lr);
    out += buf;
  }
  return out;
}

TrainResult train_model(const nn::ArchitectureSpec& spec, std::span<const data::EcgRecord> train_set,
                        std::span<const data::EcgRecord> val_set, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ContractError("train_model needs a non-empty training set");
  auto segs = data::segment_records(train_set);
  if (segs.segments.empty()) throw ContractError("every training record was rejected");

  nn::ModelOptions options;
  options.width_multiplier = cfg.width_multiplier;
  TrainResult result{nn::Model(spec, cfg.seed, options), {}, 0, segs.rejected};
  nn::Model& model = result.model;
  std::optional<nn::Model> best;
  double best_f1 = -1.0;

  auto shuffle_rng = stream(cfg.seed, Stream::kShuffle);
  auto augment_rng = stream(cfg.seed, Stream::kAugment);
  auto dropout_rng = stream(cfg.seed, Stream::kDropout);

  const std::size_t n = segs.segments.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = per_epoch * cfg.epochs;
  std::vector<std::size_t> order(n);
  std::vector<std::vector<int>> val_labels;
  for (const auto& r : val_set) val_labels.push_back(r.labels);

  AdamState adam;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      const std::size_t lo = b * cfg.batch_size, hi = std::min(n, lo + cfg.batch_size);
      const auto batch = data::make_batch(segs.segments, std::span(order).subspan(lo, hi - lo));
      const auto draw = augment::draw_pipeline(cfg.augment, augment_rng);
      const auto input = draw.empty() ? batch.batch : augment::apply_batch(batch.batch, draw, cfg.threads);
      lr = cosine_lr(step, total, cfg.eta0);
      const auto codes = batch.primary_labels();
      const double loss = train_step(model, adam, input, codes, lr, cfg, dropout_rng);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(b + 1) + "/" + std::to_string(per_epoch) + " (global step " +
                              std::to_string(step) + "): loss is " + std::to_string(loss));
      }
      loss_sum += loss * static_cast<double>(hi - lo);
    }

    EpochStats stats{epoch, loss_sum / static_cast<double>(n), 0.0, lr};
    if (!val_set.empty()) {
      const auto preds = ensemble::predict_records(model, val_set, cfg.threads);
      stats.val_f1 = eval::report(ensemble::confusion(preds, val_labels)).macro_f1;
      if (stats.val_f1 > best_f1) {
        best_f1 = stats.val_f1;
        best = model.clone();
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  if (best) {
    model.copy_state_from(*best);
  } else {
    result.best_epoch = cfg.epochs;
  }
  model.round_to_float();
  return result;
}

}  // namespace ecgmv::train
