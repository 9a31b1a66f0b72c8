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

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecgmv/augment/augment.hpp"
#include "ecgmv/autodiff/tensor.hpp"
#include "ecgmv/data/record.hpp"
#include "ecgmv/nn/architecture.hpp"
#include "ecgmv/nn/model.hpp"

namespace ecgmv::train {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double eta0 = 1e-3;
  AdamHyper adam;
  std::uint64_t seed = 0;
  double width_multiplier = 1.0;
  augment::AugmentConfig augment;
  /// Global gradient-norm limit; 0 disables clipping.
  double clip_norm = 0.0;
  /// Workers for augmentation and validation inference.
  std::size_t threads = 1;

  void validate() const;
};

/// lr = eta0 / 2 * (1 + cos(pi * step / total_steps)).
double cosine_lr(std::size_t step, std::size_t total_steps, double eta0);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update using each tensor's accumulated gradient
/// (a tensor without a gradient counts as zero). Moments are allocated on the
/// first call.
void adam_step(std::span<ad::Tensor> params, AdamState& state, double lr, const AdamHyper& hyper = {});

/// Scales every gradient so that the global L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
double clip_grad_norm(std::span<ad::Tensor> params, double max_norm);

/// Forward, cross-entropy against 1-based class codes, backward and one Adam
/// update. Returns the batch loss; gradients are cleared afterwards.
double train_step(nn::Model& model, AdamState& state, const ad::Tensor& batch, std::span<const int> codes,
                  double lr, const TrainConfig& cfg, std::mt19937_64& dropout_rng);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;
  double val_f1 = 0;
  double lr = 0;
};

using History = std::vector<EpochStats>;

/// epoch,loss,val_f1,lr
std::string history_csv(const History& history);

struct TrainResult {
  nn::Model model;
  History history;
  std::size_t best_epoch = 0;
  std::vector<std::string> rejected;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains on every segment of `train_set` (primary label as target) and keeps
/// the epoch with the best validation macro F1; without a validation set the
/// final epoch is kept. The returned weights are rounded to single precision.
TrainResult train_model(const nn::ArchitectureSpec& spec, std::span<const data::EcgRecord> train_set,
                        std::span<const data::EcgRecord> val_set, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

}  // namespace ecgmv::train
