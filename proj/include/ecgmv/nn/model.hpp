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
#include <optional>
#include <random>
#include <vector>

#include "ecgmv/nn/architecture.hpp"
#include "ecgmv/nn/layers.hpp"

namespace ecgmv::nn {

/// Samples per model input: 30 s at 500 Hz.
inline constexpr std::size_t kSegmentLength = 15000;

struct ModelOptions {
  /// Scales every channel count (and the GRU hidden size); 1.0 gives the
  /// full-width network.
  double width_multiplier = 1.0;
};

/// Channel widths derived from a width multiplier.
struct ModelWidths {
  std::size_t stem;
  std::vector<std::size_t> stages;
  std::size_t gru_hidden;

  static ModelWidths for_multiplier(double multiplier);
};

/// ResNet-style separable-conv backbone with optional BiGRU, attention or
/// average-pool head, and a 9-way softmax classifier.
///
/// Layout: stem conv (k3, s2) + BN + activation, max-pool (k2, s2), four
/// stages of residual blocks (first stage stride 1, later stages stride 2 on
/// entry), optional BiGRU, head, dense + softmax.
class Model {
 public:
  Model(ArchitectureSpec spec, std::uint64_t seed, ModelOptions options = {});

  const ArchitectureSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  const ModelOptions& options() const { return options_; }
  const ModelWidths& widths() const { return widths_; }

  /// Forward pass on batch [B, 12, L] for any L the backbone can downsample.
  /// Returns [B, 9] class probabilities. Train mode updates batch-norm running
  /// statistics and needs `rng` when the BiGRU applies dropout.
  Tensor forward(const Tensor& batch, Mode mode, std::mt19937_64* rng = nullptr) const;

  /// Trainable tensors in a fixed order.
  const std::vector<NamedTensor>& parameters() const { return params_; }
  /// Batch-norm running statistics.
  const std::vector<NamedTensor>& buffers() const { return buffers_; }

  std::size_t parameter_count() const;

  /// Rounds every parameter and buffer to single precision in place.
  void round_to_float();

  /// Deep copy; a plain copy shares parameter storage.
  Model clone() const;
  /// Copies parameter and buffer values from a model with the same layout.
  void copy_state_from(const Model& other);

 private:
  void build(Initializer& init);

  ArchitectureSpec spec_;
  std::uint64_t seed_;
  ModelOptions options_;
  ModelWidths widths_;

  Tensor stem_w_;
  BatchNormLayer stem_bn_;
  std::vector<ResidualBlockParams> blocks_;
  std::optional<BiGruParams> gru_;
  std::optional<AttentionParams> attention_;
  Tensor dense_w_;
  Tensor dense_b_;

  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
};

Model build_model(const ArchitectureSpec& spec, std::uint64_t seed, ModelOptions options = {});

/// Forward on [B, 12, 15000]; any other segment length is a contract error.
Tensor model_forward(const Model& model, const Tensor& batch, Mode mode, std::mt19937_64* rng = nullptr);

}  // namespace ecgmv::nn
