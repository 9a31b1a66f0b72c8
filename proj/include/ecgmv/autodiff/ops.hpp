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

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgmv/autodiff/tensor.hpp"

namespace ecgmv::ad {

enum class Mode { kTrain, kInfer };

enum class Activation { kRelu, kElu, kLeakyRelu, kTanh, kSigmoid };

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kEluAlpha = 1.0;

/// Accepts "relu", "elu", "leaky_relu", "tanh", "sigmoid".
Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation kind);

// Elementwise arithmetic. Operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// alpha * x + beta
Tensor affine(const Tensor& x, double alpha, double beta);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum of x * weights with constant weights; the usual probe for gradient checks.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);

Tensor reshape(const Tensor& x, Shape shape);

/// a[M, K] x b[K, N] -> [M, N]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Applies y = x W^T + b over the last axis; x is [..., in], w is [out, in].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias = nullptr);

/// Cross-correlation. x is [C_in, L] or [B, C_in, L]; w is [C_out, C_in, K].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride,
              std::size_t padding);

/// Per-channel convolution. x is [C, L] or [B, C, L]; w is [C, 1, K].
Tensor depthwise_conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding);

/// Depthwise convolution followed by a 1x1 pointwise convolution.
Tensor separable_conv1d(const Tensor& x, const Tensor& depthwise_w, const Tensor& pointwise_w,
                        std::size_t stride, std::size_t padding);

/// Running statistics; copies share storage with the original.
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;

  static BatchNormState identity(std::size_t channels);
};

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEps = 1e-5;

/// x is [C, L] or [B, C, L]. Train mode normalizes with batch statistics over
/// (B, L) and updates `state` as running = momentum * running + (1 - momentum) * batch.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  Mode mode, double momentum = kBatchNormMomentum, double eps = kBatchNormEps);

Tensor activation(Activation kind, const Tensor& x);
inline Tensor relu(const Tensor& x) { return activation(Activation::kRelu, x); }
inline Tensor sigmoid(const Tensor& x) { return activation(Activation::kSigmoid, x); }
inline Tensor tanh(const Tensor& x) { return activation(Activation::kTanh, x); }

/// Numerically stable softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

/// Mean over the last axis: [C, L] -> [C], [B, C, L] -> [B, C].
Tensor global_avg_pool(const Tensor& x);

/// Max pooling over the last axis without padding.
Tensor max_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride);

/// Averages the last axis into `out_len` adaptive bins (floor/ceil bin edges).
Tensor adaptive_avg_pool1d(const Tensor& x, std::size_t out_len);

/// Swaps the last two axes of a rank-2 or rank-3 tensor.
Tensor transpose_last(const Tensor& x);

/// x[B, L, C] -> x[:, index, :] as [B, C].
Tensor select_step(const Tensor& x, std::size_t index);

/// steps of [B, C] -> [B, L, C].
Tensor stack_steps(const std::vector<Tensor>& steps);

/// Concatenates along the last axis.
Tensor concat_last(const Tensor& a, const Tensor& b);

/// x[B, C, L] * s[B, C] broadcast along L.
Tensor channel_scale(const Tensor& x, const Tensor& s);

/// z[b, c] = sum_i a[b, i, c'] * x[b, i, c] with c' = 0 when a has one column, else c.
Tensor attention_sum(const Tensor& a, const Tensor& x);

/// Inverted dropout; identity in infer mode or when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, Mode mode);

/// Mean over rows of -log(max(probs[i, target_i], 1e-12)). probs is [B, K].
Tensor cross_entropy(const Tensor& probs, std::span<const int> targets);

}  // namespace ecgmv::ad
