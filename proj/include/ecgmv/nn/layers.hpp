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
#include <string>
#include <vector>

#include "ecgmv/autodiff/ops.hpp"

namespace ecgmv::nn {

using ad::Mode;
using ad::Tensor;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Weight initializer drawing from one seeded stream. Values are rounded to
/// single precision so that a float32 checkpoint reproduces them exactly.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(ad::Shape shape, double bound);
  /// He-uniform: bound = sqrt(6 / fan_in).
  Tensor he_uniform(ad::Shape shape, std::size_t fan_in);

 private:
  std::mt19937_64 rng_;
};

/// GRU parameters for one direction. Input projections are [hidden, input],
/// recurrent ones [hidden, hidden], biases [hidden].
struct GruParams {
  Tensor w_r, w_z, w_h;
  Tensor u_r, u_z, u_h;
  Tensor b_r, b_z, b_h;

  static GruParams zeros(std::size_t input_size, std::size_t hidden_size);
  static GruParams init(Initializer& init, std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const { return w_r.dim(1); }
  std::size_t hidden_size() const { return w_r.dim(0); }
  void validate() const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// One GRU step:
///   r = sigmoid(W_r x + U_r h + b_r)
///   z = sigmoid(W_z x + U_z h + b_z)
///   h~ = tanh(W x + U (r * h) + b_h)
///   h' = z * h + (1 - z) * h~
/// x_t is [input] or [B, input]; h_prev is [hidden] or [B, hidden].
Tensor gru_cell_step(const Tensor& x_t, const Tensor& h_prev, const GruParams& p);

enum class GruAxis { kTime, kLead };

inline constexpr std::size_t kLeadPoolWidth = 256;
inline constexpr double kGruDropout = 0.2;

struct BiGruParams {
  GruParams forward;
  GruParams backward;
  GruAxis axis = GruAxis::kTime;
  std::size_t lead_pool_width = kLeadPoolWidth;
  double dropout_rate = kGruDropout;
};

/// Bidirectional GRU over backbone features [C', L'] or [B, C', L'].
///
/// Time axis runs the sequence over the L' positions with C'-wide steps. Lead
/// axis first averages the temporal axis down to `lead_pool_width` bins, then
/// runs over the C' channels. Output is [L_seq, 2H] (or [B, L_seq, 2H]) with
/// the forward direction in the first H columns.
Tensor bigru_forward(const Tensor& features, const BiGruParams& p, Mode mode, std::mt19937_64* rng);

enum class AttentionMode { kInstance, kElement };

struct AttentionParams {
  Tensor w1;  // [C, C]
  Tensor w2;  // [1, C] instance, [C, C] element
  AttentionMode mode = AttentionMode::kInstance;

  static AttentionParams zeros(std::size_t channels, AttentionMode mode);
  void validate() const;
  std::size_t channels() const { return w1.dim(0); }
};

/// Softmax weights over positions: [B, L, 1] (instance) or [B, L, C] (element).
Tensor attention_weights(const Tensor& x, const AttentionParams& p);

/// Weighted pooling of x [L, C] (or [B, L, C]) into [C] (or [B, C]):
/// u = tanh(W1 X^T), a = softmax_L(W2 u), z = sum_i a_i * x_i.
Tensor attention_pool(const Tensor& x, const AttentionParams& p);

struct SeParams {
  std::size_t reduction = 2;
  Tensor w_down;  // [C / r, C]
  Tensor w_up;    // [C, C / r]

  static SeParams zeros(std::size_t channels, std::size_t reduction);
  void validate() const;
  std::size_t channels() const { return w_down.dim(1); }
};

/// Channel gates s = sigmoid(W_up relu(W_down gap(x))), shaped [C] or [B, C].
Tensor se_scales(const Tensor& x, const SeParams& p);

/// Squeeze-and-excitation: rescales channel c of x by s_c.
Tensor se_block(const Tensor& x, const SeParams& p);

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  ad::BatchNormState state;

  static BatchNormLayer identity(std::size_t channels);
  Tensor forward(const Tensor& x, Mode mode) const;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const;
};

struct SeparableConv {
  Tensor depthwise;  // [C_in, 1, K]
  Tensor pointwise;  // [C_out, C_in, 1]
  std::size_t stride = 1;
  std::size_t padding = 1;

  Tensor forward(const Tensor& x) const;
};

struct ResidualBlockParams {
  SeparableConv conv1;
  BatchNormLayer bn1;
  SeparableConv conv2;
  BatchNormLayer bn2;
  std::optional<Tensor> projection;  // [C_out, C_in, 1], strided
  std::optional<BatchNormLayer> projection_bn;
  std::optional<SeParams> se;
  ad::Activation activation = ad::Activation::kRelu;

  /// Zero convolutions, identity batch norms, optional zero SE.
  static ResidualBlockParams zeros(std::size_t c_in, std::size_t c_out, std::size_t stride,
                                   ad::Activation activation, std::size_t se_reduction = 0);
  static ResidualBlockParams init(Initializer& init, std::size_t c_in, std::size_t c_out, std::size_t stride,
                                  ad::Activation activation, std::size_t se_reduction);

  std::size_t stride() const { return conv1.stride; }
  void collect(const std::string& prefix, std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const;
};

/// act(SE(bn2(conv2(act(bn1(conv1(x)))))) + skip(x)); skip is identity when
/// shapes match, else a strided 1x1 projection followed by batch norm.
Tensor residual_block(const Tensor& x, const ResidualBlockParams& p, Mode mode);

}  // namespace ecgmv::nn
