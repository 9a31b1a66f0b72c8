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

#include "ecgmv/nn/layers.hpp"

#include <cmath>

#include "ecgmv/errors.hpp"

namespace ecgmv::nn {

namespace {

void require_shape(const Tensor& t, const ad::Shape& shape, const std::string& what) {
  if (!t.defined() || t.shape() != shape) {
    throw ConfigError(what + " must have shape " + ad::shape_to_string(shape) +
                      (t.defined() ? ", got " + ad::shape_to_string(t.shape()) : ", got undefined"));
  }
}

Tensor recurrent_update(const Tensor& xr, const Tensor& xz, const Tensor& xh, const Tensor& h, const GruParams& p) {
  Tensor r = ad::sigmoid(ad::add(xr, ad::linear(h, p.u_r)));
  Tensor z = ad::sigmoid(ad::add(xz, ad::linear(h, p.u_z)));
  Tensor candidate = ad::tanh(ad::add(xh, ad::linear(ad::mul(r, h), p.u_h)));
  return ad::add(ad::mul(z, h), ad::mul(ad::affine(z, -1.0, 1.0), candidate));
}

std::vector<Tensor> run_direction(const Tensor& seq, const GruParams& p, bool reverse) {
  const std::size_t batch = seq.dim(0), len = seq.dim(1), hidden = p.hidden_size();
  Tensor xr = ad::linear(seq, p.w_r, &p.b_r);
  Tensor xz = ad::linear(seq, p.w_z, &p.b_z);
  Tensor xh = ad::linear(seq, p.w_h, &p.b_h);
  std::vector<Tensor> outputs(len);
  Tensor h({batch, hidden}, 0.0);
  for (std::size_t step = 0; step < len; ++step) {
    const std::size_t t = reverse ? len - 1 - step : step;
    h = recurrent_update(ad::select_step(xr, t), ad::select_step(xz, t), ad::select_step(xh, t), h, p);
    outputs[t] = h;
  }
  return outputs;
}

}  // namespace

Tensor Initializer::uniform(ad::Shape shape, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(dist(rng_)));
  t.set_requires_grad(true);
  return t;
}

Tensor Initializer::he_uniform(ad::Shape shape, std::size_t fan_in) {
  return uniform(std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in)));
}

GruParams GruParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  GruParams p;
  p.w_r = Tensor({hidden_size, input_size});
  p.w_z = Tensor({hidden_size, input_size});
  p.w_h = Tensor({hidden_size, input_size});
  p.u_r = Tensor({hidden_size, hidden_size});
  p.u_z = Tensor({hidden_size, hidden_size});
  p.u_h = Tensor({hidden_size, hidden_size});
  p.b_r = Tensor({hidden_size});
  p.b_z = Tensor({hidden_size});
  p.b_h = Tensor({hidden_size});
  return p;
}

GruParams GruParams::init(Initializer& init, std::size_t input_size, std::size_t hidden_size) {
  GruParams p;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_size));
  const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  p.w_r = init.uniform({hidden_size, input_size}, in_bound);
  p.w_z = init.uniform({hidden_size, input_size}, in_bound);
  p.w_h = init.uniform({hidden_size, input_size}, in_bound);
  p.u_r = init.uniform({hidden_size, hidden_size}, hid_bound);
  p.u_z = init.uniform({hidden_size, hidden_size}, hid_bound);
  p.u_h = init.uniform({hidden_size, hidden_size}, hid_bound);
  p.b_r = Tensor({hidden_size}, 0.0, true);
  p.b_z = Tensor({hidden_size}, 0.0, true);
  p.b_h = Tensor({hidden_size}, 0.0, true);
  return p;
}

void GruParams::validate() const {
  if (!w_r.defined() || w_r.rank() != 2) throw ConfigError("GRU W_r must be [hidden, input]");
  const std::size_t h = w_r.dim(0), in = w_r.dim(1);
  require_shape(w_z, {h, in}, "GRU W_z");
  require_shape(w_h, {h, in}, "GRU W");
  require_shape(u_r, {h, h}, "GRU U_r");
  require_shape(u_z, {h, h}, "GRU U_z");
  require_shape(u_h, {h, h}, "GRU U");
  require_shape(b_r, {h}, "GRU b_r");
  require_shape(b_z, {h}, "GRU b_z");
  require_shape(b_h, {h}, "GRU b_h");
}

void GruParams::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".w_r", w_r});
  out.push_back({prefix + ".w_z", w_z});
  out.push_back({prefix + ".w_h", w_h});
  out.push_back({prefix + ".u_r", u_r});
  out.push_back({prefix + ".u_z", u_z});
  out.push_back({prefix + ".u_h", u_h});
  out.push_back({prefix + ".b_r", b_r});
  out.push_back({prefix + ".b_z", b_z});
  out.push_back({prefix + ".b_h", b_h});
}

Tensor gru_cell_step(const Tensor& x_t, const Tensor& h_prev, const GruParams& p) {
  p.validate();
  if (x_t.shape().back() != p.input_size()) {
    throw DimensionError("gru_cell_step: input width " + std::to_string(x_t.shape().back()) + " != " +
                         std::to_string(p.input_size()));
  }
  if (h_prev.shape().back() != p.hidden_size()) {
    throw DimensionError("gru_cell_step: hidden width " + std::to_string(h_prev.shape().back()) + " != " +
                         std::to_string(p.hidden_size()));
  }
  if (x_t.rank() != h_prev.rank() || (x_t.rank() == 2 && x_t.dim(0) != h_prev.dim(0))) {
    throw DimensionError("gru_cell_step: batch axis of x_t and h_prev differ");
  }
  return recurrent_update(ad::linear(x_t, p.w_r, &p.b_r), ad::linear(x_t, p.w_z, &p.b_z),
                          ad::linear(x_t, p.w_h, &p.b_h), h_prev, p);
}

Tensor bigru_forward(const Tensor& features, const BiGruParams& p, Mode mode, std::mt19937_64* rng) {
  if (features.rank() != 2 && features.rank() != 3) {
    throw DimensionError("bigru_forward: features must be [C, L] or [B, C, L]");
  }
  const bool squeezed = features.rank() == 2;
  Tensor f = squeezed ? ad::reshape(features, {1, features.dim(0), features.dim(1)}) : features;

  Tensor seq;
  switch (p.axis) {
    case GruAxis::kTime: seq = ad::transpose_last(f); break;
    case GruAxis::kLead: seq = ad::adaptive_avg_pool1d(f, p.lead_pool_width); break;
    default: throw ConfigError("bigru_forward: unknown unfolding axis");
  }
  p.forward.validate();
  p.backward.validate();
  if (p.forward.input_size() != seq.dim(2) || p.backward.input_size() != seq.dim(2)) {
    throw DimensionError("bigru_forward: step width " + std::to_string(seq.dim(2)) + " does not match GRU input " +
                         std::to_string(p.forward.input_size()));
  }
  if (mode == Mode::kTrain && p.dropout_rate > 0.0) {
    if (rng == nullptr) throw ContractError("bigru_forward: train-mode dropout needs an rng");
    seq = ad::dropout(seq, p.dropout_rate, *rng, mode);
  }

  Tensor fwd = ad::stack_steps(run_direction(seq, p.forward, false));
  Tensor bwd = ad::stack_steps(run_direction(seq, p.backward, true));
  Tensor out = ad::concat_last(fwd, bwd);
  if (squeezed) out = ad::reshape(out, {out.dim(1), out.dim(2)});
  return out;
}

AttentionParams AttentionParams::zeros(std::size_t channels, AttentionMode mode) {
  AttentionParams p;
  p.mode = mode;
  p.w1 = Tensor({channels, channels});
  p.w2 = Tensor({mode == AttentionMode::kInstance ? std::size_t{1} : channels, channels});
  return p;
}

void AttentionParams::validate() const {
  if (!w1.defined() || w1.rank() != 2 || w1.dim(0) != w1.dim(1)) throw ConfigError("attention W1 must be [C, C]");
  const std::size_t c = w1.dim(0);
  const std::size_t rows = mode == AttentionMode::kInstance ? 1 : c;
  if (!w2.defined() || w2.shape() != ad::Shape{rows, c}) {
    throw ConfigError(std::string("attention W2 must be [") + std::to_string(rows) + ", " + std::to_string(c) +
                      "] for " + (mode == AttentionMode::kInstance ? "instance" : "element") + " mode");
  }
}

Tensor attention_weights(const Tensor& x, const AttentionParams& p) {
  p.validate();
  if (x.rank() != 3) throw DimensionError("attention_weights: expected [B, L, C]");
  if (x.dim(2) != p.channels()) {
    throw ConfigError("attention: input has " + std::to_string(x.dim(2)) + " channels, parameters expect " +
                      std::to_string(p.channels()));
  }
  Tensor u = ad::tanh(ad::linear(x, p.w1));  // [B, L, C], row i = tanh(W1 x_i)
  Tensor logits = ad::linear(u, p.w2);        // [B, L, 1] or [B, L, C]
  return ad::softmax(logits, 1);
}

Tensor attention_pool(const Tensor& x, const AttentionParams& p) {
  if (x.rank() == 2) {
    Tensor z = attention_pool(ad::reshape(x, {1, x.dim(0), x.dim(1)}), p);
    return ad::reshape(z, {z.dim(1)});
  }
  Tensor a = attention_weights(x, p);
  return ad::attention_sum(a, x);
}

SeParams SeParams::zeros(std::size_t channels, std::size_t reduction) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("SE reduction ratio " + std::to_string(reduction) + " does not divide " +
                      std::to_string(channels) + " channels");
  }
  SeParams p;
  p.reduction = reduction;
  p.w_down = Tensor({channels / reduction, channels});
  p.w_up = Tensor({channels, channels / reduction});
  return p;
}

void SeParams::validate() const {
  if (!w_down.defined() || w_down.rank() != 2) throw ConfigError("SE W_down must be [C/r, C]");
  const std::size_t c = w_down.dim(1);
  if (reduction == 0 || c % reduction != 0) {
    throw ConfigError("SE reduction ratio " + std::to_string(reduction) + " does not divide " + std::to_string(c) +
                      " channels");
  }
  require_shape(w_down, {c / reduction, c}, "SE W_down");
  require_shape(w_up, {c, c / reduction}, "SE W_up");
}

Tensor se_scales(const Tensor& x, const SeParams& p) {
  p.validate();
  const std::size_t c = x.rank() == 3 ? x.dim(1) : x.dim(0);
  if (c != p.channels()) {
    throw ConfigError("SE block expects " + std::to_string(p.channels()) + " channels, got " + std::to_string(c));
  }
  Tensor squeezed = ad::global_avg_pool(x);
  Tensor hidden = ad::relu(ad::linear(squeezed, p.w_down));
  return ad::sigmoid(ad::linear(hidden, p.w_up));
}

Tensor se_block(const Tensor& x, const SeParams& p) { return ad::channel_scale(x, se_scales(x, p)); }

BatchNormLayer BatchNormLayer::identity(std::size_t channels) {
  return BatchNormLayer{Tensor({channels}, 1.0, true), Tensor({channels}, 0.0, true),
                        ad::BatchNormState::identity(channels)};
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode) const {
  ad::BatchNormState s = state;
  return ad::batch_norm(x, gamma, beta, s, mode);
}

void BatchNormLayer::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                             std::vector<NamedTensor>& buffers) const {
  params.push_back({prefix + ".gamma", gamma});
  params.push_back({prefix + ".beta", beta});
  buffers.push_back({prefix + ".running_mean", state.running_mean});
  buffers.push_back({prefix + ".running_var", state.running_var});
}

Tensor SeparableConv::forward(const Tensor& x) const {
  return ad::separable_conv1d(x, depthwise, pointwise, stride, padding);
}

ResidualBlockParams ResidualBlockParams::zeros(std::size_t c_in, std::size_t c_out, std::size_t stride,
                                               ad::Activation activation, std::size_t se_reduction) {
  if (stride != 1 && stride != 2) throw ConfigError("residual block stride must be 1 or 2");
  ResidualBlockParams p;
  p.activation = activation;
  p.conv1 = SeparableConv{Tensor({c_in, 1, 3}), Tensor({c_out, c_in, 1}), stride, 1};
  p.bn1 = BatchNormLayer::identity(c_out);
  p.conv2 = SeparableConv{Tensor({c_out, 1, 3}), Tensor({c_out, c_out, 1}), 1, 1};
  p.bn2 = BatchNormLayer::identity(c_out);
  if (stride != 1 || c_in != c_out) {
    p.projection = Tensor({c_out, c_in, 1});
    p.projection_bn = BatchNormLayer::identity(c_out);
  }
  if (se_reduction > 0) p.se = SeParams::zeros(c_out, se_reduction);
  return p;
}

ResidualBlockParams ResidualBlockParams::init(Initializer& init, std::size_t c_in, std::size_t c_out,
                                              std::size_t stride, ad::Activation activation,
                                              std::size_t se_reduction) {
  ResidualBlockParams p = zeros(c_in, c_out, stride, activation, se_reduction);
  p.conv1.depthwise = init.he_uniform({c_in, 1, 3}, 3);
  p.conv1.pointwise = init.he_uniform({c_out, c_in, 1}, c_in);
  p.conv2.depthwise = init.he_uniform({c_out, 1, 3}, 3);
  p.conv2.pointwise = init.he_uniform({c_out, c_out, 1}, c_out);
  if (p.projection) p.projection = init.he_uniform({c_out, c_in, 1}, c_in);
  if (p.se) {
    const std::size_t reduced = c_out / se_reduction;
    p.se->w_down = init.he_uniform({reduced, c_out}, c_out);
    p.se->w_up = init.he_uniform({c_out, reduced}, reduced);
  }
  return p;
}

void ResidualBlockParams::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                                  std::vector<NamedTensor>& buffers) const {
  params.push_back({prefix + ".conv1.depthwise", conv1.depthwise});
  params.push_back({prefix + ".conv1.pointwise", conv1.pointwise});
  bn1.collect(prefix + ".bn1", params, buffers);
  params.push_back({prefix + ".conv2.depthwise", conv2.depthwise});
  params.push_back({prefix + ".conv2.pointwise", conv2.pointwise});
  bn2.collect(prefix + ".bn2", params, buffers);
  if (projection) {
    params.push_back({prefix + ".projection", *projection});
    projection_bn->collect(prefix + ".projection_bn", params, buffers);
  }
  if (se) {
    params.push_back({prefix + ".se.w_down", se->w_down});
    params.push_back({prefix + ".se.w_up", se->w_up});
  }
}

Tensor residual_block(const Tensor& x, const ResidualBlockParams& p, Mode mode) {
  Tensor branch = ad::activation(p.activation, p.bn1.forward(p.conv1.forward(x), mode));
  branch = p.bn2.forward(p.conv2.forward(branch), mode);
  if (p.se) branch = se_block(branch, *p.se);
  Tensor skip = x;
  if (p.projection) {
    skip = p.projection_bn->forward(ad::conv1d(x, *p.projection, nullptr, p.conv1.stride, 0), mode);
  }
  if (skip.shape() != branch.shape()) {
    throw DimensionError("residual_block: skip path " + ad::shape_to_string(skip.shape()) +
                         " does not match branch " + ad::shape_to_string(branch.shape()));
  }
  return ad::activation(p.activation, ad::add(branch, skip));
}

}  // namespace ecgmv::nn
