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

#include "ecgmv/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecgmv/errors.hpp"

namespace ecgmv::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

#ifndef NDEBUG
void check_finite(const Tensor& y, std::string_view op, std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t == nullptr || !t->defined()) continue;
    for (double v : t->data()) {
      if (!std::isfinite(v)) return;
    }
  }
  for (double v : y.data()) {
    if (!std::isfinite(v)) throw ContractError(std::string(op) + " produced a non-finite value");
  }
}
#define ECGMV_CHECK_FINITE(y, op, ...) check_finite(y, op, {__VA_ARGS__})
#else
#define ECGMV_CHECK_FINITE(y, op, ...) ((void)0)
#endif

// Views a rank-2 [C, L] or rank-3 [B, C, L] tensor as batched.
struct Batched {
  std::size_t batch;
  std::size_t channels;
  std::size_t length;
  bool squeezed;
};

Batched as_batched(const Tensor& x, std::string_view op) {
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1), true};
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), false};
  throw DimensionError(std::string(op) + ": expected [C, L] or [B, C, L], got " + shape_to_string(x.shape()));
}

Shape batched_shape(const Batched& b, std::size_t channels, std::size_t length) {
  if (b.squeezed) return {channels, length};
  return {b.batch, channels, length};
}

// Output index range [lo_begin, lo_end) for which lo * stride + k - padding lies in [0, length).
std::pair<std::size_t, std::size_t> valid_range(std::size_t k, std::size_t stride, std::size_t padding,
                                                std::size_t length, std::size_t out_len) {
  const auto offset = static_cast<long long>(k) - static_cast<long long>(padding);
  const auto s = static_cast<long long>(stride);
  long long begin = 0;
  if (offset < 0) begin = (-offset + s - 1) / s;
  const long long last_in = static_cast<long long>(length) - 1 - offset;
  if (last_in < 0) return {0, 0};
  long long end = last_in / s + 1;
  end = std::min<long long>(end, static_cast<long long>(out_len));
  if (begin >= end) return {0, 0};
  return {static_cast<std::size_t>(begin), static_cast<std::size_t>(end)};
}

std::size_t conv_out_len(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t padding,
                         std::string_view op) {
  if (stride == 0) throw ContractError(std::string(op) + ": stride must be positive");
  if (kernel > length + 2 * padding) {
    throw DimensionError(std::string(op) + ": kernel " + std::to_string(kernel) + " exceeds padded length axis (" +
                         std::to_string(length + 2 * padding) + ")");
  }
  return (length + 2 * padding - kernel) / stride + 1;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "elu") return Activation::kElu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation kind) {
  switch (kind) {
    case Activation::kRelu: return "relu";
    case Activation::kElu: return "elu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  throw ConfigError("unknown activation kind");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor y(a.shape());
  auto yd = y.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = ad[i] + bd[i];
  if (should_record({&a, &b})) {
    active_tape()->record("add", y, [a, b, y]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor y(a.shape());
  auto yd = y.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = ad[i] - bd[i];
  if (should_record({&a, &b})) {
    active_tape()->record("sub", y, [a, b, y]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor y(a.shape());
  auto yd = y.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = ad[i] * bd[i];
  if (should_record({&a, &b})) {
    active_tape()->record("mul", y, [a, b, y]() mutable {
      auto gy = y.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
      }
    });
  }
  return y;
}

Tensor affine(const Tensor& x, double alpha, double beta) {
  Tensor y(x.shape());
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = alpha * xd[i] + beta;
  if (should_record({&x})) {
    active_tape()->record("affine", y, [x, y, alpha]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += alpha * gy[i];
    });
  }
  return y;
}

Tensor sum(const Tensor& x) {
  auto xd = x.data();
  Tensor y = Tensor::scalar(std::accumulate(xd.begin(), xd.end(), 0.0));
  if (should_record({&x})) {
    active_tape()->record("sum", y, [x, y]() mutable {
      const double g = y.grad()[0];
      for (auto& v : x.mutable_grad()) v += g;
    });
  }
  return y;
}

Tensor mean(const Tensor& x) {
  return affine(sum(x), 1.0 / static_cast<double>(x.size()), 0.0);
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
  if (weights.size() != x.size()) throw DimensionError("weighted_sum: weight count does not match tensor size");
  auto xd = x.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < xd.size(); ++i) acc += xd[i] * weights[i];
  Tensor y = Tensor::scalar(acc);
  if (should_record({&x})) {
    std::vector<double> w(weights.begin(), weights.end());
    active_tape()->record("weighted_sum", y, [x, y, w = std::move(w)]() mutable {
      const double g = y.grad()[0];
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  Tensor y(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (should_record({&x})) {
    active_tape()->record("reshape", y, [x, y]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul: operands must be rank 2");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner axis mismatch " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  Tensor y({m, n});
  auto yd = y.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      for (std::size_t j = 0; j < n; ++j) yd[i * n + j] += av * bd[p * n + j];
    }
  }
  if (should_record({&a, &b})) {
    active_tape()->record("matmul", y, [a, b, y, m, k, n]() mutable {
      auto gy = y.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gy[i * n + j] * bv[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aval = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aval * gy[i * n + j];
          }
      }
    });
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (w.rank() != 2) throw DimensionError("linear: weight must be [out, in]");
  if (x.rank() < 1) throw DimensionError("linear: input must have at least one axis");
  const std::size_t in = w.dim(1), out = w.dim(0);
  if (x.shape().back() != in) {
    throw DimensionError("linear: input feature axis is " + std::to_string(x.shape().back()) + ", weight expects " +
                         std::to_string(in));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != out)) {
    throw DimensionError("linear: bias must be [" + std::to_string(out) + "]");
  }
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out;
  Tensor y(out_shape);
  auto yd = y.data();
  auto xd = x.data();
  auto wd = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = wd.data() + o * in;
      double acc = bias ? bias->data()[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yd[r * out + o] = acc;
    }
  }
  Tensor b = bias ? *bias : Tensor();
  if (should_record({&x, &w, bias})) {
    active_tape()->record("linear", y, [x, w, b, y, rows, in, out]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto wv = w.data();
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out; ++o) {
            const double g = gy[r * out + o];
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += g * wv[o * in + i];
          }
      }
      if (w.requires_grad()) {
        auto gw = w.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out; ++o) {
            const double g = gy[r * out + o];
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += g * xv[r * in + i];
          }
      }
      if (b.defined() && b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < out; ++o) gb[o] += gy[r * out + o];
      }
    });
  }
  ECGMV_CHECK_FINITE(y, "linear", &x, &w, bias);
  return y;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride, std::size_t padding) {
  const Batched xb = as_batched(x, "conv1d");
  if (w.rank() != 3) throw DimensionError("conv1d: weight must be [C_out, C_in, K]");
  const std::size_t c_out = w.dim(0), c_in = w.dim(1), kernel = w.dim(2);
  if (c_in != xb.channels) {
    throw DimensionError("conv1d: channel axis of input is " + std::to_string(xb.channels) + ", weight expects " +
                         std::to_string(c_in));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != c_out)) {
    throw DimensionError("conv1d: bias axis must equal C_out=" + std::to_string(c_out));
  }
  const std::size_t len = xb.length;
  const std::size_t out_len = conv_out_len(len, kernel, stride, padding, "conv1d");
  Tensor y(batched_shape(xb, c_out, out_len));
  auto yd = y.data();
  auto xd = x.data();
  auto wd = w.data();
  for (std::size_t b = 0; b < xb.batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      double* yrow = yd.data() + (b * c_out + co) * out_len;
      if (bias) std::fill(yrow, yrow + out_len, bias->data()[co]);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double* xrow = xd.data() + (b * c_in + ci) * len;
        for (std::size_t k = 0; k < kernel; ++k) {
          const double wv = wd[(co * c_in + ci) * kernel + k];
          auto [lo, hi] = valid_range(k, stride, padding, len, out_len);
          for (std::size_t o = lo; o < hi; ++o) yrow[o] += wv * xrow[o * stride + k - padding];
        }
      }
    }
  }
  Tensor bt = bias ? *bias : Tensor();
  if (should_record({&x, &w, bias})) {
    active_tape()->record("conv1d", y, [x, w, bt, y, xb, c_out, c_in, kernel, len, out_len, stride, padding]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto wv = w.data();
      const bool need_x = x.requires_grad();
      const bool need_w = w.requires_grad();
      std::span<double> gx = need_x ? x.mutable_grad() : std::span<double>();
      std::span<double> gw = need_w ? w.mutable_grad() : std::span<double>();
      for (std::size_t b = 0; b < xb.batch; ++b) {
        for (std::size_t co = 0; co < c_out; ++co) {
          const double* grow = gy.data() + (b * c_out + co) * out_len;
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            const std::size_t xoff = (b * c_in + ci) * len;
            for (std::size_t k = 0; k < kernel; ++k) {
              const std::size_t widx = (co * c_in + ci) * kernel + k;
              auto [lo, hi] = valid_range(k, stride, padding, len, out_len);
              if (need_x) {
                const double wk = wv[widx];
                double* gxrow = gx.data() + xoff;
                for (std::size_t o = lo; o < hi; ++o) gxrow[o * stride + k - padding] += wk * grow[o];
              }
              if (need_w) {
                const double* xrow = xv.data() + xoff;
                double acc = 0.0;
                for (std::size_t o = lo; o < hi; ++o) acc += grow[o] * xrow[o * stride + k - padding];
                gw[widx] += acc;
              }
            }
          }
        }
      }
      if (bt.defined() && bt.requires_grad()) {
        auto gb = bt.mutable_grad();
        for (std::size_t b = 0; b < xb.batch; ++b)
          for (std::size_t co = 0; co < c_out; ++co) {
            const double* grow = gy.data() + (b * c_out + co) * out_len;
            gb[co] += std::accumulate(grow, grow + out_len, 0.0);
          }
      }
    });
  }
  ECGMV_CHECK_FINITE(y, "conv1d", &x, &w, bias);
  return y;
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding) {
  const Batched xb = as_batched(x, "depthwise_conv1d");
  if (w.rank() != 3 || w.dim(1) != 1) throw DimensionError("depthwise_conv1d: weight must be [C, 1, K]");
  const std::size_t channels = xb.channels, kernel = w.dim(2);
  if (w.dim(0) != channels) {
    throw DimensionError("depthwise_conv1d: channel axis of input is " + std::to_string(channels) +
                         ", depthwise kernel count is " + std::to_string(w.dim(0)));
  }
  const std::size_t len = xb.length;
  const std::size_t out_len = conv_out_len(len, kernel, stride, padding, "depthwise_conv1d");
  Tensor y(batched_shape(xb, channels, out_len));
  auto yd = y.data();
  auto xd = x.data();
  auto wd = w.data();
  for (std::size_t b = 0; b < xb.batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* yrow = yd.data() + (b * channels + c) * out_len;
      const double* xrow = xd.data() + (b * channels + c) * len;
      for (std::size_t k = 0; k < kernel; ++k) {
        const double wv = wd[c * kernel + k];
        auto [lo, hi] = valid_range(k, stride, padding, len, out_len);
        for (std::size_t o = lo; o < hi; ++o) yrow[o] += wv * xrow[o * stride + k - padding];
      }
    }
  }
  if (should_record({&x, &w})) {
    active_tape()->record("depthwise_conv1d", y,
                          [x, w, y, xb, channels, kernel, len, out_len, stride, padding]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto wv = w.data();
      const bool need_x = x.requires_grad();
      const bool need_w = w.requires_grad();
      std::span<double> gx = need_x ? x.mutable_grad() : std::span<double>();
      std::span<double> gw = need_w ? w.mutable_grad() : std::span<double>();
      for (std::size_t b = 0; b < xb.batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t xoff = (b * channels + c) * len;
          const double* grow = gy.data() + (b * channels + c) * out_len;
          for (std::size_t k = 0; k < kernel; ++k) {
            auto [lo, hi] = valid_range(k, stride, padding, len, out_len);
            if (need_x) {
              const double wk = wv[c * kernel + k];
              for (std::size_t o = lo; o < hi; ++o) gx[xoff + o * stride + k - padding] += wk * grow[o];
            }
            if (need_w) {
              double acc = 0.0;
              for (std::size_t o = lo; o < hi; ++o) acc += grow[o] * xv[xoff + o * stride + k - padding];
              gw[c * kernel + k] += acc;
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor separable_conv1d(const Tensor& x, const Tensor& depthwise_w, const Tensor& pointwise_w, std::size_t stride,
                        std::size_t padding) {
  if (pointwise_w.rank() != 3 || pointwise_w.dim(2) != 1) {
    throw DimensionError("separable_conv1d: pointwise weight must be [C_out, C_in, 1]");
  }
  Tensor mid = depthwise_conv1d(x, depthwise_w, stride, padding);
  return conv1d(mid, pointwise_w, nullptr, 1, 0);
}

BatchNormState BatchNormState::identity(std::size_t channels) {
  return BatchNormState{Tensor({channels}, 0.0), Tensor({channels}, 1.0)};
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode,
                  double momentum, double eps) {
  if (!(eps > 0.0)) throw ContractError("batch_norm: eps must be positive");
  const Batched xb = as_batched(x, "batch_norm");
  const std::size_t channels = xb.channels, len = xb.length, batch = xb.batch;
  if (gamma.size() != channels || beta.size() != channels) {
    throw DimensionError("batch_norm: gamma/beta must have " + std::to_string(channels) + " channels");
  }
  if (!state.running_mean.defined() || !state.running_var.defined() || state.running_mean.size() != channels ||
      state.running_var.size() != channels) {
    throw DimensionError("batch_norm: running statistics must have " + std::to_string(channels) + " channels");
  }
  const double n = static_cast<double>(batch * len);
  std::vector<double> mu(channels), inv_std(channels);
  auto xd = x.data();
  auto run_mean = state.running_mean.data();
  auto run_var = state.running_var.data();
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = xd.data() + (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) s += row[l];
      }
      const double m = s / n;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = xd.data() + (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) ss += (row[l] - m) * (row[l] - m);
      }
      const double var = ss / n;
      mu[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      run_mean[c] = momentum * run_mean[c] + (1.0 - momentum) * m;
      run_var[c] = momentum * run_var[c] + (1.0 - momentum) * var;
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mu[c] = run_mean[c];
      inv_std[c] = 1.0 / std::sqrt(run_var[c] + eps);
    }
  }
  Tensor y(x.shape());
  auto yd = y.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (b * channels + c) * len;
      for (std::size_t l = 0; l < len; ++l) yd[off + l] = gd[c] * (xd[off + l] - mu[c]) * inv_std[c] + bd[c];
    }
  if (should_record({&x, &gamma, &beta})) {
    active_tape()->record("batch_norm", y,
                          [x, gamma, beta, y, mu = std::move(mu), inv_std = std::move(inv_std), batch, channels, len,
                           n, train = mode == Mode::kTrain]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto gv = gamma.data();
      std::span<double> gx = x.requires_grad() ? x.mutable_grad() : std::span<double>();
      std::span<double> ggamma = gamma.requires_grad() ? gamma.mutable_grad() : std::span<double>();
      std::span<double> gbeta = beta.requires_grad() ? beta.mutable_grad() : std::span<double>();
      for (std::size_t c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_g_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * channels + c) * len;
          for (std::size_t l = 0; l < len; ++l) {
            const double xhat = (xv[off + l] - mu[c]) * inv_std[c];
            sum_g += gy[off + l];
            sum_g_xhat += gy[off + l] * xhat;
          }
        }
        if (!ggamma.empty()) ggamma[c] += sum_g_xhat;
        if (!gbeta.empty()) gbeta[c] += sum_g;
        if (gx.empty()) continue;
        const double scale = gv[c] * inv_std[c];
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * channels + c) * len;
          for (std::size_t l = 0; l < len; ++l) {
            if (train) {
              const double xhat = (xv[off + l] - mu[c]) * inv_std[c];
              gx[off + l] += scale * (gy[off + l] - sum_g / n - xhat * sum_g_xhat / n);
            } else {
              gx[off + l] += scale * gy[off + l];
            }
          }
        }
      }
    });
  }
  ECGMV_CHECK_FINITE(y, "batch_norm", &x, &gamma, &beta);
  return y;
}

Tensor activation(Activation kind, const Tensor& x) {
  Tensor y(x.shape());
  auto yd = y.data();
  auto xd = x.data();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = xd[i] <= 0.0 ? 0.0 : xd[i];
      break;
    case Activation::kElu:
      for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = xd[i] <= 0.0 ? kEluAlpha * std::expm1(xd[i]) : xd[i];
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = xd[i] <= 0.0 ? kLeakyReluSlope * xd[i] : xd[i];
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = std::tanh(xd[i]);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = stable_sigmoid(xd[i]);
      break;
  }
  if (should_record({&x})) {
    active_tape()->record(activation_name(kind), y, [x, y, kind]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto yv = y.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) {
        double d = 0.0;
        switch (kind) {
          case Activation::kRelu: d = xv[i] > 0.0 ? 1.0 : 0.0; break;
          case Activation::kElu: d = xv[i] > 0.0 ? 1.0 : yv[i] + kEluAlpha; break;
          case Activation::kLeakyRelu: d = xv[i] > 0.0 ? 1.0 : kLeakyReluSlope; break;
          case Activation::kTanh: d = 1.0 - yv[i] * yv[i]; break;
          case Activation::kSigmoid: d = yv[i] * (1.0 - yv[i]); break;
        }
        gx[i] += d * gy[i];
      }
    });
  }
  return y;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_to_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  Tensor y(shape);
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, xd[base + i * inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(xd[base + i * inner] - mx);
        yd[base + i * inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < n; ++i) yd[base + i * inner] /= z;
    }
  }
  if (should_record({&x})) {
    active_tape()->record("softmax", y, [x, y, outer, inner, n]() mutable {
      auto gy = y.grad();
      auto yv = y.data();
      auto gx = x.mutable_grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * n * inner + in;
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += gy[base + i * inner] * yv[base + i * inner];
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = base + i * inner;
            gx[idx] += yv[idx] * (gy[idx] - dot);
          }
        }
      }
    });
  }
  return y;
}

Tensor global_avg_pool(const Tensor& x) {
  const Batched xb = as_batched(x, "global_avg_pool");
  const std::size_t rows = xb.batch * xb.channels, len = xb.length;
  Shape out = xb.squeezed ? Shape{xb.channels} : Shape{xb.batch, xb.channels};
  Tensor y(out);
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    yd[r] = std::accumulate(xd.begin() + r * len, xd.begin() + (r + 1) * len, 0.0) / static_cast<double>(len);
  }
  if (should_record({&x})) {
    active_tape()->record("global_avg_pool", y, [x, y, rows, len]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      const double inv = 1.0 / static_cast<double>(len);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t l = 0; l < len; ++l) gx[r * len + l] += gy[r] * inv;
    });
  }
  return y;
}

Tensor max_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride) {
  const Batched xb = as_batched(x, "max_pool1d");
  const std::size_t len = xb.length;
  if (kernel == 0) throw ContractError("max_pool1d: kernel must be positive");
  const std::size_t out_len = conv_out_len(len, kernel, stride, 0, "max_pool1d");
  const std::size_t rows = xb.batch * xb.channels;
  Tensor y(batched_shape(xb, xb.channels, out_len));
  auto yd = y.data();
  auto xd = x.data();
  std::vector<std::size_t> argmax(rows * out_len);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out_len; ++o) {
      std::size_t best = r * len + o * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        const std::size_t idx = r * len + o * stride + k;
        if (xd[idx] > xd[best] || std::isnan(xd[idx])) best = idx;
      }
      argmax[r * out_len + o] = best;
      yd[r * out_len + o] = xd[best];
    }
  }
  if (should_record({&x})) {
    active_tape()->record("max_pool1d", y, [x, y, argmax = std::move(argmax)]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[argmax[i]] += gy[i];
    });
  }
  return y;
}

Tensor adaptive_avg_pool1d(const Tensor& x, std::size_t out_len) {
  const Batched xb = as_batched(x, "adaptive_avg_pool1d");
  if (out_len == 0) throw ContractError("adaptive_avg_pool1d: output length must be positive");
  const std::size_t len = xb.length, rows = xb.batch * xb.channels;
  std::vector<std::pair<std::size_t, std::size_t>> bins(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    bins[i].first = (i * len) / out_len;
    bins[i].second = ((i + 1) * len + out_len - 1) / out_len;
  }
  Tensor y(batched_shape(xb, xb.channels, out_len));
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < out_len; ++i) {
      auto [lo, hi] = bins[i];
      double s = 0.0;
      for (std::size_t l = lo; l < hi; ++l) s += xd[r * len + l];
      yd[r * out_len + i] = s / static_cast<double>(hi - lo);
    }
  if (should_record({&x})) {
    active_tape()->record("adaptive_avg_pool1d", y, [x, y, bins = std::move(bins), rows, len, out_len]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < out_len; ++i) {
          auto [lo, hi] = bins[i];
          const double g = gy[r * out_len + i] / static_cast<double>(hi - lo);
          for (std::size_t l = lo; l < hi; ++l) gx[r * len + l] += g;
        }
    });
  }
  return y;
}

Tensor transpose_last(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 3) throw DimensionError("transpose_last: expected rank 2 or 3");
  const std::size_t batch = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t rows = x.dim(x.rank() - 2), cols = x.dim(x.rank() - 1);
  Shape out = x.shape();
  std::swap(out[out.size() - 1], out[out.size() - 2]);
  Tensor y(out);
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) yd[b * rows * cols + c * rows + r] = xd[b * rows * cols + r * cols + c];
  if (should_record({&x})) {
    active_tape()->record("transpose_last", y, [x, y, batch, rows, cols]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c)
            gx[b * rows * cols + r * cols + c] += gy[b * rows * cols + c * rows + r];
    });
  }
  return y;
}

Tensor select_step(const Tensor& x, std::size_t index) {
  if (x.rank() != 3) throw DimensionError("select_step: expected [B, L, C]");
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2);
  if (index >= len) throw DimensionError("select_step: index out of range on sequence axis");
  Tensor y({batch, ch});
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(xd.begin() + (b * len + index) * ch, ch, yd.begin() + b * ch);
  if (should_record({&x})) {
    active_tape()->record("select_step", y, [x, y, batch, len, ch, index]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < ch; ++c) gx[(b * len + index) * ch + c] += gy[b * ch + c];
    });
  }
  return y;
}

Tensor stack_steps(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ContractError("stack_steps: no steps");
  const Shape& s0 = steps.front().shape();
  if (s0.size() != 2) throw DimensionError("stack_steps: steps must be [B, C]");
  const std::size_t batch = s0[0], ch = s0[1], len = steps.size();
  Tensor y({batch, len, ch});
  auto yd = y.data();
  bool any_grad = false;
  for (std::size_t t = 0; t < len; ++t) {
    if (steps[t].shape() != s0) throw DimensionError("stack_steps: inconsistent step shapes");
    any_grad = any_grad || steps[t].requires_grad();
    auto sd = steps[t].data();
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(sd.begin() + b * ch, ch, yd.begin() + (b * len + t) * ch);
  }
  if (any_grad && active_tape() != nullptr) {
    active_tape()->record("stack_steps", y, [steps, y, batch, len, ch]() mutable {
      auto gy = y.grad();
      for (std::size_t t = 0; t < len; ++t) {
        if (!steps[t].requires_grad()) continue;
        auto gs = steps[t].mutable_grad();
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t c = 0; c < ch; ++c) gs[b * ch + c] += gy[(b * len + t) * ch + c];
      }
    });
  }
  return y;
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank()) throw DimensionError("concat_last: rank mismatch");
  for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) throw DimensionError("concat_last: leading axis " + std::to_string(i) + " differs");
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t rows = a.size() / ca;
  Shape out = a.shape();
  out.back() = ca + cb;
  Tensor y(out);
  auto yd = y.data();
  auto adat = a.data();
  auto bdat = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(adat.begin() + r * ca, ca, yd.begin() + r * (ca + cb));
    std::copy_n(bdat.begin() + r * cb, cb, yd.begin() + r * (ca + cb) + ca);
  }
  if (should_record({&a, &b})) {
    active_tape()->record("concat_last", y, [a, b, y, rows, ca, cb]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += gy[r * (ca + cb) + c];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += gy[r * (ca + cb) + ca + c];
      }
    });
  }
  return y;
}

Tensor channel_scale(const Tensor& x, const Tensor& s) {
  const Batched xb = as_batched(x, "channel_scale");
  const std::size_t rows = xb.batch * xb.channels, len = xb.length;
  if (s.size() != rows) {
    throw DimensionError("channel_scale: scale has " + std::to_string(s.size()) + " entries, expected " +
                         std::to_string(rows));
  }
  Tensor y(x.shape());
  auto yd = y.data();
  auto xd = x.data();
  auto sd = s.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t l = 0; l < len; ++l) yd[r * len + l] = sd[r] * xd[r * len + l];
  if (should_record({&x, &s})) {
    active_tape()->record("channel_scale", y, [x, s, y, rows, len]() mutable {
      auto gy = y.grad();
      auto xv = x.data();
      auto sv = s.data();
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t l = 0; l < len; ++l) gx[r * len + l] += sv[r] * gy[r * len + l];
      }
      if (s.requires_grad()) {
        auto gs = s.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (std::size_t l = 0; l < len; ++l) acc += xv[r * len + l] * gy[r * len + l];
          gs[r] += acc;
        }
      }
    });
  }
  return y;
}

Tensor attention_sum(const Tensor& a, const Tensor& x) {
  if (a.rank() != 3 || x.rank() != 3) throw DimensionError("attention_sum: expected [B, L, A] and [B, L, C]");
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2), acols = a.dim(2);
  if (a.dim(0) != batch || a.dim(1) != len) throw DimensionError("attention_sum: batch/sequence axes differ");
  if (acols != 1 && acols != ch) {
    throw DimensionError("attention_sum: weight axis must be 1 or " + std::to_string(ch) + ", got " +
                         std::to_string(acols));
  }
  Tensor y({batch, ch});
  auto yd = y.data();
  auto ad = a.data();
  auto xd = x.data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t c = 0; c < ch; ++c) {
        const double w = ad[(b * len + i) * acols + (acols == 1 ? 0 : c)];
        yd[b * ch + c] += w * xd[(b * len + i) * ch + c];
      }
  if (should_record({&a, &x})) {
    active_tape()->record("attention_sum", y, [a, x, y, batch, len, ch, acols]() mutable {
      auto gy = y.grad();
      auto av = a.data();
      auto xv = x.data();
      std::span<double> ga = a.requires_grad() ? a.mutable_grad() : std::span<double>();
      std::span<double> gx = x.requires_grad() ? x.mutable_grad() : std::span<double>();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < len; ++i)
          for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t aidx = (b * len + i) * acols + (acols == 1 ? 0 : c);
            const std::size_t xidx = (b * len + i) * ch + c;
            if (!ga.empty()) ga[aidx] += gy[b * ch + c] * xv[xidx];
            if (!gx.empty()) gx[xidx] += gy[b * ch + c] * av[aidx];
          }
    });
  }
  return y;
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, Mode mode) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must lie in [0, 1)");
  if (mode == Mode::kInfer || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? scale : 0.0;
  Tensor y(x.shape());
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = xd[i] * mask[i];
  if (should_record({&x})) {
    active_tape()->record("dropout", y, [x, y, mask = std::move(mask)]() mutable {
      auto gy = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    });
  }
  return y;
}

Tensor cross_entropy(const Tensor& probs, std::span<const int> targets) {
  if (probs.rank() != 2) throw DimensionError("cross_entropy: probabilities must be [B, K]");
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (targets.size() != batch) throw DimensionError("cross_entropy: one target per row required");
  constexpr double kFloor = 1e-12;
  auto pd = probs.data();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] < 0 || static_cast<std::size_t>(targets[b]) >= classes) {
      throw ContractError("cross_entropy: target " + std::to_string(targets[b]) + " out of range");
    }
    loss -= std::log(std::max(pd[b * classes + static_cast<std::size_t>(targets[b])], kFloor));
  }
  Tensor y = Tensor::scalar(loss / static_cast<double>(batch));
  if (should_record({&probs})) {
    std::vector<int> t(targets.begin(), targets.end());
    active_tape()->record("cross_entropy", y, [probs, y, t = std::move(t), batch, classes]() mutable {
      const double g = y.grad()[0] / static_cast<double>(batch);
      auto pv = probs.data();
      auto gp = probs.mutable_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = b * classes + static_cast<std::size_t>(t[b]);
        if (pv[idx] > kFloor) gp[idx] -= g / pv[idx];
      }
    });
  }
  return y;
}

}  // namespace ecgmv::ad
