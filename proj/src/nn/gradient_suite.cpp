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

#include "ecgmv/nn/gradient_suite.hpp"

#include <algorithm>
#include <random>

#include "ecgmv/autodiff/grad_check.hpp"
#include "ecgmv/autodiff/ops.hpp"
#include "ecgmv/nn/layers.hpp"
#include "ecgmv/nn/model.hpp"

namespace ecgmv::nn {

namespace {

using ad::Tensor;
using Inputs = std::vector<Tensor>;

constexpr double kPrimitiveTol = 1e-4;
constexpr double kModelTol = 1e-3;

Tensor randn(ad::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Scalar probe sum(y * w) with w fixed by (seed, size) so every evaluation sees the same weights.
Tensor probe(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + y.size());
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> w(y.size());
  for (auto& v : w) v = dist(rng);
  return ad::weighted_sum(y, w);
}

using Builder = std::function<Inputs(std::mt19937_64&)>;
using Fn = std::function<Tensor(const Inputs&)>;

GradientCase make_case(std::string name, double tol, Builder build, Fn fn,
                       ad::GradCheckOptions opts = {}) {
  return GradientCase{std::move(name), tol, [build, fn, opts](std::uint64_t seed) {
                        std::mt19937_64 rng(seed + 1);
                        Inputs inputs = build(rng);
                        return ad::grad_check([&](const Inputs& in) { return probe(fn(in), seed); }, inputs, opts);
                      }};
}

GruParams gru_from(const Inputs& in, std::size_t offset) {
  GruParams p;
  p.w_r = in[offset + 0];
  p.w_z = in[offset + 1];
  p.w_h = in[offset + 2];
  p.u_r = in[offset + 3];
  p.u_z = in[offset + 4];
  p.u_h = in[offset + 5];
  p.b_r = in[offset + 6];
  p.b_z = in[offset + 7];
  p.b_h = in[offset + 8];
  return p;
}

void push_gru(Inputs& in, std::mt19937_64& rng, std::size_t input, std::size_t hidden) {
  for (int i = 0; i < 3; ++i) in.push_back(randn({hidden, input}, rng, 0.5));
  for (int i = 0; i < 3; ++i) in.push_back(randn({hidden, hidden}, rng, 0.5));
  for (int i = 0; i < 3; ++i) in.push_back(randn({hidden}, rng, 0.3));
}

GradientCase model_case(const std::string& token) {
  return GradientCase{
      "model:" + token, kModelTol, [token](std::uint64_t seed) {
        ModelOptions opts;
        opts.width_multiplier = 0.125;
        Model model(ArchitectureSpec::parse(token), seed, opts);
        std::mt19937_64 rng(seed + 11);
        Tensor batch = randn({2, kInputLeads, 64}, rng);
        const std::vector<int> targets = {static_cast<int>(seed % kNumClasses), static_cast<int>((seed + 4) % kNumClasses)};
        Inputs inputs;
        for (const auto& p : model.parameters()) inputs.push_back(p.tensor);
        inputs.push_back(batch);
        auto fn = [&](const Inputs& in) {
          // Parameters are read through the model's own handles; `in` aliases them.
          (void)in;
          std::mt19937_64 dropout_rng(seed + 99);
          return ad::cross_entropy(model.forward(batch, Mode::kTrain, &dropout_rng), targets);
        };
        ad::GradCheckOptions gopts;
        gopts.max_coords_per_input = 6;
        const double err = ad::grad_check(fn, inputs, gopts);
        for (auto& t : inputs) t.zero_grad();
        return err;
      }};
}

}  // namespace

std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;

  cases.push_back(make_case(
      "add", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4}, r), randn({3, 4}, r)}; },
      [](const Inputs& in) { return ad::add(in[0], in[1]); }));
  cases.push_back(make_case(
      "sub", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4}, r), randn({3, 4}, r)}; },
      [](const Inputs& in) { return ad::sub(in[0], in[1]); }));
  cases.push_back(make_case(
      "mul", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4}, r), randn({3, 4}, r)}; },
      [](const Inputs& in) { return ad::mul(in[0], in[1]); }));
  cases.push_back(make_case(
      "affine", kPrimitiveTol, [](auto& r) { return Inputs{randn({5}, r)}; },
      [](const Inputs& in) { return ad::affine(in[0], -1.5, 0.25); }));
  cases.push_back(make_case(
      "sum", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3}, r)}; },
      [](const Inputs& in) { return ad::sum(ad::mul(in[0], in[0])); }));
  cases.push_back(make_case(
      "mean", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3}, r)}; },
      [](const Inputs& in) { return ad::mean(ad::mul(in[0], in[0])); }));
  cases.push_back(make_case(
      "reshape", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 6}, r)}; },
      [](const Inputs& in) { return ad::reshape(in[0], {3, 4}); }));
  cases.push_back(make_case(
      "matmul", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4}, r), randn({4, 5}, r)}; },
      [](const Inputs& in) { return ad::matmul(in[0], in[1]); }));
  cases.push_back(make_case(
      "linear", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({2, 3, 4}, r), randn({5, 4}, r), randn({5}, r)}; },
      [](const Inputs& in) { return ad::linear(in[0], in[1], &in[2]); }));
  cases.push_back(make_case(
      "conv1d", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({2, 3, 11}, r), randn({4, 3, 3}, r), randn({4}, r)}; },
      [](const Inputs& in) { return ad::conv1d(in[0], in[1], &in[2], 2, 1); }));
  cases.push_back(make_case(
      "depthwise_conv1d", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 10}, r), randn({3, 1, 3}, r)}; },
      [](const Inputs& in) { return ad::depthwise_conv1d(in[0], in[1], 1, 1); }));
  cases.push_back(make_case(
      "separable_conv1d", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({2, 3, 9}, r), randn({3, 1, 3}, r), randn({5, 3, 1}, r)}; },
      [](const Inputs& in) { return ad::separable_conv1d(in[0], in[1], in[2], 2, 1); }));
  cases.push_back(make_case(
      "batch_norm_train", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({3, 2, 5}, r, 2.0), randn({2}, r), randn({2}, r)}; },
      [](const Inputs& in) {
        auto state = ad::BatchNormState::identity(2);
        return ad::batch_norm(in[0], in[1], in[2], state, ad::Mode::kTrain);
      }));
  cases.push_back(make_case(
      "batch_norm_infer", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({2, 2, 5}, r), randn({2}, r), randn({2}, r)}; },
      [](const Inputs& in) {
        auto state = ad::BatchNormState::identity(2);
        state.running_mean.data()[0] = 0.3;
        state.running_var.data()[1] = 2.5;
        return ad::batch_norm(in[0], in[1], in[2], state, ad::Mode::kInfer);
      }));
  for (auto kind : {ad::Activation::kRelu, ad::Activation::kElu, ad::Activation::kLeakyRelu, ad::Activation::kTanh,
                    ad::Activation::kSigmoid}) {
    cases.push_back(make_case(
        std::string(ad::activation_name(kind)), kPrimitiveTol, [](auto& r) { return Inputs{randn({4, 5}, r)}; },
        [kind](const Inputs& in) { return ad::activation(kind, in[0]); }));
  }
  cases.push_back(make_case(
      "softmax", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4, 2}, r)}; },
      [](const Inputs& in) { return ad::softmax(in[0], 1); }));
  cases.push_back(make_case(
      "global_avg_pool", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 7}, r)}; },
      [](const Inputs& in) { return ad::global_avg_pool(in[0]); }));
  cases.push_back(make_case(
      "max_pool1d", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 8}, r)}; },
      [](const Inputs& in) { return ad::max_pool1d(in[0], 2, 2); }));
  cases.push_back(make_case(
      "adaptive_avg_pool1d", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 10}, r)}; },
      [](const Inputs& in) { return ad::adaptive_avg_pool1d(in[0], 4); }));
  cases.push_back(make_case(
      "transpose_last", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 4}, r)}; },
      [](const Inputs& in) { return ad::transpose_last(in[0]); }));
  cases.push_back(make_case(
      "select_stack", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 4, 3}, r)}; },
      [](const Inputs& in) {
        return ad::stack_steps({ad::select_step(in[0], 3), ad::select_step(in[0], 1), ad::select_step(in[0], 3)});
      }));
  cases.push_back(make_case(
      "concat_last", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 2}, r), randn({2, 3, 4}, r)}; },
      [](const Inputs& in) { return ad::concat_last(in[0], in[1]); }));
  cases.push_back(make_case(
      "channel_scale", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 3, 5}, r), randn({2, 3}, r)}; },
      [](const Inputs& in) { return ad::channel_scale(in[0], in[1]); }));
  cases.push_back(make_case(
      "attention_sum", kPrimitiveTol, [](auto& r) { return Inputs{randn({2, 4, 3}, r), randn({2, 4, 3}, r)}; },
      [](const Inputs& in) { return ad::attention_sum(in[0], in[1]); }));
  cases.push_back(make_case(
      "dropout", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 6}, r)}; },
      [](const Inputs& in) {
        std::mt19937_64 rng(5);
        return ad::dropout(in[0], 0.2, rng, ad::Mode::kTrain);
      }));
  cases.push_back(make_case(
      "cross_entropy", kPrimitiveTol, [](auto& r) { return Inputs{randn({3, 4}, r)}; },
      [](const Inputs& in) {
        const std::vector<int> targets = {0, 3, 1};
        return ad::cross_entropy(ad::softmax(in[0], 1), targets);
      }));

  // Composite blocks.
  cases.push_back(make_case(
      "gru_cell_step", kPrimitiveTol,
      [](auto& r) {
        Inputs in{randn({2, 3}, r), randn({2, 4}, r)};
        push_gru(in, r, 3, 4);
        return in;
      },
      [](const Inputs& in) { return gru_cell_step(in[0], in[1], gru_from(in, 2)); }));
  for (auto axis : {GruAxis::kTime, GruAxis::kLead}) {
    cases.push_back(make_case(
        axis == GruAxis::kTime ? "bigru_time_axis" : "bigru_lead_axis", kPrimitiveTol,
        [axis](auto& r) {
          // features [B=2, C'=3, L'=5]; lead axis pools L' to 4 bins.
          const std::size_t step = axis == GruAxis::kTime ? 3 : 4;
          Inputs in{randn({2, 3, 5}, r)};
          push_gru(in, r, step, 2);
          push_gru(in, r, step, 2);
          return in;
        },
        [axis](const Inputs& in) {
          BiGruParams p;
          p.axis = axis;
          p.lead_pool_width = 4;
          p.forward = gru_from(in, 1);
          p.backward = gru_from(in, 10);
          std::mt19937_64 rng(3);
          return bigru_forward(in[0], p, Mode::kTrain, &rng);
        }));
  }
  for (auto mode : {AttentionMode::kInstance, AttentionMode::kElement}) {
    cases.push_back(make_case(
        mode == AttentionMode::kInstance ? "attention_instance" : "attention_element", kPrimitiveTol,
        [mode](auto& r) {
          return Inputs{randn({2, 5, 3}, r), randn({3, 3}, r),
                        randn({mode == AttentionMode::kInstance ? std::size_t{1} : std::size_t{3}, 3}, r)};
        },
        [mode](const Inputs& in) {
          AttentionParams p{in[1], in[2], mode};
          return attention_pool(in[0], p);
        }));
  }
  cases.push_back(make_case(
      "se_block", kPrimitiveTol,
      [](auto& r) { return Inputs{randn({2, 4, 6}, r), randn({2, 4}, r), randn({4, 2}, r)}; },
      [](const Inputs& in) {
        SeParams p{2, in[1], in[2]};
        return se_block(in[0], p);
      }));
  cases.push_back(GradientCase{"residual_block", kPrimitiveTol, [](std::uint64_t seed) {
                                 Initializer init(seed + 3);
                                 auto block = ResidualBlockParams::init(init, 4, 6, 2, ad::Activation::kElu, 2);
                                 std::vector<NamedTensor> params, buffers;
                                 block.collect("b", params, buffers);
                                 std::mt19937_64 rng(seed + 1);
                                 Tensor x = randn({2, 4, 9}, rng);
                                 Inputs inputs{x};
                                 for (auto& p : params) inputs.push_back(p.tensor);
                                 auto fn = [&](const Inputs&) {
                                   return probe(residual_block(x, block, Mode::kTrain), seed);
                                 };
                                 return ad::grad_check(fn, inputs);
                               }});

  // Full models with cross-entropy loss.
  cases.push_back(model_case("resnet18+se4+elu+gru0+att0"));
  cases.push_back(model_case("resnet18+se2+elu+gru-time+att-element"));
  cases.push_back(model_case("resnet34+se0+elu+gru-lead+att-instance"));
  return cases;
}

std::vector<GradientResult> run_gradient_suite(std::size_t n_seeds) {
  std::vector<GradientResult> results;
  for (const auto& c : gradient_cases()) {
    double worst = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) worst = std::max(worst, c.run(s));
    results.push_back({c.name, c.tolerance, worst});
  }
  return results;
}

}  // namespace ecgmv::nn
