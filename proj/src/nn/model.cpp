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

#include "ecgmv/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "ecgmv/errors.hpp"

namespace ecgmv::nn {

namespace {

constexpr std::size_t kStemChannels = 16;
constexpr std::size_t kStageChannels[] = {32, 64, 128, 256};
constexpr std::size_t kGruHidden = 128;

std::size_t scaled(std::size_t base, double multiplier) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(base) * multiplier)));
}

}  // namespace

ModelWidths ModelWidths::for_multiplier(double multiplier) {
  if (!(multiplier > 0.0)) throw ConfigError("width multiplier must be positive");
  ModelWidths w;
  w.stem = scaled(kStemChannels, multiplier);
  for (std::size_t c : kStageChannels) w.stages.push_back(scaled(c, multiplier));
  w.gru_hidden = scaled(kGruHidden, multiplier);
  return w;
}

Model::Model(ArchitectureSpec spec, std::uint64_t seed, ModelOptions options)
    : spec_(spec), seed_(seed), options_(options), widths_(ModelWidths::for_multiplier(options.width_multiplier)) {
  spec_.validate();
  Initializer init(seed);
  build(init);
}

void Model::build(Initializer& init) {
  const auto act = spec_.activation;
  stem_w_ = init.he_uniform({widths_.stem, kInputLeads, 3}, kInputLeads * 3);
  stem_bn_ = BatchNormLayer::identity(widths_.stem);
  params_.push_back({"stem.conv", stem_w_});
  stem_bn_.collect("stem.bn", params_, buffers_);

  const auto depths = stage_depths(spec_.backbone);
  std::size_t c_in = widths_.stem;
  for (std::size_t s = 0; s < depths.size(); ++s) {
    const std::size_t c_out = widths_.stages[s];
    for (std::size_t b = 0; b < depths[s]; ++b) {
      const std::size_t stride = (b == 0 && s > 0) ? 2 : 1;
      blocks_.push_back(ResidualBlockParams::init(init, c_in, c_out, stride, act,
                                                  static_cast<std::size_t>(spec_.se_ratio)));
      blocks_.back().collect("stage" + std::to_string(s + 1) + ".block" + std::to_string(b), params_, buffers_);
      c_in = c_out;
    }
  }

  std::size_t features = c_in;
  if (spec_.gru != GruPlacement::kNone) {
    BiGruParams g;
    g.axis = spec_.gru == GruPlacement::kTimeAxis ? GruAxis::kTime : GruAxis::kLead;
    const std::size_t step_width = g.axis == GruAxis::kTime ? c_in : g.lead_pool_width;
    g.forward = GruParams::init(init, step_width, widths_.gru_hidden);
    g.backward = GruParams::init(init, step_width, widths_.gru_hidden);
    g.forward.collect("gru.forward", params_);
    g.backward.collect("gru.backward", params_);
    gru_ = std::move(g);
    features = 2 * widths_.gru_hidden;
  }

  if (spec_.attention != AttentionKind::kNone) {
    AttentionParams a;
    a.mode = spec_.attention == AttentionKind::kInstance ? AttentionMode::kInstance : AttentionMode::kElement;
    const double bound = 1.0 / std::sqrt(static_cast<double>(features));
    a.w1 = init.uniform({features, features}, bound);
    a.w2 = init.uniform({a.mode == AttentionMode::kInstance ? std::size_t{1} : features, features}, bound);
    params_.push_back({"attention.w1", a.w1});
    params_.push_back({"attention.w2", a.w2});
    attention_ = std::move(a);
  }

  dense_w_ = init.he_uniform({kNumClasses, features}, features);
  dense_b_ = Tensor({kNumClasses}, 0.0, true);
  params_.push_back({"dense.w", dense_w_});
  params_.push_back({"dense.b", dense_b_});
}

Tensor Model::forward(const Tensor& batch, Mode mode, std::mt19937_64* rng) const {
  if (batch.rank() != 3 || batch.dim(1) != kInputLeads) {
    throw DimensionError("model forward expects [B, 12, L], got " + ad::shape_to_string(batch.shape()));
  }
  Tensor x = ad::conv1d(batch, stem_w_, nullptr, 2, 1);
  x = ad::activation(spec_.activation, stem_bn_.forward(x, mode));
  x = ad::max_pool1d(x, 2, 2);
  for (const auto& block : blocks_) x = residual_block(x, block, mode);

  // Sequence view [B, L_seq, F] for attention; pooled features [B, F] otherwise.
  Tensor seq;
  if (gru_) {
    seq = bigru_forward(x, *gru_, mode, rng);
  }
  Tensor pooled;
  if (attention_) {
    if (!seq.defined()) seq = ad::transpose_last(x);
    pooled = attention_pool(seq, *attention_);
  } else {
    pooled = ad::global_avg_pool(seq.defined() ? ad::transpose_last(seq) : x);
  }
  return ad::softmax(ad::linear(pooled, dense_w_, &dense_b_), 1);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void Model::round_to_float() {
  for (auto* list : {&params_, &buffers_}) {
    for (auto& nt : *list) {
      for (auto& v : nt.tensor.data()) v = static_cast<double>(static_cast<float>(v));
    }
  }
}

Model Model::clone() const {
  Model copy(spec_, seed_, options_);
  copy.copy_state_from(*this);
  return copy;
}

void Model::copy_state_from(const Model& other) {
  if (other.params_.size() != params_.size() || other.buffers_.size() != buffers_.size()) {
    throw ContractError("copy_state_from: model layouts differ");
  }
  auto copy_list = [](const std::vector<NamedTensor>& from, std::vector<NamedTensor>& to) {
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (from[i].name != to[i].name || from[i].tensor.shape() != to[i].tensor.shape()) {
        throw ContractError("copy_state_from: tensor '" + from[i].name + "' does not match");
      }
      auto src = from[i].tensor.data();
      std::copy(src.begin(), src.end(), to[i].tensor.data().begin());
    }
  };
  copy_list(other.params_, params_);
  copy_list(other.buffers_, buffers_);
}

Model build_model(const ArchitectureSpec& spec, std::uint64_t seed, ModelOptions options) {
  return Model(spec, seed, options);
}

Tensor model_forward(const Model& model, const Tensor& batch, Mode mode, std::mt19937_64* rng) {
  if (batch.rank() != 3 || batch.dim(2) != kSegmentLength) {
    throw ContractError("model_forward: segments must be [B, 12, " + std::to_string(kSegmentLength) + "], got " +
                        ad::shape_to_string(batch.shape()) + "; run preprocess_record first");
  }
  return model.forward(batch, mode, rng);
}

}  // namespace ecgmv::nn
