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

#include "ecgmv/nn/architecture.hpp"

#include <array>
#include <sstream>

#include "ecgmv/errors.hpp"

namespace ecgmv::nn {

namespace {

constexpr std::array kBackbones = {Backbone::kResNet18, Backbone::kResNet34};
constexpr std::array kSeRatios = {0, 2, 4, 8};
constexpr std::array kActivations = {ad::Activation::kRelu, ad::Activation::kElu, ad::Activation::kLeakyRelu};
constexpr std::array kGrus = {GruPlacement::kNone, GruPlacement::kTimeAxis, GruPlacement::kLeadAxis};
constexpr std::array kAttentions = {AttentionKind::kNone, AttentionKind::kInstance, AttentionKind::kElement};

std::vector<std::string> split_plus(std::string_view token) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = token.find('+', start);
    parts.emplace_back(token.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string ArchitectureSpec::token() const {
  std::ostringstream os;
  os << (backbone == Backbone::kResNet18 ? "resnet18" : "resnet34");
  os << "+se" << se_ratio;
  os << '+' << ad::activation_name(activation);
  switch (gru) {
    case GruPlacement::kNone: os << "+gru0"; break;
    case GruPlacement::kTimeAxis: os << "+gru-time"; break;
    case GruPlacement::kLeadAxis: os << "+gru-lead"; break;
  }
  switch (attention) {
    case AttentionKind::kNone: os << "+att0"; break;
    case AttentionKind::kInstance: os << "+att-instance"; break;
    case AttentionKind::kElement: os << "+att-element"; break;
  }
  return os.str();
}

ArchitectureSpec ArchitectureSpec::parse(std::string_view token) {
  const auto parts = split_plus(token);
  if (parts.size() != 5) {
    throw ConfigError("architecture token '" + std::string(token) + "' must have 5 '+'-separated fields");
  }
  ArchitectureSpec spec;
  if (parts[0] == "resnet18") {
    spec.backbone = Backbone::kResNet18;
  } else if (parts[0] == "resnet34") {
    spec.backbone = Backbone::kResNet34;
  } else {
    throw ConfigError("unknown backbone '" + parts[0] + "'");
  }
  if (parts[1] == "se0") {
    spec.se_ratio = 0;
  } else if (parts[1] == "se2") {
    spec.se_ratio = 2;
  } else if (parts[1] == "se4") {
    spec.se_ratio = 4;
  } else if (parts[1] == "se8") {
    spec.se_ratio = 8;
  } else {
    throw ConfigError("unknown SE field '" + parts[1] + "'");
  }
  spec.activation = ad::parse_activation(parts[2]);
  if (parts[3] == "gru0") {
    spec.gru = GruPlacement::kNone;
  } else if (parts[3] == "gru-time") {
    spec.gru = GruPlacement::kTimeAxis;
  } else if (parts[3] == "gru-lead") {
    spec.gru = GruPlacement::kLeadAxis;
  } else {
    throw ConfigError("unknown GRU field '" + parts[3] + "'");
  }
  if (parts[4] == "att0") {
    spec.attention = AttentionKind::kNone;
  } else if (parts[4] == "att-instance") {
    spec.attention = AttentionKind::kInstance;
  } else if (parts[4] == "att-element") {
    spec.attention = AttentionKind::kElement;
  } else {
    throw ConfigError("unknown attention field '" + parts[4] + "'");
  }
  spec.validate();
  return spec;
}

void ArchitectureSpec::validate() const {
  bool ok_se = false;
  for (int r : kSeRatios) ok_se = ok_se || r == se_ratio;
  if (!ok_se) throw ConfigError("SE reduction ratio must be one of 0, 2, 4, 8");
  bool ok_act = false;
  for (auto a : kActivations) ok_act = ok_act || a == activation;
  if (!ok_act) throw ConfigError("activation must be relu, elu or leaky_relu");
}

std::vector<ArchitectureSpec> enumerate_architectures() {
  std::vector<ArchitectureSpec> out;
  for (auto b : kBackbones)
    for (int r : kSeRatios)
      for (auto a : kActivations)
        for (auto g : kGrus)
          for (auto at : kAttentions) out.push_back(ArchitectureSpec{b, r, a, g, at});
  return out;
}

std::vector<std::size_t> stage_depths(Backbone backbone) {
  if (backbone == Backbone::kResNet18) return {2, 2, 2, 2};
  return {3, 4, 6, 3};
}

}  // namespace ecgmv::nn
