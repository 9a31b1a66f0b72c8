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

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ecgmv/autodiff/ops.hpp"

namespace ecgmv::nn {

enum class Backbone { kResNet18, kResNet34 };
enum class GruPlacement { kNone, kTimeAxis, kLeadAxis };
enum class AttentionKind { kNone, kInstance, kElement };

inline constexpr std::size_t kNumClasses = 9;
inline constexpr std::size_t kInputLeads = 12;

/// One point of the architecture grid.
///
/// Canonical text token: `<backbone>+se<r>+<activation>+<gru>+<attention>` with
///   backbone   resnet18 | resnet34
///   se<r>      se0 (no SE block) | se2 | se4 | se8
///   activation relu | elu | leaky_relu
///   gru        gru0 | gru-time | gru-lead
///   attention  att0 | att-instance | att-element
/// e.g. `resnet18+se0+elu+gru-lead+att-element`.
struct ArchitectureSpec {
  Backbone backbone = Backbone::kResNet18;
  int se_ratio = 0;
  ad::Activation activation = ad::Activation::kRelu;
  GruPlacement gru = GruPlacement::kNone;
  AttentionKind attention = AttentionKind::kNone;

  std::string token() const;
  static ArchitectureSpec parse(std::string_view token);

  /// Throws ConfigError when a field lies outside the grid.
  void validate() const;

  auto operator<=>(const ArchitectureSpec&) const = default;
};

/// Every grid point in token order of enumeration: backbone, SE, activation, GRU, attention.
std::vector<ArchitectureSpec> enumerate_architectures();

/// Residual block count per stage.
std::vector<std::size_t> stage_depths(Backbone backbone);

}  // namespace ecgmv::nn
