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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgmv/augment/augment.hpp"
#include "ecgmv/train/train.hpp"

namespace ecgmv::cli {

struct DataSection {
  std::string dataset;   // dataset cache written by `synth`
  std::string mat_dir;   // or: directory of <id>.mat files ...
  std::string manifest;  // ... labelled by this manifest
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
  std::string subset = "test";  // train | val | test | all
};

struct SynthSection {
  std::vector<int> classes{1, 2, 5};
  std::size_t per_class = 200;
  double min_duration_s = 10.0;
  double max_duration_s = 10.0;
};

struct ModelSection {
  std::string arch = "resnet18+se0+relu+gru0+att0";
  double width = 0.125;
};

struct TrainSection {
  std::size_t epochs = 8;
  std::size_t batch_size = 32;
  double eta0 = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;
};

struct EnsembleSection {
  std::vector<std::string> checkpoints;
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::size_t top = 0;  // 0 keeps every ranked row
};

struct OutputSection {
  std::string path;     // main artifact of the verb
  std::string history;  // train: defaults to <path>.history.csv
  std::string report;   // plot: ensemble-search report to read
};

/// Every setting a verb can read. Serialized as JSON with one object per
/// section; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t gradcheck_seeds = 5;
  DataSection data;
  SynthSection synth;
  ModelSection model;
  TrainSection train;
  augment::AugmentConfig augment;
  EnsembleSection ensemble;
  OutputSection output;

  train::TrainConfig train_config() const;
};

std::string config_to_json(const RunConfig& cfg);
/// Reads JSON text over the defaults. Throws ConfigError on syntax errors,
/// unknown keys and values of the wrong type.
RunConfig config_from_json(const std::string& text, RunConfig base = {});

}  // namespace ecgmv::cli
