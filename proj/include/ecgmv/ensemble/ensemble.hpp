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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecgmv/data/record.hpp"
#include "ecgmv/ensemble/checkpoint.hpp"
#include "ecgmv/eval/metrics.hpp"
#include "ecgmv/nn/model.hpp"

namespace ecgmv::ensemble {

using Probabilities = std::array<double, nn::kNumClasses>;

struct Prediction {
  std::string record_id;
  Probabilities probs{};

  /// Class code (1..9) of the largest probability.
  int diagnosis() const { return eval::argmax_class(probs); }
};

/// Infer-mode probabilities for each [12, 15000] segment.
std::vector<Probabilities> predict_segments(const nn::Model& model, std::span<const ad::Tensor> segments,
                                            std::size_t batch_size = 8);

/// Mean over the record's segments. Preprocessing rejections propagate.
Prediction predict_record(const nn::Model& model, const data::EcgRecord& rec);

/// predict_record for every record, spread over `threads` workers.
std::vector<Prediction> predict_records(const nn::Model& model, std::span<const data::EcgRecord> records,
                                        std::size_t threads = 1);

/// Equal-weight mean of predictions for the same record. Independent of the
/// order of `members`; k copies of one prediction return it unchanged.
Prediction fuse(std::span<const Prediction> members);

/// Fusion of every member's predict_record. Members must share a class map.
Prediction ensemble_predict(std::span<const Checkpoint* const> members, const data::EcgRecord& rec);

eval::ConfusionMatrix confusion(std::span<const Prediction> predictions, std::span<const std::vector<int>> labels);

/// Indices into the candidate list, ascending.
struct EnsembleSpec {
  std::vector<std::size_t> members;
  auto operator<=>(const EnsembleSpec&) const = default;
};

/// All subsets of {0..n-1} with k_min..k_max members, by size and then
/// lexicographically.
std::vector<EnsembleSpec> enumerate_ensembles(std::size_t n, std::size_t k_min, std::size_t k_max);

struct CandidatePredictions {
  std::string id;
  std::vector<Prediction> records;  // aligned with the evaluation set
};

struct ScoredEnsemble {
  std::vector<std::string> member_ids;
  eval::EvalReport report;
};

/// Scores every enumerated ensemble, in enumeration order.
std::vector<ScoredEnsemble> score_ensembles(std::span<const CandidatePredictions> candidates,
                                            std::span<const std::vector<int>> labels, std::size_t k_min,
                                            std::size_t k_max);

/// Sorts by macro F1 (descending), then fewer members, then member ids, and
/// keeps the first top_n (all when top_n is 0).
std::vector<ScoredEnsemble> rank_ensembles(std::vector<ScoredEnsemble> scored, std::size_t top_n);

std::vector<ScoredEnsemble> ensemble_search(std::span<const CandidatePredictions> candidates,
                                            std::span<const std::vector<int>> labels, std::size_t k_min,
                                            std::size_t k_max, std::size_t top_n);

/// rank,members,F_AF,F_Block,F_PC,F_ST,F1 with members joined by '+'.
std::string search_report_csv(std::span<const ScoredEnsemble> ranked);

}  // namespace ecgmv::ensemble
