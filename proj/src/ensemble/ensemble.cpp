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

#include "ecgmv/ensemble/ensemble.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <thread>

#include "ecgmv/data/dataset.hpp"
#include "ecgmv/errors.hpp"
#include "ecgmv/numeric.hpp"

namespace ecgmv::ensemble {

namespace {

Probabilities mean_of(std::span<const Probabilities> rows) {
  std::vector<std::vector<double>> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.emplace_back(r.begin(), r.end());
  const auto m = stable_mean(v);
  Probabilities out{};
  std::copy(m.begin(), m.end(), out.begin());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<Probabilities> predict_segments(const nn::Model& model, std::span<const ad::Tensor> segments,
                                            std::size_t batch_size) {
  if (batch_size == 0) throw ContractError("batch size must be positive");
  const std::size_t per = data::kLeads * data::kSegmentSamples;
  std::vector<Probabilities> out;
  out.reserve(segments.size());
  for (std::size_t start = 0; start < segments.size(); start += batch_size) {
    const std::size_t b = std::min(batch_size, segments.size() - start);
    ad::Tensor batch({b, data::kLeads, data::kSegmentSamples});
    auto d = batch.data();
    for (std::size_t i = 0; i < b; ++i) {
      const auto& s = segments[start + i];
      if (s.size() != per) throw DimensionError("segment must be 12 x 15000, got " + ad::shape_to_string(s.shape()));
      std::copy(s.data().begin(), s.data().end(), d.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    const auto probs = nn::model_forward(model, batch, nn::Mode::kInfer);
    for (std::size_t i = 0; i < b; ++i) {
      Probabilities p{};
      std::copy_n(probs.data().begin() + static_cast<std::ptrdiff_t>(i * nn::kNumClasses), nn::kNumClasses,
                  p.begin());
      out.push_back(p);
    }
  }
  return out;
}

Prediction predict_record(const nn::Model& model, const data::EcgRecord& rec) {
  const auto segments = data::preprocess_record(rec);
  return {rec.id, mean_of(predict_segments(model, segments))};
}

std::vector<Prediction> predict_records(const nn::Model& model, std::span<const data::EcgRecord> records,
                                        std::size_t threads) {
  std::vector<Prediction> out(records.size());
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, records.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = predict_record(model, records[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < records.size(); i += threads) out[i] = predict_record(model, records[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Prediction fuse(std::span<const Prediction> members) {
  if (members.empty()) throw ContractError("fusion needs at least one member");
  std::vector<Probabilities> rows;
  for (const auto& m : members) {
    if (m.record_id != members.front().record_id) throw ContractError("fusing predictions of different records");
    rows.push_back(m.probs);
  }
  return {members.front().record_id, mean_of(rows)};
}

Prediction ensemble_predict(std::span<const Checkpoint* const> members, const data::EcgRecord& rec) {
  if (members.empty()) throw ContractError("an ensemble needs at least one member");
  for (const auto* m : members) {
    if (m->class_map != members.front()->class_map) {
      throw ConfigError("ensemble members disagree on the class map ('" + m->id + "' vs '" + members.front()->id + "')");
    }
  }
  const auto segments = data::preprocess_record(rec);
  std::vector<Prediction> preds;
  for (const auto* m : members) preds.push_back({rec.id, mean_of(predict_segments(m->model, segments))});
  return fuse(preds);
}

eval::ConfusionMatrix confusion(std::span<const Prediction> predictions, std::span<const std::vector<int>> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("one label list per prediction is required");
  eval::ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) cm.accumulate(predictions[i].diagnosis(), labels[i]);
  return cm;
}

std::vector<EnsembleSpec> enumerate_ensembles(std::size_t n, std::size_t k_min, std::size_t k_max) {
  if (!(1 <= k_min && k_min <= k_max && k_max <= n)) {
    throw ContractError("enumerate_ensembles needs 1 <= k_min <= k_max <= n");
  }
  std::vector<EnsembleSpec> out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      out.push_back({idx});
      // Advance to the next k-combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

std::vector<ScoredEnsemble> score_ensembles(std::span<const CandidatePredictions> candidates,
                                            std::span<const std::vector<int>> labels, std::size_t k_min,
                                            std::size_t k_max) {
  if (labels.empty()) throw ContractError("ensemble search needs a non-empty evaluation set");
  for (const auto& c : candidates) {
    if (c.records.size() != labels.size()) {
      throw DimensionError("candidate '" + c.id + "' has " + std::to_string(c.records.size()) +
                           " predictions for " + std::to_string(labels.size()) + " records");
    }
  }
  const auto specs = enumerate_ensembles(candidates.size(), k_min, k_max);
  std::vector<ScoredEnsemble> out;
  out.reserve(specs.size());
  std::vector<Prediction> members;
  for (const auto& spec : specs) {
    eval::ConfusionMatrix cm;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      members.clear();
      for (auto m : spec.members) members.push_back(candidates[m].records[r]);
      cm.accumulate(fuse(members).diagnosis(), labels[r]);
    }
    ScoredEnsemble s;
    for (auto m : spec.members) s.member_ids.push_back(candidates[m].id);
    s.report = eval::report(cm);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoredEnsemble> rank_ensembles(std::vector<ScoredEnsemble> scored, std::size_t top_n) {
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredEnsemble& a, const ScoredEnsemble& b) {
    if (a.report.macro_f1 != b.report.macro_f1) return a.report.macro_f1 > b.report.macro_f1;
    if (a.member_ids.size() != b.member_ids.size()) return a.member_ids.size() < b.member_ids.size();
    return a.member_ids < b.member_ids;
  });
  if (top_n != 0 && scored.size() > top_n) scored.resize(top_n);
  return scored;
}

std::vector<ScoredEnsemble> ensemble_search(std::span<const CandidatePredictions> candidates,
                                            std::span<const std::vector<int>> labels, std::size_t k_min,
                                            std::size_t k_max, std::size_t top_n) {
  return rank_ensembles(score_ensembles(candidates, labels, k_min, k_max), top_n);
}

std::string search_report_csv(std::span<const ScoredEnsemble> ranked) {
  std::string out = "rank,members,F_AF,F_Block,F_PC,F_ST,F1\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& s = ranked[i];
    std::string members;
    for (std::size_t m = 0; m < s.member_ids.size(); ++m) members += (m ? "+" : "") + s.member_ids[m];
    const auto& r = s.report;
    out += std::to_string(i + 1) + "," + members + "," + fmt(r.f_af) + "," + fmt(r.f_block) + "," + fmt(r.f_pc) +
           "," + fmt(r.f_st) + "," + fmt(r.macro_f1) + "\n";
  }
  return out;
}

}  // namespace ecgmv::ensemble
