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

#include "ecgmv/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ecgmv/errors.hpp"
#include "ecgmv/io/bytes.hpp"
#include "ecgmv/numeric.hpp"

namespace ecgmv::data {

namespace {

constexpr std::string_view kCacheMagic = "ECGDS1";

[[noreturn]] void cache_fail(const std::string& what) { throw LoadError("dataset cache: " + what); }

}  // namespace

std::vector<Tensor> preprocess_record(const EcgRecord& rec) {
  if (!rec.signal.defined() || rec.signal.rank() != 2 || rec.signal.dim(0) != kLeads) {
    throw ContractError("record " + rec.id + ": signal must be 12 x N");
  }
  const std::size_t n = rec.signal.dim(1);
  const auto x = rec.signal.data();
  for (double v : x) {
    if (!std::isfinite(v)) throw RejectedRecordError(rec.id, std::isnan(v) ? "signal contains NaN" : "signal contains infinity");
  }
  std::vector<double> normalized(x.size());
  for (std::size_t l = 0; l < kLeads; ++l) {
    const auto row = x.subspan(l * n, n);
    const double mean = exact_sum(row) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t t = 0; t < n; ++t) sq[t] = (row[t] - mean) * (row[t] - mean);
    const double sd = std::max(std::sqrt(exact_sum(sq) / static_cast<double>(n)), kZScoreEpsilon);
    for (std::size_t t = 0; t < n; ++t) normalized[l * n + t] = (row[t] - mean) / sd;
  }
  const std::size_t count = (n + kSegmentSamples - 1) / kSegmentSamples;
  std::vector<Tensor> segments;
  segments.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Tensor seg({kLeads, kSegmentSamples}, 0.0);
    auto d = seg.data();
    const std::size_t start = s * kSegmentSamples;
    const std::size_t len = std::min(kSegmentSamples, n - start);
    for (std::size_t l = 0; l < kLeads; ++l) {
      std::copy_n(normalized.begin() + static_cast<std::ptrdiff_t>(l * n + start), len,
                  d.begin() + static_cast<std::ptrdiff_t>(l * kSegmentSamples));
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

SegmentSet segment_records(std::span<const EcgRecord> records) {
  SegmentSet out;
  for (const auto& rec : records) {
    try {
      for (auto& seg : preprocess_record(rec)) out.segments.push_back({rec.id, rec.labels, std::move(seg)});
    } catch (const RejectedRecordError& e) {
      out.rejected.push_back(e.record_id());
    }
  }
  return out;
}

std::vector<int> SegmentBatch::primary_labels() const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.at(0));
  return out;
}

SegmentBatch make_batch(std::span<const Segment> segments, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractError("make_batch: empty index list");
  const std::size_t per = kLeads * kSegmentSamples;
  SegmentBatch out;
  out.batch = Tensor({indices.size(), kLeads, kSegmentSamples});
  auto d = out.batch.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& seg = segments[indices[b]];
    if (seg.signal.size() != per) throw DimensionError("make_batch: segment is not 12 x 15000");
    std::copy(seg.signal.data().begin(), seg.signal.data().end(), d.begin() + static_cast<std::ptrdiff_t>(b * per));
    out.record_ids.push_back(seg.record_id);
    out.labels.push_back(seg.labels);
  }
  return out;
}

DatasetSplit split_dataset(std::vector<EcgRecord> records, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("split ratios must be positive");
  }
  const double total = ratios[0] + ratios[1] + ratios[2];
  const double val_share = ratios[1] / total, test_share = ratios[2] / total;

  std::sort(records.begin(), records.end(), [](const EcgRecord& a, const EcgRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].id == records[i - 1].id) throw ContractError("split_dataset: duplicate record id " + records[i].id);
  }

  DatasetSplit out;
  std::vector<EcgRecord> single;
  for (auto& r : records) {
    if (r.labels.empty()) throw ContractError("split_dataset: record " + r.id + " has no labels");
    (r.labels.size() > 1 ? out.test : single).push_back(std::move(r));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(single.begin(), single.end(), rng);

  std::map<int, std::vector<EcgRecord>> by_label;
  for (auto& r : single) by_label[r.primary_label()].push_back(std::move(r));
  for (auto& [label, group] : by_label) {
    const std::size_t n = group.size();
    if (n < 3) {
      out.warnings.push_back("class " + std::string(class_name(label)) + " has only " + std::to_string(n) +
                             " single-label records; all assigned to train");
      for (auto& r : group) out.train.push_back(std::move(r));
      continue;
    }
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_share + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_share + 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = i < n_val ? out.val : i < n_val + n_test ? out.test : out.train;
      dst.push_back(std::move(group[i]));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(std::span<const EcgRecord> records) {
  io::ByteWriter w;
  w.text(kCacheMagic);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    r.validate();
    w.u32(static_cast<std::uint32_t>(r.id.size()));
    w.text(r.id);
    w.u8(static_cast<std::uint8_t>(r.labels.size()));
    for (int c : r.labels) w.u8(static_cast<std::uint8_t>(c));
    w.u32(static_cast<std::uint32_t>(r.length()));
    for (double v : r.signal.data()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

std::vector<EcgRecord> decode_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, cache_fail);
  if (bytes.size() < kCacheMagic.size() || r.text(kCacheMagic.size()) != kCacheMagic) cache_fail("bad magic");
  const std::uint32_t count = r.u32();
  std::vector<EcgRecord> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    EcgRecord rec;
    rec.id = r.text(r.u32());
    const std::uint8_t n_labels = r.u8();
    for (std::uint8_t k = 0; k < n_labels; ++k) rec.labels.push_back(r.u8());
    const std::uint32_t n = r.u32();
    if (n == 0) cache_fail("record " + rec.id + " has zero samples");
    if (r.remaining() / 4 / kLeads < n) cache_fail("truncated samples for record " + rec.id);
    rec.signal = Tensor({kLeads, n});
    for (auto& v : rec.signal.data()) v = r.f32();
    try {
      rec.validate();
    } catch (const ContractError& e) {
      cache_fail(e.what());
    }
    out.push_back(std::move(rec));
  }
  if (!r.at_end()) cache_fail("trailing bytes after last record");
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const EcgRecord> records) {
  io::write_file(path, encode_dataset(records));
}

std::vector<EcgRecord> load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

}  // namespace ecgmv::data
