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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>

#include "doctest.h"
#include "ecgmv/data/dataset.hpp"
#include "ecgmv/data/manifest.hpp"
#include "ecgmv/data/mat.hpp"
#include "ecgmv/data/synth.hpp"
#include "ecgmv/errors.hpp"
#include "support/mat_writer.hpp"
#include "support/test_util.hpp"

using namespace ecgmv;
using namespace ecgmv::data;
using testing::MatStorage;
using testing::MatWriter;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<double> random_row_major(std::size_t n, std::uint64_t seed) {
  return values(testing::random_tensor({n}, seed, 100.0));
}

// Simple R-peak picker: local maxima above half the record maximum, 250 ms refractory.
std::vector<double> rr_intervals(const EcgRecord& rec, std::size_t lead) {
  const std::size_t n = rec.length();
  const double* x = &rec.signal.data()[lead * n];
  const double top = *std::max_element(x, x + n);
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (x[i] > 0.5 * top && x[i] >= x[i - 1] && x[i] > x[i + 1]) {
      const double t = static_cast<double>(i) / kSamplingRateHz;
      if (peaks.empty() || t - peaks.back() > 0.25) {
        peaks.push_back(t);
      } else if (x[i] > x[static_cast<std::size_t>(peaks.back() * kSamplingRateHz)]) {
        peaks.back() = t;
      }
    }
  }
  std::vector<double> rr;
  for (std::size_t i = 1; i < peaks.size(); ++i) rr.push_back(peaks[i] - peaks[i - 1]);
  return rr;
}

double coefficient_of_variation(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(v.size())) / mean;
}

EcgRecord labelled(std::string id, std::vector<int> labels, std::size_t n = 50) {
  EcgRecord r;
  r.id = std::move(id);
  r.labels = std::move(labels);
  r.signal = Tensor({kLeads, n}, 1.0);
  return r;
}

}  // namespace

TEST_CASE("class codes") {
  CHECK(class_name(1) == "SNR");
  CHECK(class_name(5) == "RBBB");
  CHECK(class_name(9) == "STE");
  for (int c = 1; c <= 9; ++c) CHECK(class_code(class_name(c)) == c);
  CHECK_THROWS_AS(class_name(0), ConfigError);
  CHECK_THROWS_AS(class_code("VT"), ConfigError);
}

TEST_CASE("parse_mat_record") {
  SUBCASE("12x3000 double matrix round-trips bit-exactly") {
    const auto vals = random_row_major(12 * 3000, 1);
    const auto bytes = MatWriter::matrix_file("val", 12, 3000, vals, MatStorage::kDouble);
    const auto rec = parse_mat_record(bytes);
    CHECK(rec.signal.shape() == ad::Shape{12, 3000});
    CHECK(values(rec.signal) == vals);
  }
  SUBCASE("struct with int16 data field") {
    std::vector<double> vals(12 * 100);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<double>(static_cast<int>(i * 37 % 2001) - 1000);
    const auto bytes = MatWriter::struct_file("ECG", 12, 100, vals, MatStorage::kInt16, {"sex", "age"});
    const auto rec = parse_mat_record(bytes);
    CHECK(values(rec.signal) == vals);
  }
  SUBCASE("Nx12 payloads are transposed") {
    const auto vals = random_row_major(12 * 40, 2);
    const auto bytes = MatWriter::matrix_file("val", 40, 12, vals, MatStorage::kDouble);
    const auto rec = parse_mat_record(bytes);
    REQUIRE(rec.signal.shape() == ad::Shape{12, 40});
    for (std::size_t l = 0; l < 12; ++l)
      for (std::size_t t = 0; t < 40; ++t) CHECK(rec.signal.data()[l * 40 + t] == vals[t * 12 + l]);
  }
  SUBCASE("short header") {
    std::vector<std::uint8_t> bytes(100, 0);
    CHECK_THROWS_WITH_AS(parse_mat_record(bytes), doctest::Contains("short header"), ParseError);
  }
  SUBCASE("compressed elements are named") {
    io::ByteWriter w;
    MatWriter::header(w);
    MatWriter::element(w, kMiCompressed, std::vector<std::uint8_t>(24, 7));
    CHECK_THROWS_WITH_AS(parse_mat_record(w.take()), doctest::Contains("miCOMPRESSED"), ParseError);
  }
  SUBCASE("unsupported classes are named") {
    auto bytes = MatWriter::matrix_file("val", 12, 10, random_row_major(120, 3), MatStorage::kDouble);
    bytes[128 + 8 + 8] = 4;  // array flags class byte -> mxCHAR_CLASS
    CHECK_THROWS_WITH_AS(parse_mat_record(bytes), doctest::Contains("mxCHAR_CLASS"), ParseError);
  }
  SUBCASE("truncated payload") {
    auto bytes = MatWriter::matrix_file("val", 12, 10, random_row_major(120, 4), MatStorage::kDouble);
    bytes.resize(bytes.size() - 100);
    CHECK_THROWS_WITH_AS(parse_mat_record(bytes), doctest::Contains("truncated"), ParseError);
  }
  SUBCASE("wrong lead count") {
    const auto bytes = MatWriter::matrix_file("val", 8, 10, random_row_major(80, 5), MatStorage::kDouble);
    CHECK_THROWS_AS(parse_mat_record(bytes), ContractError);
  }
  SUBCASE("big-endian files are rejected") {
    auto bytes = MatWriter::matrix_file("val", 12, 10, random_row_major(120, 6), MatStorage::kDouble);
    std::swap(bytes[126], bytes[127]);
    CHECK_THROWS_AS(parse_mat_record(bytes), ParseError);
  }
  SUBCASE("struct without a data field") {
    auto bytes = MatWriter::struct_file("ECG", 12, 10, random_row_major(120, 7), MatStorage::kDouble);
    // Rename the single field "data" to "date".
    const auto it = std::search(bytes.begin(), bytes.end(), std::begin("data"), std::begin("data") + 4);
    REQUIRE(it != bytes.end());
    *(it + 3) = 'e';
    CHECK_THROWS_WITH_AS(parse_mat_record(bytes), doctest::Contains("no 'data' field"), ParseError);
  }
}

TEST_CASE("load_manifest") {
  const auto m = load_manifest("Recording,First_label,Second_label,Third_label\nA0001,5,,\nA0002,2,7,\r\n");
  CHECK(m.at("A0001") == std::vector<int>{5});
  CHECK(class_name(m.at("A0001")[0]) == "RBBB");
  CHECK(m.at("A0002") == std::vector<int>{2, 7});
  CHECK_THROWS_WITH_AS(load_manifest("Recording,First_label,Second_label,Third_label\nA0001,5,,\nA0002,2,7,\nA0003,0,,\n"),
                       doctest::Contains("row 3"), ParseError);
  CHECK_THROWS_AS(load_manifest("A0001,5,,\n"), ParseError);
  CHECK_THROWS_AS(load_manifest("Recording,First_label\nA0001,x\n"), ParseError);
  CHECK_THROWS_AS(load_manifest("Recording,First_label\nA0001,,\n"), ParseError);
  CHECK_THROWS_AS(load_manifest("Recording,First_label\nA0001,1\nA0001,2\n"), ParseError);
  CHECK(load_manifest(write_manifest(m)) == m);
}

TEST_CASE("synth_record") {
  std::mt19937_64 rng(3);
  const auto r = synth_record(1, 8.0, rng);
  CHECK(r.signal.shape() == ad::Shape{12, 4000});
  CHECK(r.labels == std::vector<int>{1});
  CHECK(r.source == RecordSource::kSynthetic);
  std::mt19937_64 a(11), b(11);
  CHECK(values(synth_record(4, 6.0, a).signal) == values(synth_record(4, 6.0, b).signal));
  CHECK_THROWS_AS(synth_record(1, 5.0, rng), ContractError);
  CHECK_THROWS_AS(synth_record(1, 61.0, rng), ContractError);
  CHECK_THROWS_AS(synth_record(10, 10.0, rng), ContractError);

  SUBCASE("rhythm regularity separates AF from sinus rhythm") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 s1(seed), s2(seed);
      const auto snr = rr_intervals(synth_record(1, 60.0, s1), 1);
      const auto af = rr_intervals(synth_record(2, 60.0, s2), 1);
      REQUIRE(snr.size() > 30);
      REQUIRE(af.size() > 30);
      CHECK(coefficient_of_variation(snr) < 0.02);
      CHECK(coefficient_of_variation(af) > 0.1);
    }
  }
  SUBCASE("every class produces finite signals") {
    for (int c = 1; c <= 9; ++c) {
      std::mt19937_64 s(static_cast<std::uint64_t>(c));
      const auto rec = synth_record(c, 12.0, s);
      for (double v : rec.signal.data()) REQUIRE(std::isfinite(v));
    }
  }
  SUBCASE("dataset ids and class cycling") {
    SynthOptions opts;
    opts.n_records = 7;
    opts.classes = {1, 2, 5};
    opts.seed = 9;
    const auto ds = synth_dataset(opts);
    CHECK(ds.size() == 7);
    CHECK(ds[0].id == "S00001");
    CHECK(ds[6].id == "S00007");
    CHECK(ds[4].labels == std::vector<int>{2});
    CHECK(values(synth_dataset(opts)[3].signal) == values(ds[3].signal));
  }
}

TEST_CASE("preprocess_record") {
  std::mt19937_64 rng(1);
  SUBCASE("6 s record pads to one segment") {
    auto rec = synth_record(1, 6.0, rng);
    const auto segs = preprocess_record(rec);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].shape() == ad::Shape{12, 15000});
    for (std::size_t l = 0; l < 12; ++l)
      for (std::size_t t = 3000; t < 15000; ++t) REQUIRE(segs[0].data()[l * 15000 + t] == 0.0);
  }
  SUBCASE("45 s record gives a full and a half-padded segment") {
    auto rec = synth_record(2, 45.0, rng);
    const auto segs = preprocess_record(rec);
    REQUIRE(segs.size() == 2);
    bool tail_zero = true, head_nonzero = false;
    for (std::size_t l = 0; l < 12; ++l) {
      for (std::size_t t = 7500; t < 15000; ++t) tail_zero = tail_zero && segs[1].data()[l * 15000 + t] == 0.0;
      head_nonzero = head_nonzero || segs[1].data()[l * 15000 + 7499] != 0.0;
    }
    CHECK(tail_zero);
    CHECK(head_nonzero);
  }
  SUBCASE("z-score per lead over the whole record") {
    auto rec = synth_record(1, 30.0, rng);
    const auto seg = preprocess_record(rec).at(0);
    for (std::size_t l = 0; l < 12; ++l) {
      double mean = 0, sq = 0;
      for (std::size_t t = 0; t < 15000; ++t) mean += seg.data()[l * 15000 + t];
      mean /= 15000;
      for (std::size_t t = 0; t < 15000; ++t) sq += std::pow(seg.data()[l * 15000 + t] - mean, 2);
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::sqrt(sq / 15000) == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Idempotent on an already normalised single segment.
    EcgRecord again;
    again.id = "again";
    again.labels = {1};
    again.signal = seg;
    const auto twice = preprocess_record(again).at(0);
    for (std::size_t i = 0; i < seg.size(); ++i) REQUIRE(std::abs(twice.data()[i] - seg.data()[i]) < 1e-9);
  }
  SUBCASE("constant lead becomes zeros") {
    auto rec = synth_record(1, 10.0, rng);
    for (std::size_t t = 0; t < rec.length(); ++t) rec.signal.data()[2 * rec.length() + t] = 3.5;
    const auto seg = preprocess_record(rec).at(0);
    for (std::size_t t = 0; t < 15000; ++t) REQUIRE(seg.data()[2 * 15000 + t] == 0.0);
  }
  SUBCASE("NaN rejects the record by id") {
    auto rec = synth_record(1, 10.0, rng);
    rec.id = "A0042";
    rec.signal.data()[123] = std::numeric_limits<double>::quiet_NaN();
    try {
      preprocess_record(rec);
      FAIL("expected rejection");
    } catch (const RejectedRecordError& e) {
      CHECK(e.record_id() == "A0042");
    }
    const std::vector<EcgRecord> recs{rec, labelled("ok", {1})};
    const auto set = segment_records(recs);
    CHECK(set.rejected == std::vector<std::string>{"A0042"});
    CHECK(set.segments.size() == 1);
  }
}

TEST_CASE("make_batch") {
  std::vector<Segment> segs;
  for (int i = 0; i < 3; ++i) segs.push_back({"r" + std::to_string(i), {i + 1}, Tensor({12, 15000}, double(i))});
  const std::vector<std::size_t> idx{2, 0};
  const auto b = make_batch(segs, idx);
  CHECK(b.batch.shape() == ad::Shape{2, 12, 15000});
  CHECK(b.batch.data()[0] == 2.0);
  CHECK(b.batch.data()[12 * 15000] == 0.0);
  CHECK(b.record_ids == std::vector<std::string>{"r2", "r0"});
  CHECK(b.primary_labels() == std::vector<int>{3, 1});
}

TEST_CASE("split_dataset") {
  SUBCASE("one class of 100 splits 80/10/10") {
    std::vector<EcgRecord> recs;
    for (int i = 0; i < 100; ++i) recs.push_back(labelled("R" + std::to_string(1000 + i), {2}));
    const auto s = split_dataset(recs, {8, 1, 1}, 0);
    CHECK(s.train.size() == 80);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 10);
  }
  SUBCASE("multi-label records always land in test, splits partition the input") {
    std::vector<EcgRecord> recs;
    for (int i = 0; i < 60; ++i) recs.push_back(labelled("R" + std::to_string(100 + i), {1 + i % 3}));
    recs.push_back(labelled("M1", {2, 7}));
    recs.push_back(labelled("M2", {5, 1, 9}));
    recs.push_back(labelled("X1", {9}));  // lone class: warning, train
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = split_dataset(recs, {0.8, 0.1, 0.1}, seed);
      std::multiset<std::string> ids;
      std::set<std::string> test_ids;
      for (const auto* part : {&s.train, &s.val, &s.test})
        for (const auto& r : *part) ids.insert(r.id);
      for (const auto& r : s.test) test_ids.insert(r.id);
      CHECK(ids.size() == recs.size());
      CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == recs.size());
      CHECK(test_ids.count("M1") == 1);
      CHECK(test_ids.count("M2") == 1);
      CHECK(s.warnings.size() == 1);
      CHECK(std::any_of(s.train.begin(), s.train.end(), [](const EcgRecord& r) { return r.id == "X1"; }));
    }
  }
  SUBCASE("deterministic and independent of input order") {
    std::vector<EcgRecord> recs;
    for (int i = 0; i < 40; ++i) recs.push_back(labelled("R" + std::to_string(100 + i), {1 + i % 2}));
    auto ids = [](const std::vector<EcgRecord>& v) {
      std::vector<std::string> out;
      for (const auto& r : v) out.push_back(r.id);
      return out;
    };
    const auto a = split_dataset(recs, {8, 1, 1}, 5);
    std::reverse(recs.begin(), recs.end());
    const auto b = split_dataset(recs, {8, 1, 1}, 5);
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(a.val) == ids(b.val));
    CHECK(ids(a.test) == ids(b.test));
    CHECK_THROWS_AS(split_dataset(recs, {1, 0, 1}, 0), ConfigError);
  }
}

TEST_CASE("dataset cache") {
  SynthOptions opts;
  opts.n_records = 4;
  opts.min_duration_s = 6;
  opts.max_duration_s = 9;
  auto recs = synth_dataset(opts);
  recs[1].labels = {2, 7};
  for (auto& r : recs)
    for (auto& v : r.signal.data()) v = static_cast<float>(v);
  const auto bytes = encode_dataset(recs);
  const auto back = decode_dataset(bytes);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].id == recs[i].id);
    CHECK(back[i].labels == recs[i].labels);
    CHECK(values(back[i].signal) == values(recs[i].signal));
  }
  const auto path = std::filesystem::temp_directory_path() / "ecgmv_test_cache.ecgds";
  save_dataset(path, recs);
  CHECK(load_dataset(path).size() == 4);
  std::filesystem::remove(path);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_dataset(bad), doctest::Contains("bad magic"), LoadError);
  auto cut = bytes;
  cut.resize(cut.size() - 10);
  CHECK_THROWS_AS(decode_dataset(cut), LoadError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/cache.ecgds"), LoadError);
}
