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

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 2 5 8`.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ecgmv/augment/augment.hpp"
#include "ecgmv/autodiff/ops.hpp"
#include "ecgmv/data/dataset.hpp"
#include "ecgmv/data/mat.hpp"
#include "ecgmv/data/synth.hpp"
#include "ecgmv/ensemble/checkpoint.hpp"
#include "ecgmv/ensemble/ensemble.hpp"
#include "ecgmv/errors.hpp"
#include "ecgmv/eval/metrics.hpp"
#include "ecgmv/nn/gradient_suite.hpp"
#include "ecgmv/nn/layers.hpp"
#include "ecgmv/nn/model.hpp"
#include "ecgmv/train/train.hpp"
#include "support/mat_writer.hpp"

using namespace ecgmv;
using ad::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(std::string s) { notes_.push_back(std::move(s)); }

  bool passed() const { return failed_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    if (!passed()) {
      s += (s.empty() ? "" : "; ") + std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed:";
      for (const auto& f : failures_) s += " [" + f + "]";
    } else {
      s += (s.empty() ? "" : "; ") + std::to_string(total_) + " checks";
    }
    return s;
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Tensor random_tensor(ad::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = n(rng);
  return t;
}

nn::Model model(const std::string& token, std::uint64_t seed, double width) {
  nn::ModelOptions opts;
  opts.width_multiplier = width;
  return nn::build_model(nn::ArchitectureSpec::parse(token), seed, opts);
}

data::EcgRecord synth(int code, double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto rec = data::synth_record(code, seconds, rng);
  rec.id = "A" + std::to_string(seed);
  return rec;
}

bool on_simplex(std::span<const double> p) {
  double s = 0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    s += v;
  }
  return std::abs(s - 1.0) <= 1e-9;
}

// ---------------------------------------------------------------------------

void gradient_suite(Checks& c) {
  const auto t0 = Clock::now();
  const auto results = nn::run_gradient_suite(5);
  const double elapsed = seconds_since(t0);
  double worst_primitive = 0, worst_model = 0;
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name);
    const bool full_model = r.name.rfind("model:", 0) == 0;
    c.expect(r.max_error < (full_model ? 1e-3 : 1e-4), r.name + " error " + fmt("%.2e", r.max_error));
    (full_model ? worst_model : worst_primitive) = std::max(full_model ? worst_model : worst_primitive, r.max_error);
  }
  for (const char* required : {"residual_block", "gru_cell_step", "bigru_time_axis", "bigru_lead_axis",
                               "attention_instance", "attention_element", "se_block", "cross_entropy"}) {
    c.expect(names.contains(required), std::string("suite covers ") + required);
  }
  c.expect(elapsed < 120.0, "runtime under two minutes");
  c.note(std::to_string(results.size()) + " cases x 5 seeds");
  c.note("worst primitive/block " + fmt("%.2e", worst_primitive) + ", worst full model " + fmt("%.2e", worst_model));
  c.note(fmt("%.1f s", elapsed));
}

void closed_forms(Checks& c) {
  {
    const auto p = nn::GruParams::zeros(5, 7);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto x = random_tensor({5}, s), h = random_tensor({7}, s + 100);
      const auto out = nn::gru_cell_step(x, h, p);
      bool exact = true;
      for (std::size_t i = 0; i < 7; ++i) exact = exact && out.data()[i] == 0.5 * h.data()[i];
      c.expect(exact, "zero GRU halves h_prev");
    }
  }
  for (auto mode : {nn::AttentionMode::kInstance, nn::AttentionMode::kElement}) {
    const auto p = nn::AttentionParams::zeros(6, mode);
    const std::size_t L = 8;
    const auto x = random_tensor({L, 6}, 3);
    const auto z = nn::attention_pool(x, p);
    bool exact = true;
    for (std::size_t ch = 0; ch < 6; ++ch) {
      double acc = 0;
      for (std::size_t i = 0; i < L; ++i) acc += x.data()[i * 6 + ch] / static_cast<double>(L);
      exact = exact && z.data()[ch] == acc;
    }
    c.expect(exact, "zero attention gives the positional mean");
  }
  {
    const auto p = nn::SeParams::zeros(8, 2);
    const auto x = random_tensor({8, 50}, 9);
    const auto y = nn::se_block(x, p);
    bool exact = true;
    for (std::size_t i = 0; i < x.size(); ++i) exact = exact && y.data()[i] == 0.5 * x.data()[i];
    c.expect(exact, "zero SE scales by 0.5");
  }
  {
    const auto s = ad::softmax(Tensor({2, 9}, 0.0), 1);
    bool uniform = true;
    for (double v : s.data()) uniform = uniform && v == 1.0 / 9.0;
    c.expect(uniform, "softmax of zeros is uniform");
  }
  for (double eta0 : {1e-3, 3e-3, 1e-2}) {
    for (std::size_t total : {2u, 100u, 1000u}) {
      c.expect(train::cosine_lr(0, total, eta0) == eta0, "cosine_lr(0) == eta0");
      c.expect(train::cosine_lr(total, total, eta0) == 0.0, "cosine_lr(T) == 0");
      c.expect(train::cosine_lr(total / 2, total, eta0) == eta0 / 2, "cosine_lr(T/2) == eta0/2");
    }
  }
  {
    std::vector<Tensor> params{random_tensor({4, 3}, 1).set_requires_grad(true),
                               random_tensor({5}, 2).set_requires_grad(true)};
    std::vector<std::vector<double>> before;
    for (const auto& p : params) before.emplace_back(p.data().begin(), p.data().end());
    for (auto& p : params) p.mutable_grad();
    train::AdamState st;
    for (int i = 0; i < 4; ++i) train::adam_step(params, st, 0.01);
    bool same = st.t == 4;
    for (std::size_t i = 0; i < params.size(); ++i) {
      same = same && std::equal(before[i].begin(), before[i].end(), params[i].data().begin());
    }
    c.expect(same, "Adam zero gradient is a no-op");
  }
}

void architecture_grid(Checks& c) {
  const auto t0 = Clock::now();
  const auto specs = nn::enumerate_architectures();
  std::set<std::string> tokens;
  for (const auto& s : specs) tokens.insert(s.token());
  c.expect(specs.size() == 216, "216 specs, got " + std::to_string(specs.size()));
  c.expect(tokens.size() == specs.size(), "specs are distinct");
  const auto input = random_tensor({1, 12, nn::kSegmentLength}, 5);
  const std::vector<int> target{1};
  std::size_t ok = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    try {
      nn::ModelOptions opts;
      opts.width_multiplier = 0.25;
      nn::Model m(spec, i, opts);
      const auto probs = nn::model_forward(m, input, nn::Mode::kInfer);
      const bool simplex = probs.shape() == ad::Shape{1, 9} && on_simplex(probs.data());
      ad::Tape tape;
      bool finite = true, nonzero = false;
      {
        ad::TapeScope scope(tape);
        std::mt19937_64 rng(i);
        const auto loss = ad::cross_entropy(nn::model_forward(m, input, nn::Mode::kTrain, &rng), target);
        tape.backward(loss);
        finite = std::isfinite(loss.item());
      }
      for (const auto& p : m.parameters()) {
        if (!p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad()) {
          finite = finite && std::isfinite(g);
          nonzero = nonzero || g != 0.0;
        }
      }
      c.expect(simplex, spec.token() + " emits a 9-simplex");
      c.expect(finite && nonzero, spec.token() + " backward is finite");
      if (simplex && finite && nonzero) ++ok;
    } catch (const std::exception& e) {
      c.expect(false, spec.token() + ": " + e.what());
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 600.0, "grid under ten minutes");
  c.note(std::to_string(ok) + "/" + std::to_string(specs.size()) + " specs build, forward and backward");
  c.note(fmt("%.1f s at width 0.25", elapsed));
}

void augmentation(Checks& c) {
  using namespace augment;
  const auto signal = random_tensor({12, 15000}, 21);
  auto same = [](const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
  };
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng r(s);
    c.expect(jitter(signal, 0.03, r).shape() == signal.shape(), "jitter keeps shape");
    c.expect(scale(signal, {0.8, 1.2}, r).shape() == signal.shape(), "scale keeps shape");
    c.expect(magnitude_warp(signal, 4, 0.2, r).shape() == signal.shape(), "magwarp keeps shape");
    c.expect(time_warp(signal, 4, 0.2, r).shape() == signal.shape(), "timewarp keeps shape");
    c.expect(permute(signal, 5, r).shape() == signal.shape(), "permute keeps shape");
    c.expect(random_resample(signal, 0.8, r).shape() == signal.shape(), "resample keeps shape");
    Rng identity(s);
    c.expect(same(jitter(signal, 0.0, identity), signal), "jitter sigma 0 is identity");
    c.expect(same(scale(signal, {1.0, 1.0}, identity), signal), "scale factor 1 is identity");
    c.expect(same(magnitude_warp(signal, 4, 0.0, identity), signal), "magwarp sigma 0 is identity");
    c.expect(same(time_warp(signal, 4, 0.0, identity), signal), "timewarp sigma 0 is identity");
    c.expect(same(permute(signal, 1, identity), signal), "one segment is identity");
    std::vector<double> grid(15000);
    std::iota(grid.begin(), grid.end(), 0.0);
    const auto back = resample_at(signal, grid);
    double worst = 0;
    for (std::size_t i = 0; i < signal.size(); ++i) worst = std::max(worst, std::abs(back.data()[i] - signal.data()[i]));
    c.expect(worst <= 1e-12, "resampling on the original grid is identity");
    PipelineDraw empty;
    c.expect(same(apply_pipeline(signal, empty, identity), signal), "empty pipeline is identity");
    AugmentConfig cfg;
    Rng dr(s);
    const auto draw = draw_pipeline(cfg, dr);
    const auto batch = random_tensor({3, 12, 15000}, s);
    c.expect(apply_batch(batch, draw).shape() == batch.shape(), "pipeline keeps batch shape");
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(s);
    const auto p = permute(signal, 2 + static_cast<int>(s % 4), r);
    bool multiset = true;
    for (std::size_t l = 0; l < 12; ++l) {
      std::vector<double> a(signal.data().begin() + l * 15000, signal.data().begin() + (l + 1) * 15000);
      std::vector<double> b(p.data().begin() + l * 15000, p.data().begin() + (l + 1) * 15000);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      multiset = multiset && a == b;
    }
    c.expect(multiset, "permute preserves each lead's multiset");
  }
  std::size_t warp_ok = 0;
  for (std::uint64_t s = 0; s < 150; ++s) {
    Rng r(s);
    const auto map = time_warp_map(15000, 4, 0.2, r);
    bool mono = map.size() == 15000 && map.front() == 0.0 && map.back() == 14999.0;
    for (std::size_t i = 1; mono && i < map.size(); ++i) mono = map[i] > map[i - 1];
    if (mono) ++warp_ok;
  }
  c.expect(warp_ok == 150, "time-warp map monotone and pinned for 150 seeds");
  double worst_var = 0;
  for (double sigma : {0.01, 0.05, 0.2}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      Rng r(s);
      const Tensor zero({1, 15000}, 0.0);
      const auto j = jitter(zero, sigma, r);
      double mean = 0;
      for (double v : j.data()) mean += v;
      mean /= 15000.0;
      double var = 0;
      for (double v : j.data()) var += (v - mean) * (v - mean);
      var /= 15000.0;
      const double rel = std::abs(var / (sigma * sigma) - 1.0);
      worst_var = std::max(worst_var, rel);
      c.expect(rel <= 0.10, "jitter variance within 10% at sigma " + fmt("%g", sigma));
    }
  }
  std::array<std::size_t, 7> counts{};
  AugmentConfig cfg;
  Rng dr(2024);
  for (int i = 0; i < 10000; ++i) ++counts[draw_pipeline(cfg, dr).ops.size()];
  double worst_freq = 0;
  for (std::size_t k = 0; k < 7; ++k) {
    const double dev = std::abs(static_cast<double>(counts[k]) / 10000.0 - 1.0 / 7.0);
    worst_freq = std::max(worst_freq, dev);
    c.expect(dev <= 0.02, "pipeline size " + std::to_string(k) + " frequency");
  }
  c.note("worst jitter variance error " + fmt("%.3f", worst_var) + ", worst size-frequency deviation " +
         fmt("%.4f", worst_freq));
}

void ensemble_combinatorics(Checks& c) {
  const auto specs = ensemble::enumerate_ensembles(10, 2, 10);
  c.expect(specs.size() == 1013, "1013 ensembles for n=10, k=2..10");
  std::size_t pairs = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    for (std::size_t lo = 1; lo <= n; ++lo) {
      for (std::size_t hi = lo; hi <= n; ++hi) {
        std::set<std::vector<std::size_t>> oracle;
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
          const auto k = static_cast<std::size_t>(std::popcount(mask));
          if (k < lo || k > hi) continue;
          std::vector<std::size_t> m;
          for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u) m.push_back(i);
          oracle.insert(m);
        }
        std::set<std::vector<std::size_t>> got;
        const auto list = ensemble::enumerate_ensembles(n, lo, hi);
        for (const auto& s : list) got.insert(s.members);
        c.expect(list.size() == got.size() && got == oracle,
                 "n=" + std::to_string(n) + " k=" + std::to_string(lo) + ".." + std::to_string(hi));
        ++pairs;
      }
    }
  }
  c.note(std::to_string(specs.size()) + " ensembles for n=10; oracle agrees on " + std::to_string(pairs) +
         " (n, k_min, k_max) triples");
}

void fusion(Checks& c) {
  const std::vector<std::string> tokens{"resnet18+se0+relu+gru0+att0", "resnet18+se2+elu+gru-time+att-instance",
                                        "resnet18+se4+leaky_relu+gru-lead+att-element"};
  std::vector<ensemble::Checkpoint> cks;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto ck = ensemble::decode_checkpoint(ensemble::encode_checkpoint(model(tokens[i], 40 + i, 0.125)));
    ck.id = "m" + std::to_string(i);
    cks.push_back(std::move(ck));
  }
  std::size_t records = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto rec = synth(1 + static_cast<int>(s % 3) * 2, 8.0 + 7.0 * static_cast<double>(s), 300 + s);
    ++records;
    std::vector<ensemble::Prediction> singles;
    for (const auto& ck : cks) singles.push_back(ensemble::predict_record(ck.model, rec));
    for (std::size_t m = 0; m < cks.size(); ++m) {
      const std::vector<const ensemble::Checkpoint*> one{&cks[m]};
      c.expect(ensemble::ensemble_predict(one, rec).probs == singles[m].probs, "ensemble of one is bit-exact");
      for (std::size_t k = 2; k <= 5; ++k) {
        const std::vector<const ensemble::Checkpoint*> copies(k, &cks[m]);
        c.expect(ensemble::ensemble_predict(copies, rec).probs == singles[m].probs,
                 std::to_string(k) + " copies are bit-exact");
      }
    }
    std::vector<std::size_t> order{0, 1, 2};
    const std::vector<const ensemble::Checkpoint*> base{&cks[0], &cks[1], &cks[2]};
    const auto fused = ensemble::ensemble_predict(base, rec);
    c.expect(on_simplex(fused.probs), "fusion output on the simplex");
    do {
      const std::vector<const ensemble::Checkpoint*> perm{&cks[order[0]], &cks[order[1]], &cks[order[2]]};
      c.expect(ensemble::ensemble_predict(perm, rec).probs == fused.probs, "member order does not matter");
    } while (std::next_permutation(order.begin(), order.end()));
  }
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> g(0.3, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ensemble::Prediction> members(1 + trial % 10);
    for (auto& m : members) {
      m.record_id = "r";
      double s = 0;
      for (auto& p : m.probs) s += (p = g(rng) + 1e-300);
      for (auto& p : m.probs) p /= s;
    }
    const auto f = ensemble::fuse(members);
    c.expect(on_simplex(f.probs), "random fusion on the simplex");
    std::shuffle(members.begin(), members.end(), rng);
    c.expect(ensemble::fuse(members).probs == f.probs, "random fusion order invariant");
  }
  c.note("3 real models on " + std::to_string(records) + " records plus 500 random member sets");
}

void segment_average(Checks& c) {
  const std::vector<std::string> tokens{"resnet18+se0+relu+gru0+att0", "resnet34+se2+elu+gru-lead+att-instance"};
  for (std::size_t m = 0; m < tokens.size(); ++m) {
    const auto net = model(tokens[m], 7 + m, 0.125);
    for (int code : {1, 2, 5}) {
      const auto half = synth(code, 30.0, 50 + static_cast<std::uint64_t>(code));
      data::EcgRecord full = half;
      full.signal = Tensor({12, 30000});
      for (std::size_t l = 0; l < 12; ++l) {
        for (std::size_t t = 0; t < 30000; ++t) full.signal.data()[l * 30000 + t] = half.signal.data()[l * 15000 + t % 15000];
      }
      c.expect(ensemble::predict_record(net, full).probs == ensemble::predict_record(net, half).probs,
               "60 s of identical halves equals one half");
    }
  }
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto rec = synth(2, 6.0, 70 + s);
    const auto segs = data::preprocess_record(rec);
    c.expect(segs.size() == 1, "6 s record is one segment");
    c.expect(segs[0].shape() == ad::Shape{12, 15000}, "segment is 12 x 15000");
    bool zeros = true, content = true;
    for (std::size_t l = 0; l < 12; ++l) {
      const auto lead = segs[0].data().subspan(l * 15000, 15000);
      zeros = zeros && std::all_of(lead.begin() + 3000, lead.end(), [](double v) { return v == 0.0; });
      content = content && std::any_of(lead.begin() + 2900, lead.begin() + 3000, [](double v) { return v != 0.0; });
    }
    c.expect(zeros, "12000 trailing zeros on every lead");
    c.expect(content, "signal fills the first 3000 samples");
  }
  c.note("2 architectures x 3 classes for the halves identity; 5 padded 6 s records");
}

void evaluation(Checks& c) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> code(1, 9), nlab(1, 3), count(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = count(rng);
    eval::ConfusionMatrix cm;
    std::vector<std::pair<int, std::vector<int>>> raw;
    for (int i = 0; i < n; ++i) {
      std::vector<int> labels;
      const int k = nlab(rng);
      while (static_cast<int>(labels.size()) < k) {
        const int l = code(rng);
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
      }
      const int pred = code(rng);
      cm.accumulate(pred, labels);
      raw.emplace_back(pred, labels);
    }
    const auto f1 = eval::f1_per_class(cm);
    bool agree = true;
    for (int k = 1; k <= 9; ++k) {
      int tp = 0, fp = 0, fn = 0;
      for (const auto& [pred, labels] : raw) {
        const bool hit = std::find(labels.begin(), labels.end(), pred) != labels.end();
        const int truth = hit ? pred : labels.front();
        if (pred == k && truth == k) ++tp;
        if (pred == k && truth != k) ++fp;
        if (pred != k && truth == k) ++fn;
      }
      const double expect = 2 * tp + fp + fn == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
      agree = agree && std::abs(f1[static_cast<std::size_t>(k - 1)] - expect) <= 1e-12;
    }
    c.expect(agree, "recount oracle trial " + std::to_string(trial));
    const auto r = eval::report(cm);
    const auto& p = r.per_class;
    c.expect(std::abs(r.f_af - p[1]) <= 1e-15, "F_AF is AF");
    c.expect(std::abs(r.f_block - (p[2] + p[3] + p[4]) / 3.0) <= 1e-15, "F_Block is I-AVB, LBBB, RBBB");
    c.expect(std::abs(r.f_pc - (p[5] + p[6]) / 2.0) <= 1e-15, "F_PC is PAC, PVC");
    c.expect(std::abs(r.f_st - (p[7] + p[8]) / 2.0) <= 1e-15, "F_ST is STD, STE");
    double mean = 0;
    for (double v : p) mean += v / 9.0;
    c.expect(std::abs(r.macro_f1 - mean) <= 1e-12, "macro F1 is the 9-class mean");
  }
  {
    eval::ConfusionMatrix cm;
    const std::vector<int> af_pvc{2, 7};
    cm.accumulate(2, af_pvc);
    c.expect(cm.at(2, 2) == 1, "prediction equal to the first label is correct");
    cm.accumulate(7, af_pvc);
    c.expect(cm.at(7, 7) == 1, "prediction equal to the second label is correct");
    cm.accumulate(8, af_pvc);
    c.expect(cm.at(2, 8) == 1, "wrong prediction charges the first label");
    c.expect(cm.total() == 3, "one count per record");
  }
  {
    eval::ConfusionMatrix cm;
    for (int k = 1; k <= 9; ++k) {
      for (int rep = 0; rep < 3; ++rep) cm.accumulate(k, std::vector<int>{k});
    }
    const auto r = eval::report(cm);
    c.expect(r.macro_f1 == 1.0 && r.f_af == 1.0 && r.f_block == 1.0 && r.f_pc == 1.0 && r.f_st == 1.0,
             "perfect predictions give 1.0");
  }
  c.note("200 randomized instances against a recount oracle");
}

struct TrainedModel {
  std::string token;
  double seconds;
  double f1;
  std::vector<std::uint8_t> checkpoint;
  std::string history;
  std::vector<ensemble::Prediction> test_preds;
};

void end_to_end(Checks& c) {
  data::SynthOptions opts;  // 600 records of SNR, AF and RBBB, 10 s each
  opts.seed = 2018;
  const auto split = data::split_dataset(data::synth_dataset(opts), {0.8, 0.1, 0.1}, 2018);
  std::vector<std::vector<int>> test_labels;
  for (const auto& r : split.test) test_labels.push_back(r.labels);

  train::TrainConfig cfg;
  cfg.epochs = 16;
  cfg.batch_size = 32;
  cfg.eta0 = 3e-3;
  cfg.width_multiplier = 0.125;
  cfg.threads = 1;

  auto train_one = [&](const std::string& token, std::uint64_t seed) {
    cfg.seed = seed;
    const auto t0 = Clock::now();
    auto result = train::train_model(nn::ArchitectureSpec::parse(token), split.train, split.val, cfg);
    TrainedModel tm{token, seconds_since(t0), 0.0, ensemble::encode_checkpoint(result.model),
                    train::history_csv(result.history), ensemble::predict_records(result.model, split.test, 1)};
    tm.f1 = eval::report(ensemble::confusion(tm.test_preds, test_labels)).present_macro_f1;
    return tm;
  };

  const std::vector<std::string> tokens{"resnet18+se0+relu+gru0+att0", "resnet18+se4+elu+gru-time+att-instance",
                                        "resnet34+se2+leaky_relu+gru-lead+att-element"};
  std::vector<TrainedModel> trained;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    trained.push_back(train_one(tokens[i], 100 + i));
    const auto& t = trained.back();
    std::printf("  criterion 9: %s F1 %.4f in %.0f s\n", t.token.c_str(), t.f1, t.seconds);
    std::fflush(stdout);
    c.expect(t.seconds <= 600.0, t.token + " trains within ten minutes");
    c.expect(t.f1 >= 0.85, t.token + " F1 " + fmt("%.4f", t.f1));
  }
  std::vector<ensemble::Prediction> fused;
  for (std::size_t r = 0; r < split.test.size(); ++r) {
    std::vector<ensemble::Prediction> members;
    for (const auto& t : trained) members.push_back(t.test_preds[r]);
    fused.push_back(ensemble::fuse(members));
  }
  const double ensemble_f1 = eval::report(ensemble::confusion(fused, test_labels)).present_macro_f1;

  const auto again = train_one(tokens[0], 100);
  c.expect(again.checkpoint == trained[0].checkpoint, "retraining reproduces the checkpoint bytes");
  c.expect(again.history == trained[0].history, "retraining reproduces the history");

  std::string per_model;
  for (const auto& t : trained) per_model += (per_model.empty() ? "" : ", ") + fmt("%.4f", t.f1);
  c.note("train/val/test " + std::to_string(split.train.size()) + "/" + std::to_string(split.val.size()) + "/" +
         std::to_string(split.test.size()));
  c.note("model F1 " + per_model + " (macro over the 3 present classes)");
  c.note("3-model ensemble F1 " + fmt("%.4f", ensemble_f1) + " (reported only)");
  c.note("seed rerun identical");
}

void persistence(Checks& c) {
  namespace fs = std::filesystem;
  using testing::MatStorage;
  using testing::MatWriter;
  const auto dir = fs::temp_directory_path() / "ecgmv_acceptance";
  fs::create_directories(dir);

  for (const char* token : {"resnet18+se2+relu+gru-time+att-element", "resnet34+se2+elu+gru-lead+att0"}) {
    const auto net = model(token, 3, 0.125);
    const auto path = dir / "model.ckpt";
    ensemble::save_checkpoint(net, path);
    const auto loaded = ensemble::load_checkpoint(path);
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto rec = synth(5, 12.0 + 10.0 * static_cast<double>(s), 90 + s);
      c.expect(ensemble::predict_record(loaded.model, rec).probs == ensemble::predict_record(net, rec).probs,
               std::string(token) + " save/load/predict bit-identical");
    }
    const auto bytes = io::read_file(path);
    c.expect(ensemble::encode_checkpoint(loaded.model) == bytes, "re-saving is byte-identical");
  }

  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 300.0);
  std::vector<double> vals(12 * 5000);
  for (auto& v : vals) v = n(rng);
  {
    const auto rec = data::parse_mat_record(MatWriter::matrix_file("val", 12, 5000, vals, MatStorage::kDouble));
    bool exact = rec.signal.shape() == ad::Shape{12, 5000};
    for (std::size_t i = 0; exact && i < vals.size(); ++i) exact = rec.signal.data()[i] == vals[i];
    c.expect(exact, "double MAT fixture round-trips bit-exactly");
  }
  {
    std::vector<double> ints(vals.size());
    std::transform(vals.begin(), vals.end(), ints.begin(), [](double v) { return std::round(v); });
    const auto rec = data::parse_mat_record(MatWriter::struct_file("ECG", 12, 5000, ints, MatStorage::kInt16, {"age"}));
    bool exact = rec.signal.shape() == ad::Shape{12, 5000};
    for (std::size_t i = 0; exact && i < ints.size(); ++i) exact = rec.signal.data()[i] == ints[i];
    c.expect(exact, "int16 struct MAT fixture round-trips bit-exactly");
  }
  auto expect_parse_error = [&](std::vector<std::uint8_t> bytes, const std::string& needle) {
    try {
      data::parse_mat_record(bytes);
      c.expect(false, "malformed MAT accepted (" + needle + ")");
    } catch (const ParseError& e) {
      c.expect(std::string(e.what()).find(needle) != std::string::npos, "error names " + needle);
    }
  };
  const std::vector<double> small(120, 1.0);
  expect_parse_error(std::vector<std::uint8_t>(100, 0), "short header");
  {
    io::ByteWriter w;
    MatWriter::header(w);
    MatWriter::element(w, data::kMiCompressed, std::vector<std::uint8_t>(16, 1));
    expect_parse_error(w.take(), "miCOMPRESSED");
  }
  {
    auto bytes = MatWriter::matrix_file("val", 12, 10, small, MatStorage::kDouble);
    bytes[128 + 8 + 8] = 4;
    expect_parse_error(bytes, "mxCHAR_CLASS");
  }
  {
    auto bytes = MatWriter::matrix_file("val", 12, 10, small, MatStorage::kDouble);
    bytes.resize(bytes.size() - 100);
    expect_parse_error(bytes, "truncated");
  }
  {
    auto bytes = MatWriter::struct_file("ECG", 12, 10, small, MatStorage::kDouble);
    const std::string field = "data";
    auto it = std::search(bytes.begin(), bytes.end(), field.begin(), field.end());
    *(it + 3) = 'e';
    expect_parse_error(bytes, "no 'data' field");
  }

  data::SynthOptions opts;
  opts.n_records = 12;
  opts.min_duration_s = 6;
  opts.max_duration_s = 40;
  auto recs = data::synth_dataset(opts);
  recs[3].labels = {2, 7};
  const auto path = dir / "cache.ecgds";
  data::save_dataset(path, recs);
  const auto back = data::load_dataset(path);
  bool same = back.size() == recs.size();
  for (std::size_t i = 0; same && i < recs.size(); ++i) {
    same = back[i].id == recs[i].id && back[i].labels == recs[i].labels &&
           back[i].signal.shape() == recs[i].signal.shape();
    for (std::size_t j = 0; same && j < recs[i].signal.size(); ++j) {
      same = back[i].signal.data()[j] == static_cast<double>(static_cast<float>(recs[i].signal.data()[j]));
    }
  }
  c.expect(same, "dataset cache round-trips at single precision");
  c.expect(data::encode_dataset(back) == io::read_file(path), "re-encoding the cache is byte-identical");
  fs::remove_all(dir);
  c.note("2 checkpoints, 2 MAT fixtures, 5 malformed MAT files, 12-record cache");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Checks&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient suite", gradient_suite},
      {2, "closed-form identities", closed_forms},
      {3, "architecture grid", architecture_grid},
      {4, "augmentation invariants", augmentation},
      {5, "ensemble combinatorics", ensemble_combinatorics},
      {6, "fusion identities", fusion},
      {7, "segment-average inference", segment_average},
      {8, "evaluation correctness", evaluation},
      {9, "end-to-end desk-scale run", end_to_end},
      {10, "persistence and parsing", persistence},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& cr : criteria) {
    if (!selected.empty() && !selected.contains(cr.id)) continue;
    Checks checks;
    const auto t0 = Clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const bool pass = checks.passed();
    failed += pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", cr.id, pass ? "PASS" : "FAIL", cr.title,
                checks.summary().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
