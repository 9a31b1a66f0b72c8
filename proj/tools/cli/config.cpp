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

#include "cli/config.hpp"

#include <set>
#include <type_traits>

#include "ecgmv/errors.hpp"
#include "json.hpp"

using nlohmann::json;

namespace ecgmv::cli {

namespace {

[[noreturn]] void bad_value(const std::string& path, const char* expected) {
  throw ConfigError("config: '" + path + "' must be " + expected);
}

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
json encode(const T& v) {
  if constexpr (std::is_same_v<T, augment::Range>) {
    return json::array({v.lo, v.hi});
  } else if constexpr (std::is_same_v<T, augment::IntRange>) {
    return json::array({v.lo, v.hi});
  } else {
    return json(v);
  }
}

template <class T>
void decode(const json& j, const std::string& path, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) bad_value(path, "true or false");
    out = j.get<bool>();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) bad_value(path, "a non-negative integer");
    out = j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) bad_value(path, "an integer");
    out = j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) bad_value(path, "a number");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) bad_value(path, "a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, augment::Range>) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      bad_value(path, "a [low, high] pair of numbers");
    }
    out = {j[0].get<double>(), j[1].get<double>()};
  } else if constexpr (std::is_same_v<T, augment::IntRange>) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
      bad_value(path, "a [low, high] pair of integers");
    }
    out = {j[0].get<int>(), j[1].get<int>()};
  } else if constexpr (std::is_same_v<T, std::array<double, 3>>) {
    if (!j.is_array() || j.size() != 3) bad_value(path, "an array of three numbers");
    for (std::size_t i = 0; i < 3; ++i) decode(j[i], path + "[" + std::to_string(i) + "]", out[i]);
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) bad_value(path, "an array");
    T v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) decode(j[i], path + "[" + std::to_string(i) + "]", v[i]);
    out = std::move(v);
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

class Writer {
 public:
  template <class T>
  void operator()(const char* key, const T& value) {
    j_[key] = encode(value);
  }
  template <class Fn>
  void section(const char* key, Fn&& fn) {
    Writer sub;
    fn(sub);
    j_[key] = std::move(sub.j_);
  }
  json take() { return std::move(j_); }

 private:
  json j_ = json::object();
};

class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {}

  template <class T>
  void operator()(const char* key, T& value) {
    seen_.insert(key);
    if (auto it = obj_.find(key); it != obj_.end()) decode(*it, prefix_ + key, value);
  }
  template <class Fn>
  void section(const char* key, Fn&& fn) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_object()) bad_value(prefix_ + key, "an object");
    Reader sub(*it, prefix_ + key + ".");
    fn(sub);
    sub.finish();
  }
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError("config: unknown key '" + prefix_ + it.key() + "'");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

// One field list drives both serialization directions.
template <class V, class C>
void visit(V& v, C& c) {
  v("seed", c.seed);
  v("threads", c.threads);
  v("gradcheck_seeds", c.gradcheck_seeds);
  v.section("data", [&](V& s) {
    s("dataset", c.data.dataset);
    s("mat_dir", c.data.mat_dir);
    s("manifest", c.data.manifest);
    s("split", c.data.split);
    s("split_seed", c.data.split_seed);
    s("subset", c.data.subset);
  });
  v.section("synth", [&](V& s) {
    s("classes", c.synth.classes);
    s("per_class", c.synth.per_class);
    s("min_duration_s", c.synth.min_duration_s);
    s("max_duration_s", c.synth.max_duration_s);
  });
  v.section("model", [&](V& s) {
    s("arch", c.model.arch);
    s("width", c.model.width);
  });
  v.section("train", [&](V& s) {
    s("epochs", c.train.epochs);
    s("batch_size", c.train.batch_size);
    s("eta0", c.train.eta0);
    s("beta1", c.train.beta1);
    s("beta2", c.train.beta2);
    s("eps", c.train.eps);
    s("clip_norm", c.train.clip_norm);
  });
  v.section("augment", [&](V& s) {
    s("enabled", c.augment.enabled);
    s("jitter_sigma", c.augment.jitter_sigma);
    s("scale", c.augment.scale);
    s("magwarp_knots", c.augment.magwarp_knots);
    s("magwarp_sigma", c.augment.magwarp_sigma);
    s("timewarp_knots", c.augment.timewarp_knots);
    s("timewarp_sigma", c.augment.timewarp_sigma);
    s("permute_segments", c.augment.permute_segments);
    s("resample_min_rate", c.augment.resample_min_rate);
    s("randomize_order", c.augment.randomize_order);
  });
  v.section("ensemble", [&](V& s) {
    s("checkpoints", c.ensemble.checkpoints);
    s("k_min", c.ensemble.k_min);
    s("k_max", c.ensemble.k_max);
    s("top", c.ensemble.top);
  });
  v.section("output", [&](V& s) {
    s("path", c.output.path);
    s("history", c.output.history);
    s("report", c.output.report);
  });
}

}  // namespace

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig t;
  t.epochs = train.epochs;
  t.batch_size = train.batch_size;
  t.eta0 = train.eta0;
  t.adam = {train.beta1, train.beta2, train.eps};
  t.clip_norm = train.clip_norm;
  t.seed = seed;
  t.width_multiplier = model.width;
  t.augment = augment;
  t.threads = threads;
  return t;
}

std::string config_to_json(const RunConfig& cfg) {
  Writer w;
  visit(w, cfg);
  return w.take().dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, RunConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  Reader r(j, "");
  visit(r, base);
  r.finish();
  return base;
}

}  // namespace ecgmv::cli
