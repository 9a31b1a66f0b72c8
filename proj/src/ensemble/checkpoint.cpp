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

#include "ecgmv/ensemble/checkpoint.hpp"

#include <cstdio>
#include <sstream>

#include "ecgmv/data/record.hpp"
#include "ecgmv/errors.hpp"
#include "ecgmv/io/bytes.hpp"

namespace ecgmv::ensemble {

namespace {

constexpr std::string_view kMagic = "ECGMV1";

[[noreturn]] void load_fail(const std::string& what) { throw LoadError("checkpoint: " + what); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tensors(io::ByteWriter& w, const std::vector<nn::NamedTensor>& list) {
  for (const auto& nt : list) {
    w.u32(static_cast<std::uint32_t>(nt.name.size()));
    w.text(nt.name);
    const auto& shape = nt.tensor.shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : nt.tensor.data()) w.f32(static_cast<float>(v));
  }
}

}  // namespace

std::vector<std::string> default_class_map() {
  return {data::kClassNames.begin(), data::kClassNames.end()};
}

std::vector<std::uint8_t> encode_checkpoint(const nn::Model& model, const std::vector<std::string>& class_map) {
  std::string meta = "arch=" + model.spec().token() + "\n";
  meta += "width=" + format_double(model.options().width_multiplier) + "\n";
  meta += "seed=" + std::to_string(model.seed()) + "\n";
  meta += "classes=";
  for (std::size_t i = 0; i < class_map.size(); ++i) meta += (i ? "," : "") + class_map[i];
  meta += "\n";

  io::ByteWriter w;
  w.text(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.text(meta);
  w.u32(static_cast<std::uint32_t>(model.parameters().size() + model.buffers().size()));
  write_tensors(w, model.parameters());
  write_tensors(w, model.buffers());
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, load_fail);
  if (bytes.size() < kMagic.size() || r.text(kMagic.size()) != kMagic) load_fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    load_fail("unsupported format version " + std::to_string(version) + " (expected " +
              std::to_string(kCheckpointVersion) + ")");
  }
  const std::string meta = r.text(r.u32());

  std::string arch, width, seed, classes;
  std::istringstream lines(meta);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) load_fail("malformed metadata line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "arch") arch = value;
    else if (key == "width") width = value;
    else if (key == "seed") seed = value;
    else if (key == "classes") classes = value;
    else load_fail("unknown metadata key '" + key + "'");
  }
  if (arch.empty() || width.empty() || seed.empty() || classes.empty()) load_fail("incomplete metadata");

  nn::ArchitectureSpec spec;
  try {
    spec = nn::ArchitectureSpec::parse(arch);
  } catch (const ConfigError& e) {
    load_fail(std::string("architecture token: ") + e.what());
  }
  nn::ModelOptions options;
  std::uint64_t model_seed = 0;
  try {
    std::size_t used = 0;
    options.width_multiplier = std::stod(width, &used);
    if (used != width.size()) throw std::invalid_argument(width);
    model_seed = std::stoull(seed, &used);
    if (used != seed.size()) throw std::invalid_argument(seed);
  } catch (const std::exception&) {
    load_fail("malformed width or seed in metadata");
  }
  std::vector<std::string> class_map;
  std::istringstream cls(classes);
  for (std::string c; std::getline(cls, c, ',');) class_map.push_back(c);

  Checkpoint ck{"", class_map, nn::Model(spec, model_seed, options)};
  std::vector<nn::NamedTensor> slots = ck.model.parameters();
  slots.insert(slots.end(), ck.model.buffers().begin(), ck.model.buffers().end());
  const std::uint32_t count = r.u32();
  if (count != slots.size()) {
    load_fail("tensor count " + std::to_string(count) + " does not match architecture (" +
              std::to_string(slots.size()) + ")");
  }
  for (auto& slot : slots) {
    const std::string name = r.text(r.u32());
    if (name != slot.name) load_fail("expected tensor '" + slot.name + "', found '" + name + "'");
    const std::uint8_t rank = r.u8();
    ad::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != slot.tensor.shape()) {
      load_fail("tensor '" + name + "' has shape " + ad::shape_to_string(shape) + ", expected " +
                ad::shape_to_string(slot.tensor.shape()));
    }
    for (auto& v : slot.tensor.data()) v = r.f32();
  }
  if (!r.at_end()) load_fail("trailing bytes after last tensor");
  return ck;
}

void save_checkpoint(const nn::Model& model, const std::filesystem::path& path,
                     const std::vector<std::string>& class_map) {
  io::write_file(path, encode_checkpoint(model, class_map));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck = decode_checkpoint(io::read_file(path));
  ck.id = path.stem().string();
  return ck;
}

}  // namespace ecgmv::ensemble
