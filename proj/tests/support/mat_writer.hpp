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

#include <cstdint>
#include <string>
#include <vector>

#include "ecgmv/data/mat.hpp"
#include "ecgmv/io/bytes.hpp"

namespace ecgmv::testing {

enum class MatStorage { kDouble, kInt16 };

// Minimal level-5 MAT writer used to build parser fixtures. Values are given
// row-major for a rows x cols matrix and stored column-major.
class MatWriter {
 public:
  static std::vector<std::uint8_t> matrix_file(const std::string& name, std::size_t rows, std::size_t cols,
                                               const std::vector<double>& row_major, MatStorage storage) {
    io::ByteWriter w;
    header(w);
    element(w, data::kMiMatrix, matrix_payload(name, rows, cols, row_major, storage));
    return w.take();
  }

  /// A 1x1 struct with fields `extra_fields` (as 1x1 doubles) followed by `data`.
  static std::vector<std::uint8_t> struct_file(const std::string& name, std::size_t rows, std::size_t cols,
                                               const std::vector<double>& row_major, MatStorage storage,
                                               const std::vector<std::string>& extra_fields = {}) {
    io::ByteWriter body;
    array_flags(body, data::kMxStructClass);
    dims(body, 1, 1);
    element(body, data::kMiInt8, bytes_of(name));
    constexpr std::size_t kFieldLen = 32;
    small_element(body, data::kMiInt32, static_cast<std::uint32_t>(kFieldLen));
    std::vector<std::string> fields = extra_fields;
    fields.push_back("data");
    std::vector<std::uint8_t> names(kFieldLen * fields.size(), 0);
    for (std::size_t f = 0; f < fields.size(); ++f)
      std::copy(fields[f].begin(), fields[f].end(), names.begin() + static_cast<std::ptrdiff_t>(f * kFieldLen));
    element(body, data::kMiInt8, names);
    for (std::size_t f = 0; f + 1 < fields.size(); ++f)
      element(body, data::kMiMatrix, matrix_payload("", 1, 1, {42.0}, MatStorage::kDouble));
    element(body, data::kMiMatrix, matrix_payload("", rows, cols, row_major, storage));

    io::ByteWriter w;
    header(w);
    element(w, data::kMiMatrix, body.take());
    return w.take();
  }

  static void header(io::ByteWriter& w) {
    std::string text = "MATLAB 5.0 MAT-file, written by the ecgmv test fixture writer";
    text.resize(116, ' ');
    w.text(text);
    w.u64(0);
    w.u16(0x0100);
    w.text("IM");
  }

  static void element(io::ByteWriter& w, std::uint32_t type, const std::vector<std::uint8_t>& payload) {
    w.u32(type);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(payload);
    w.pad_to(8);
  }

  static void small_element(io::ByteWriter& w, std::uint32_t type, std::uint32_t value) {
    w.u32((4u << 16) | type);
    w.u32(value);
  }

 private:
  static std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

  static void array_flags(io::ByteWriter& w, std::uint8_t cls) {
    io::ByteWriter f;
    f.u32(cls);
    f.u32(0);
    element(w, data::kMiUint32, f.take());
  }

  static void dims(io::ByteWriter& w, std::size_t rows, std::size_t cols) {
    io::ByteWriter d;
    d.i32(static_cast<std::int32_t>(rows));
    d.i32(static_cast<std::int32_t>(cols));
    element(w, data::kMiInt32, d.take());
  }

  static std::vector<std::uint8_t> matrix_payload(const std::string& name, std::size_t rows, std::size_t cols,
                                                  const std::vector<double>& row_major, MatStorage storage) {
    io::ByteWriter body;
    array_flags(body, storage == MatStorage::kDouble ? data::kMxDoubleClass : data::kMxInt16Class);
    dims(body, rows, cols);
    element(body, data::kMiInt8, bytes_of(name));
    io::ByteWriter values;
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double v = row_major[r * cols + c];
        if (storage == MatStorage::kDouble) {
          values.f64(v);
        } else {
          values.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
        }
      }
    }
    element(body, storage == MatStorage::kDouble ? data::kMiDouble : data::kMiInt16, values.take());
    return body.take();
  }
};

}  // namespace ecgmv::testing
