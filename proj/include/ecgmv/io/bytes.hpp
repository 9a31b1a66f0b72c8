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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgmv::io {

/// Little-endian append-only buffer.
class ByteWriter {
 public:
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void text(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void pad_to(std::size_t alignment) {
    while (buf_.size() % alignment != 0) buf_.push_back(0);
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& buffer() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian cursor. `fail` is invoked with a short
/// description when a read would run past the end; it must throw.
class ByteReader {
 public:
  using FailFn = void (*)(const std::string&);

  ByteReader(std::span<const std::uint8_t> data, FailFn fail) : data_(data), fail_(fail) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ >= data_.size(); }

  void seek(std::size_t pos) {
    if (pos > data_.size()) fail_("offset " + std::to_string(pos) + " past end of input");
    pos_ = pos;
  }
  void skip(std::size_t n) { seek(need(n) + n); }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    const std::size_t at = need(n);
    pos_ += n;
    return data_.subspan(at, n);
  }
  std::string text(std::size_t n) {
    auto b = bytes(n);
    return {b.begin(), b.end()};
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

 private:
  std::size_t need(std::size_t n) {
    if (n > remaining()) {
      fail_("truncated input: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) + ", have " +
            std::to_string(remaining()));
    }
    return pos_;
  }

  template <typename U>
  U get() {
    auto b = bytes(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
  }

  std::span<const std::uint8_t> data_;
  FailFn fail_;
  std::size_t pos_ = 0;
};

/// Reads a whole file; throws LoadError when it cannot be opened.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes a whole file; throws Error when it cannot be written.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ecgmv::io
