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

#include "ecgmv/data/mat.hpp"

#include <optional>
#include <string>

#include "ecgmv/errors.hpp"
#include "ecgmv/io/bytes.hpp"

namespace ecgmv::data {

namespace {

constexpr std::size_t kHeaderSize = 128;

[[noreturn]] void parse_fail(const std::string& what) { throw ParseError("MAT: " + what); }

std::string mi_name(std::uint32_t type) {
  switch (type) {
    case kMiInt8: return "miINT8";
    case kMiUint8: return "miUINT8";
    case kMiInt16: return "miINT16";
    case kMiUint16: return "miUINT16";
    case kMiInt32: return "miINT32";
    case kMiUint32: return "miUINT32";
    case kMiSingle: return "miSINGLE";
    case kMiDouble: return "miDOUBLE";
    case kMiInt64: return "miINT64";
    case kMiUint64: return "miUINT64";
    case kMiMatrix: return "miMATRIX";
    case kMiCompressed: return "miCOMPRESSED";
    case 16: return "miUTF8";
    case 17: return "miUTF16";
    case 18: return "miUTF32";
    default: return "element type " + std::to_string(type);
  }
}

std::string mx_name(std::uint8_t cls) {
  static const char* names[] = {"",
                                "mxCELL_CLASS",
                                "mxSTRUCT_CLASS",
                                "mxOBJECT_CLASS",
                                "mxCHAR_CLASS",
                                "mxSPARSE_CLASS",
                                "mxDOUBLE_CLASS",
                                "mxSINGLE_CLASS",
                                "mxINT8_CLASS",
                                "mxUINT8_CLASS",
                                "mxINT16_CLASS",
                                "mxUINT16_CLASS",
                                "mxINT32_CLASS",
                                "mxUINT32_CLASS",
                                "mxINT64_CLASS",
                                "mxUINT64_CLASS"};
  if (cls >= 1 && cls < std::size(names)) return names[cls];
  return "array class " + std::to_string(cls);
}

struct Element {
  std::uint32_t type;
  std::span<const std::uint8_t> payload;
};

Element read_element(io::ByteReader& r) {
  const std::uint32_t first = r.u32();
  if ((first >> 16) != 0) {
    // Small data element: type and size packed into the first word, payload in the second.
    const std::uint32_t nbytes = first >> 16;
    if (nbytes > 4) parse_fail("corrupt small data element of " + std::to_string(nbytes) + " bytes");
    auto word = r.bytes(4);
    return {first & 0xffffu, word.first(nbytes)};
  }
  const std::uint32_t nbytes = r.u32();
  auto payload = r.bytes(nbytes);
  const std::size_t pad = (8 - nbytes % 8) % 8;
  if (pad != 0 && r.remaining() >= pad) r.skip(pad);
  return {first, payload};
}

Element expect(io::ByteReader& r, std::uint32_t type, const char* what) {
  Element e = read_element(r);
  if (e.type != type) parse_fail(std::string(what) + ": expected " + mi_name(type) + ", found " + mi_name(e.type));
  return e;
}

std::size_t storage_size(std::uint32_t type) {
  switch (type) {
    case kMiInt8:
    case kMiUint8: return 1;
    case kMiInt16:
    case kMiUint16: return 2;
    case kMiInt32:
    case kMiUint32:
    case kMiSingle: return 4;
    case kMiDouble:
    case kMiInt64:
    case kMiUint64: return 8;
    default: return 0;
  }
}

std::vector<double> decode_numeric(const Element& e) {
  const std::size_t width = storage_size(e.type);
  if (width == 0) parse_fail("unsupported numeric storage " + mi_name(e.type));
  if (e.payload.size() % width != 0) parse_fail("numeric payload is not a whole number of values");
  io::ByteReader r(e.payload, parse_fail);
  std::vector<double> out(e.payload.size() / width);
  for (auto& v : out) {
    switch (e.type) {
      case kMiInt8: v = static_cast<std::int8_t>(r.u8()); break;
      case kMiUint8: v = r.u8(); break;
      case kMiInt16: v = static_cast<std::int16_t>(r.u16()); break;
      case kMiUint16: v = r.u16(); break;
      case kMiInt32: v = r.i32(); break;
      case kMiUint32: v = r.u32(); break;
      case kMiSingle: v = r.f32(); break;
      case kMiDouble: v = r.f64(); break;
      case kMiInt64: v = static_cast<double>(static_cast<std::int64_t>(r.u64())); break;
      case kMiUint64: v = static_cast<double>(r.u64()); break;
      default: break;
    }
  }
  return out;
}

std::vector<std::int32_t> decode_dims(const Element& e) {
  io::ByteReader r(e.payload, parse_fail);
  std::vector<std::int32_t> dims(e.payload.size() / 4);
  for (auto& d : dims) d = r.i32();
  return dims;
}

Tensor to_signal(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  // Column-major storage: element (r, c) sits at c * rows + r.
  if (rows == kLeads) {
    Tensor t({kLeads, cols});
    auto d = t.data();
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t l = 0; l < kLeads; ++l) d[l * cols + c] = values[c * rows + l];
    return t;
  }
  if (cols == kLeads) {
    Tensor t({kLeads, rows});
    std::copy(values.begin(), values.end(), t.data().begin());
    return t;
  }
  throw ContractError("MAT: expected a 12-lead matrix, found " + std::to_string(rows) + "x" + std::to_string(cols));
}

std::optional<Tensor> parse_matrix(std::span<const std::uint8_t> payload) {
  io::ByteReader r(payload, parse_fail);
  const Element flags = expect(r, kMiUint32, "array flags");
  if (flags.payload.size() < 4) parse_fail("array flags element too short");
  io::ByteReader fr(flags.payload, parse_fail);
  const std::uint32_t word = fr.u32();
  const auto cls = static_cast<std::uint8_t>(word & 0xffu);
  const bool complex = (word & 0x800u) != 0;
  const auto dims = decode_dims(expect(r, kMiInt32, "dimensions"));
  read_element(r);  // array name

  if (cls == kMxStructClass) {
    const Element len_el = expect(r, kMiInt32, "field name length");
    io::ByteReader lr(len_el.payload, parse_fail);
    const auto name_len = static_cast<std::size_t>(lr.i32());
    const Element names = expect(r, kMiInt8, "field names");
    if (name_len == 0 || names.payload.size() % name_len != 0) parse_fail("corrupt struct field names");
    const std::size_t n_fields = names.payload.size() / name_len;
    for (std::size_t f = 0; f < n_fields; ++f) {
      std::string name(names.payload.begin() + static_cast<std::ptrdiff_t>(f * name_len),
                       names.payload.begin() + static_cast<std::ptrdiff_t>((f + 1) * name_len));
      name = name.c_str();
      const Element field = expect(r, kMiMatrix, "struct field");
      if (name == "data") {
        auto signal = parse_matrix(field.payload);
        if (!signal) parse_fail("struct field 'data' is not a numeric matrix");
        return signal;
      }
    }
    parse_fail("struct has no 'data' field");
  }
  if (cls != kMxDoubleClass && cls != kMxInt16Class) parse_fail("unsupported array class " + mx_name(cls));
  if (complex) parse_fail("complex arrays are not supported");
  if (dims.size() != 2 || dims[0] <= 0 || dims[1] <= 0) parse_fail("expected a non-empty 2-D matrix");
  const auto values = decode_numeric(read_element(r));
  const auto rows = static_cast<std::size_t>(dims[0]), cols = static_cast<std::size_t>(dims[1]);
  if (values.size() != rows * cols) {
    parse_fail("matrix holds " + std::to_string(values.size()) + " values, dimensions say " +
               std::to_string(rows * cols));
  }
  return to_signal(values, rows, cols);
}

}  // namespace

EcgRecord parse_mat_record(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw ParseError("MAT: short header (" + std::to_string(bytes.size()) + " bytes, need 128)");
  }
  if (bytes[126] != 'I' || bytes[127] != 'M') parse_fail("unsupported byte order or not a level-5 MAT file");
  io::ByteReader r(bytes, parse_fail);
  r.seek(kHeaderSize);
  while (!r.at_end()) {
    const Element e = read_element(r);
    if (e.type == kMiCompressed) parse_fail("unsupported element miCOMPRESSED (compressed variables)");
    if (e.type != kMiMatrix) parse_fail("unsupported top-level element " + mi_name(e.type));
    if (auto signal = parse_matrix(e.payload)) {
      EcgRecord rec;
      rec.signal = std::move(*signal);
      rec.source = RecordSource::kFile;
      return rec;
    }
  }
  parse_fail("no 12-lead numeric variable found");
}

EcgRecord load_mat_record(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  EcgRecord rec = parse_mat_record(bytes);
  rec.id = path.stem().string();
  return rec;
}

}  // namespace ecgmv::data
