//==============================================================================
// Copyright (c) 2026 The CTDP Authors.
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
//==============================================================================
#include "ctdp/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "ctdp/error.hpp"

namespace ctdp {
namespace {

constexpr char kMagic[4] = {'C', 'T', 'D', 'P'};
constexpr std::uint8_t kDtypeF32 = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const auto b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const auto b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(FormatErrorKind::Truncated, "checkpoint truncated at byte " +
                                                        std::to_string(pos_));
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t float_bits(float v) { return std::bit_cast<std::uint32_t>(v); }
float bits_float(std::uint32_t v) { return std::bit_cast<float>(v); }

}  // namespace

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::BadMagic:
      return "bad magic";
    case FormatErrorKind::VersionMismatch:
      return "version mismatch";
    case FormatErrorKind::CrcMismatch:
      return "CRC mismatch";
    case FormatErrorKind::Truncated:
      return "truncated";
    case FormatErrorKind::Malformed:
      return "malformed";
    case FormatErrorKind::MissingTensor:
      return "missing tensor";
    case FormatErrorKind::ShapeMismatch:
      return "shape mismatch";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_checkpoint(const ParamSet<float>& tensors) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& name : tensors.names()) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw UsageError("checkpoint: tensor name too long: " + name.substr(0, 32) + "...");
    }
    const Tensor<float>& t = tensors.get(name);
    const Shape& s = t.shape();
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(kDtypeF32);
    w.u8(4);
    for (std::int64_t d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) w.u32(float_bits(v));
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(bytes);
  w.u32(crc);
  return std::move(bytes);
}

ParamSet<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatErrorKind::BadMagic, "checkpoint: bad magic (not a CTDP file)");
  }
  if (bytes.size() < 16) {
    throw FormatError(FormatErrorKind::Truncated, "checkpoint truncated: header incomplete");
  }
  Reader header(bytes.subspan(4, 4));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatErrorKind::VersionMismatch,
                      "checkpoint: format version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (crc32_of(body) != trailer.u32()) {
    // A short file fails the CRC too; report truncation when the body cannot
    // hold what it declares.
    Reader probe(body.subspan(8));
    try {
      const std::uint32_t count = probe.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        probe.take(probe.u16());
        probe.u8();
        const std::uint8_t rank = probe.u8();
        std::uint64_t elems = 1;
        for (std::uint8_t r = 0; r < rank; ++r) elems *= probe.u32();
        probe.take(static_cast<std::size_t>(elems * 4));
      }
    } catch (const FormatError& e) {
      if (e.kind() == FormatErrorKind::Truncated) throw;
    }
    throw FormatError(FormatErrorKind::CrcMismatch, "checkpoint: CRC-32 mismatch");
  }

  Reader r(body.subspan(8));
  const std::uint32_t count = r.u32();
  ParamSet<float> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    const auto name_bytes = r.take(len);
    std::string name(name_bytes.begin(), name_bytes.end());
    if (name.empty()) throw FormatError(FormatErrorKind::Malformed, "checkpoint: empty tensor name");
    if (out.contains(name)) {
      throw FormatError(FormatErrorKind::Malformed, "checkpoint: duplicate tensor " + name);
    }
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF32) {
      throw FormatError(FormatErrorKind::Malformed,
                        "checkpoint: tensor " + name + " has unsupported dtype " +
                            std::to_string(dtype));
    }
    const std::uint8_t rank = r.u8();
    if (rank > 4) {
      throw FormatError(FormatErrorKind::Malformed,
                        "checkpoint: tensor " + name + " has rank " + std::to_string(rank));
    }
    std::int64_t dims[4] = {1, 1, 1, 1};
    for (std::uint8_t d = 0; d < rank; ++d) dims[4 - rank + d] = r.u32();
    const Shape shape{dims[0], dims[1], dims[2], dims[3]};
    const auto payload = r.take(static_cast<std::size_t>(shape.numel()) * 4);
    std::vector<float> values(static_cast<std::size_t>(shape.numel()));
    for (std::size_t k = 0; k < values.size(); ++k) {
      const auto* b = payload.data() + 4 * k;
      values[k] = bits_float(static_cast<std::uint32_t>(b[0]) |
                             (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24));
    }
    out.add(std::move(name), Tensor<float>(shape, std::move(values)));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatErrorKind::Malformed, "checkpoint: trailing bytes after last tensor");
  }
  return out;
}

void save_checkpoint(const ParamSet<float>& tensors, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

ParamSet<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError("failed reading " + path.string());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

ParamSet<float> select_prefix(const ParamSet<float>& tensors, std::string_view prefix) {
  ParamSet<float> out;
  for (const auto& name : tensors.names()) {
    if (std::string_view(name).starts_with(prefix)) out.add(name, tensors.get(name));
  }
  return out;
}

void merge_into(ParamSet<float>& into, const ParamSet<float>& extra) {
  for (const auto& name : extra.names()) into.add(name, extra.get(name));
}

}  // namespace ctdp
