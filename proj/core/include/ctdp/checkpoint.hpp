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
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctdp/params.hpp"

namespace ctdp {

/// Binary layout, all integers little-endian:
///
///   "CTDP" | u32 version | u32 tensor count
///   per tensor: u16 name length | UTF-8 name | u8 dtype (1 = f32) |
///               u8 rank | u32 dims[rank] | f32 payload[prod(dims)]
///   u32 CRC-32 of every preceding byte
///
/// Reserved name prefixes: "lossnet." (loss network), "disc."
/// (discriminator), "opt." (optimizer state), "meta." (training metadata).
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class FormatErrorKind {
  BadMagic,
  VersionMismatch,
  CrcMismatch,
  Truncated,
  Malformed,
  MissingTensor,
  ShapeMismatch,
};

const char* to_string(FormatErrorKind kind);

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

std::vector<std::uint8_t> encode_checkpoint(const ParamSet<float>& tensors);
ParamSet<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Throws IoError with the path on filesystem failures.
void save_checkpoint(const ParamSet<float>& tensors, const std::filesystem::path& path);
ParamSet<float> load_checkpoint(const std::filesystem::path& path);

/// Subset of `tensors` whose names start with `prefix`.
ParamSet<float> select_prefix(const ParamSet<float>& tensors, std::string_view prefix);

/// Appends every tensor of `extra` to `into`.
void merge_into(ParamSet<float>& into, const ParamSet<float>& extra);

}  // namespace ctdp
