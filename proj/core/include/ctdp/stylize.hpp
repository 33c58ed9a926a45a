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
#include <string_view>
#include <vector>

#include "ctdp/model.hpp"

namespace ctdp {

enum class StylizeMode { Color, Texture, Fused };

StylizeMode parse_stylize_mode(std::string_view name);

struct NoiseSpec {
  std::vector<std::int64_t> channels;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

struct StylizeOptions {
  StylizeMode mode = StylizeMode::Fused;
  double lambda_s = 1.0;
  /// lambda_d for fused mode; texture mode always uses 1.
  double intensity = 1.0;
  bool smooth_input = false;
  int smooth_radius = 8;
  double smooth_eps = 1e-4;
  /// Output tile edge (multiple of 4); 0 disables tiling.
  std::int64_t tile = 1024;
  /// Context added around each tile (multiple of 4), wider than the
  /// network's receptive radius so tiled and untiled outputs agree.
  std::int64_t halo = 48;
  /// Gaussian noise added to the first shallow convolution's activation.
  NoiseSpec noise;

  void validate() const;
};

/// Runs the network on a 1 x 3 x h x w image of any size and returns an
/// image of the same size. The input is reflect-padded to a multiple of 4
/// and the output cropped back.
Tensor4 stylize(const CtdpModel<float>& model, const Tensor4& image, const StylizeOptions& options);

}  // namespace ctdp
