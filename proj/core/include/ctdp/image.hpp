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
#include <vector>

#include "ctdp/random.hpp"
#include "ctdp/tensor.hpp"

namespace ctdp {

/// Decodes an 8-bit PNG or JPEG into a 1 x 3 x h x w tensor in [0, 1].
/// Grayscale and alpha inputs are expanded or dropped to RGB.
Tensor4 load_image(const std::filesystem::path& path);

/// Writes a 1 x 3 (RGB) or 1 x 1 (gray) tensor as 8-bit PNG. Values are
/// clamped to [0, 1] and rounded half-up.
void save_image(const Tensor4& image, const std::filesystem::path& path);

std::uint8_t quantize(float v) noexcept;

/// Bilinear with half-pixel centers.
Tensor4 resize_bilinear(const Tensor4& image, std::int64_t height, std::int64_t width);

/// Scales so the shorter edge equals `target`, preserving aspect ratio.
/// A no-op when the shorter edge already matches.
Tensor4 resize_shorter_edge(const Tensor4& image, std::int64_t target);

Tensor4 crop(const Tensor4& image, std::int64_t y, std::int64_t x, std::int64_t height,
             std::int64_t width);

/// Reflect padding without repeating the edge pixel. Each pad must be
/// smaller than the corresponding extent.
Tensor4 reflect_pad(const Tensor4& image, std::int64_t top, std::int64_t bottom,
                    std::int64_t left, std::int64_t right);

/// Copies sample `index` of a batch into a 1-sample tensor.
Tensor4 take_sample(const Tensor4& batch, std::int64_t index);

/// Stacks equally shaped 1-sample tensors along the batch axis.
Tensor4 stack(const std::vector<Tensor4>& samples);

struct AugmentSpec {
  std::int64_t resize_target = 512;
  std::int64_t crop = 256;
  std::uint64_t seed = 0;
};

struct AugmentResult {
  Tensor4 crop;
  std::int64_t y = 0;
  std::int64_t x = 0;
};

/// Shorter-edge resize then a uniformly placed crop drawn from `engine`.
AugmentResult augment(const Tensor4& image, const AugmentSpec& spec, rng::Engine& engine);
/// Same, with an engine seeded from spec.seed.
AugmentResult augment(const Tensor4& image, const AugmentSpec& spec);

/// Luma Sobel magnitude scaled by 1 / (4 sqrt 2); n x 1 x h x w in [0, 1].
Tensor4 sobel_edge(const Tensor4& image);

/// 1 where sobel_edge > delta, else 0. delta must lie in (0, 1].
Tensor4 edge_mask(const Tensor4& image, float delta = 0.2f);

/// Self-guided filter per channel with (2 radius + 1)^2 box windows clipped
/// at the border.
Tensor4 guided_filter(const Tensor4& image, int radius = 8, double eps = 1e-4);

}  // namespace ctdp
