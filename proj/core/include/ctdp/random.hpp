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
#include <random>

#include "ctdp/tensor.hpp"

namespace ctdp::rng {

using Engine = std::mt19937_64;

/// Engine for an independent stream derived from (seed, stream).
Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform in [lo, hi).
template <typename T>
void fill_uniform(Tensor<T>& t, T lo, T hi, Engine& engine);

/// Standard normal sample that is a pure function of its four keys, so noise
/// for a pixel does not depend on how an image is split into tiles.
double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace ctdp::rng
