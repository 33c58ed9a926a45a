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

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ctdp/random.hpp"
#include "ctdp/tensor.hpp"

namespace ctdp::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, rng::Engine& engine, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(shape);
  rng::fill_uniform(t, static_cast<T>(lo), static_cast<T>(hi), engine);
  return t;
}

template <typename A, typename B>
double max_abs_diff(const Tensor<A>& a, const Tensor<B>& b) {
  double worst = 0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(x[i]) - static_cast<double>(y[i])));
  }
  return worst;
}

}  // namespace ctdp::testing
