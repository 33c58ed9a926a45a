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

#include <functional>

#include "ctdp/autodiff.hpp"

namespace ctdp {

template <typename T>
using ScalarFunction = std::function<Var<T>(const Var<T>&)>;

/// Compares reverse-mode gradients of `f` at `point` with central differences
/// of width 2 * step. Returns the largest per-coordinate
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
///
/// Instantiate with double for the high-precision check mode.
template <typename T>
double gradient_check(const ScalarFunction<T>& f, const Tensor<T>& point, T step);

/// Compares the reverse-mode directional derivative <grad f, d> at `point`
/// with (f(point + step d) - f(point - step d)) / (2 step). Returns
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename T>
double directional_gradient_check(const ScalarFunction<T>& f, const Tensor<T>& point,
                                  const Tensor<T>& direction, T step);

}  // namespace ctdp
