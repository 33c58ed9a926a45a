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

#include <vector>

#include "ctdp/autodiff.hpp"
#include "ctdp/conv.hpp"

/// Differentiable operator set. Every op checks its operands and returns a
/// Var that is recorded on the inputs' tape when any input needs a gradient.
namespace ctdp::ops {

template <typename T>
Var<T> conv2d(const Var<T>& input, const ConvSpec& spec, const Var<T>& weight,
              const Var<T>& bias, Activation act = Activation::None);

/// Depthwise k x k convolution (groups == channels) followed by a 1x1 dense
/// convolution, with no activation in between; `act` follows the 1x1 stage. Stride applies to the
/// depthwise stage.
template <typename T>
Var<T> dw_separable_conv(const Var<T>& input, const ConvSpec& depthwise,
                         const Var<T>& depthwise_weight, const Var<T>& depthwise_bias,
                         const ConvSpec& pointwise, const Var<T>& pointwise_weight,
                         const Var<T>& pointwise_bias, Activation act = Activation::None);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

/// Nearest-neighbour upsampling; h and w grow by `factor`.
template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int factor);

/// alpha * a + beta * b, elementwise.
template <typename T>
Var<T> add_scaled(const Var<T>& a, const Var<T>& b, T alpha, T beta);

template <typename T>
Var<T> scale(const Var<T>& x, T alpha);

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

/// 2x2 window, stride 2, floor on odd extents.
template <typename T>
Var<T> avg_pool2(const Var<T>& x);

template <typename T>
Var<T> max_pool2(const Var<T>& x);

/// x[:, c] - offsets[c]; offsets are constants.
template <typename T>
Var<T> shift_channels(const Var<T>& x, const std::vector<T>& offsets);

template <typename T>
Var<T> sum(const Var<T>& x);

template <typename T>
Var<T> mean(const Var<T>& x);

/// Mean of (a - b)^2 over all elements.
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

/// Mean binary cross-entropy of sigmoid(logits) against a constant target.
template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, T target);

}  // namespace ctdp::ops
