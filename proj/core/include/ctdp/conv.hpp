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

#include "ctdp/tensor.hpp"

namespace ctdp {

/// Geometry of one convolution layer. Padding is always reflect with
/// (kernel - 1) / 2 rows and columns per side, so stride-1 layers keep the
/// spatial extent and stride-2 layers produce ceil(h / 2) x ceil(w / 2).
///
/// Dense weights are laid out (out, in, k, k); depthwise weights (c, 1, k, k)
/// and require in_channels == out_channels. Biases are (out, 1, 1, 1).
struct ConvSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  bool depthwise = false;

  std::int64_t pad() const noexcept { return (kernel - 1) / 2; }
  Shape weight_shape() const noexcept {
    return {out_channels, depthwise ? 1 : in_channels, kernel, kernel};
  }
  Shape bias_shape() const noexcept { return {out_channels, 1, 1, 1}; }
  Shape output_shape(const Shape& in) const noexcept {
    return {in.n, out_channels, (in.h + stride - 1) / stride, (in.w + stride - 1) / stride};
  }
  std::int64_t param_count() const noexcept {
    return weight_shape().numel() + bias_shape().numel();
  }
};

/// Throws ShapeError if the spec itself is malformed or the operands do not
/// match it.
template <typename T>
void validate_conv(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                   const Tensor<T>& bias);

/// Optional elementwise activation applied to the conv output.
enum class Activation { None, Relu };

/// Cross-correlation plus bias, then `act`.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                         const Tensor<T>& bias, Activation act = Activation::None);

template <typename T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Shape& input_shape,
                                const ConvSpec& spec, const Tensor<T>& weight);

template <typename T>
Tensor<T> conv2d_backward_weight(const Tensor<T>& grad_out, const Tensor<T>& input,
                                 const ConvSpec& spec);

template <typename T>
Tensor<T> conv2d_backward_bias(const Tensor<T>& grad_out, const ConvSpec& spec);

/// Reflect index into [0, n) for |offset| < n.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) noexcept {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

}  // namespace ctdp
