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

#include <string>

#include "ctdp/conv.hpp"
#include "ctdp/params.hpp"
#include "ctdp/random.hpp"

namespace ctdp {

/// Named convolution; parameters live at "<name>.weight" and "<name>.bias".
struct ConvLayer {
  std::string name;
  ConvSpec spec;

  std::string weight() const { return name + ".weight"; }
  std::string bias() const { return name + ".bias"; }
  std::int64_t param_count() const { return spec.param_count(); }
};

/// Depthwise k x k (stride applied here) then pointwise 1x1; parameters at
/// "<name>.dw.*" and "<name>.pw.*".
struct SeparableLayer {
  std::string name;
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;

  ConvLayer depthwise() const {
    return {name + ".dw", ConvSpec{in_channels, in_channels, kernel, stride, true}};
  }
  ConvLayer pointwise() const {
    return {name + ".pw", ConvSpec{in_channels, out_channels, 1, 1, false}};
  }
  std::int64_t param_count() const {
    return depthwise().param_count() + pointwise().param_count();
  }
};

/// He-uniform weights (bound sqrt(6 / fan_in)) and zero biases.
template <typename T>
void init_layer(ParamSet<T>& params, const ConvLayer& layer, rng::Engine& engine);

template <typename T>
void init_layer(ParamSet<T>& params, const SeparableLayer& layer, rng::Engine& engine);

template <typename T>
Var<T> apply(const Binding<T>& b, const ConvLayer& layer, const Var<T>& x,
             Activation act = Activation::None);

template <typename T>
Var<T> apply(const Binding<T>& b, const SeparableLayer& layer, const Var<T>& x,
             Activation act = Activation::None);

}  // namespace ctdp
