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
#include "ctdp/layers.hpp"

#include <cmath>

#include "ctdp/ops.hpp"

namespace ctdp {

template <typename T>
void init_layer(ParamSet<T>& params, const ConvLayer& layer, rng::Engine& engine) {
  const ConvSpec& s = layer.spec;
  const std::int64_t fan_in = (s.depthwise ? 1 : s.in_channels) * s.kernel * s.kernel;
  const T bound = static_cast<T>(std::sqrt(6.0 / static_cast<double>(fan_in)));
  Tensor<T> w(s.weight_shape());
  rng::fill_uniform(w, -bound, bound, engine);
  params.add(layer.weight(), std::move(w));
  params.add(layer.bias(), Tensor<T>(s.bias_shape()));
}

template <typename T>
void init_layer(ParamSet<T>& params, const SeparableLayer& layer, rng::Engine& engine) {
  init_layer(params, layer.depthwise(), engine);
  init_layer(params, layer.pointwise(), engine);
}

template <typename T>
Var<T> apply(const Binding<T>& b, const ConvLayer& layer, const Var<T>& x, Activation act) {
  return ops::conv2d(x, layer.spec, b[layer.weight()], b[layer.bias()], act);
}

template <typename T>
Var<T> apply(const Binding<T>& b, const SeparableLayer& layer, const Var<T>& x,
             Activation act) {
  const ConvLayer dw = layer.depthwise();
  const ConvLayer pw = layer.pointwise();
  return ops::dw_separable_conv(x, dw.spec, b[dw.weight()], b[dw.bias()], pw.spec, b[pw.weight()],
                                b[pw.bias()], act);
}

template void init_layer<float>(ParamSet<float>&, const ConvLayer&, rng::Engine&);
template void init_layer<double>(ParamSet<double>&, const ConvLayer&, rng::Engine&);
template void init_layer<float>(ParamSet<float>&, const SeparableLayer&, rng::Engine&);
template void init_layer<double>(ParamSet<double>&, const SeparableLayer&, rng::Engine&);
template Var<float> apply(const Binding<float>&, const ConvLayer&, const Var<float>&, Activation);
template Var<double> apply(const Binding<double>&, const ConvLayer&, const Var<double>&, Activation);
template Var<float> apply(const Binding<float>&, const SeparableLayer&, const Var<float>&, Activation);
template Var<double> apply(const Binding<double>&, const SeparableLayer&, const Var<double>&, Activation);

}  // namespace ctdp
