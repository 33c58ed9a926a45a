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
#include <string>
#include <vector>

#include "ctdp/layers.hpp"
#include "ctdp/params.hpp"

namespace ctdp {

/// Conv widths per block plus the per-channel mean subtracted from inputs.
/// Block b (1-based) contributes tap relu{b}_1 after its first conv; 2x2 max
/// pooling separates blocks.
struct LossProfile {
  std::string name;
  std::vector<std::vector<std::int64_t>> blocks;
  std::vector<double> mean{0.0, 0.0, 0.0};

  /// 16/32/64/128 channels, two convs per block, zero mean.
  static LossProfile mini();
  /// VGG-16 conv stack through relu4_1 with ImageNet channel means.
  static LossProfile vgg16();
  static LossProfile by_name(const std::string& name);
};

template <typename T>
struct FeatureTaps {
  Var<T> relu1_1, relu2_1, relu3_1, relu4_1;
};

/// Frozen feature extractor. Its weights enter every computation as
/// constants, so gradients flow to the image only.
template <typename T>
class LossNetwork {
 public:
  /// He-uniform weights and zero biases from `seed`.
  LossNetwork(const LossProfile& profile, std::uint64_t seed);
  /// Tensors named "lossnet.*" taken from `params`; throws FormatError
  /// naming the first missing or mis-shaped tensor.
  LossNetwork(const LossProfile& profile, const ParamSet<T>& params);

  const LossProfile& profile() const noexcept { return profile_; }
  /// All weights under their "lossnet." names, plus "lossnet.mean".
  const ParamSet<T>& params() const noexcept { return params_; }

  /// Input must be N x 3 x H x W in [0, 1] with H, W >= 16.
  FeatureTaps<T> extract_taps(const Var<T>& image) const;

 private:
  void build_layers();

  LossProfile profile_;
  std::vector<std::vector<ConvLayer>> layers_;
  ParamSet<T> params_;
  Binding<T> binding_;
  std::vector<T> mean_;
};

template <typename T>
LossNetwork<T> load_loss_weights(const std::string& path, const LossProfile& profile);

template <typename T>
LossNetwork<T> init_loss_weights(std::uint64_t seed, const LossProfile& profile = LossProfile::mini());

extern template class LossNetwork<float>;
extern template class LossNetwork<double>;

}  // namespace ctdp
