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
#include "ctdp/lossnet.hpp"

#include <stdexcept>
#include <type_traits>

#include "ctdp/checkpoint.hpp"
#include "ctdp/error.hpp"
#include "ctdp/ops.hpp"

namespace ctdp {

LossProfile LossProfile::mini() {
  return {"mini", {{16, 16}, {32, 32}, {64, 64}, {128}}, {0.0, 0.0, 0.0}};
}

LossProfile LossProfile::vgg16() {
  return {"vgg16", {{64, 64}, {128, 128}, {256, 256, 256}, {512}}, {0.485, 0.456, 0.406}};
}

LossProfile LossProfile::by_name(const std::string& name) {
  if (name == "mini") return mini();
  if (name == "vgg16") return vgg16();
  throw std::invalid_argument("unknown loss network profile '" + name + "'");
}

template <typename T>
void LossNetwork<T>::build_layers() {
  if (profile_.blocks.size() != 4) {
    throw std::invalid_argument("loss network profile needs exactly four blocks");
  }
  if (profile_.mean.size() != 3) {
    throw std::invalid_argument("loss network profile needs a 3-channel mean");
  }
  std::int64_t in = 3;
  for (std::size_t b = 0; b < profile_.blocks.size(); ++b) {
    std::vector<ConvLayer> block;
    for (std::size_t i = 0; i < profile_.blocks[b].size(); ++i) {
      const std::int64_t out = profile_.blocks[b][i];
      block.push_back({"lossnet.conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1),
                       ConvSpec{in, out, 3, 1}});
      in = out;
    }
    if (block.empty()) throw std::invalid_argument("loss network block without convolutions");
    layers_.push_back(std::move(block));
  }
  mean_.assign(profile_.mean.begin(), profile_.mean.end());
}

template <typename T>
LossNetwork<T>::LossNetwork(const LossProfile& profile, std::uint64_t seed) : profile_(profile) {
  build_layers();
  auto engine = rng::make_engine(seed, 0x6c6f7373ULL);
  for (const auto& block : layers_) {
    for (const auto& layer : block) init_layer(params_, layer, engine);
  }
  params_.add("lossnet.mean", Tensor<T>(Shape{1, 3, 1, 1}, std::vector<T>(mean_)));
  binding_ = Binding<T>::constants(params_);
}

template <typename T>
LossNetwork<T>::LossNetwork(const LossProfile& profile, const ParamSet<T>& params)
    : profile_(profile) {
  build_layers();
  auto take = [&](const std::string& name, const Shape& shape) {
    if (!params.contains(name)) {
      throw FormatError(FormatErrorKind::MissingTensor,
                        "loss network weights: missing tensor " + name);
    }
    const Tensor<T>& t = params.get(name);
    if (t.shape() != shape) {
      throw FormatError(FormatErrorKind::ShapeMismatch,
                        "loss network weights: tensor " + name + " has shape " +
                            to_string(t.shape()) + ", profile " + profile_.name + " expects " +
                            to_string(shape));
    }
    params_.add(name, t);
  };
  for (const auto& block : layers_) {
    for (const auto& layer : block) {
      take(layer.weight(), layer.spec.weight_shape());
      take(layer.bias(), layer.spec.bias_shape());
    }
  }
  if (params.contains("lossnet.mean")) {
    take("lossnet.mean", Shape{1, 3, 1, 1});
    const auto m = params_.get("lossnet.mean").data();
    mean_.assign(m.begin(), m.end());
  } else {
    params_.add("lossnet.mean", Tensor<T>(Shape{1, 3, 1, 1}, std::vector<T>(mean_)));
  }
  binding_ = Binding<T>::constants(params_);
}

template <typename T>
FeatureTaps<T> LossNetwork<T>::extract_taps(const Var<T>& image) const {
  const Shape& s = image.shape();
  if (s.c != 3) {
    throw ShapeError("c", "extract_taps: expected a 3-channel image, got " + to_string(s));
  }
  if (s.h < 16 || s.w < 16) {
    throw ShapeError(s.h < 16 ? "h" : "w",
                     "extract_taps: image " + to_string(s) + " smaller than 16x16");
  }
  Var<T> x = ops::shift_channels(image, mean_);
  Var<T> taps[4];
  for (std::size_t b = 0; b < layers_.size(); ++b) {
    if (b > 0) x = ops::max_pool2(x);
    for (std::size_t i = 0; i < layers_[b].size(); ++i) {
      x = apply(binding_, layers_[b][i], x, Activation::Relu);
      if (i == 0) taps[b] = x;
    }
  }
  return {taps[0], taps[1], taps[2], taps[3]};
}

template <typename T>
LossNetwork<T> load_loss_weights(const std::string& path, const LossProfile& profile) {
  const ParamSet<float> file = load_checkpoint(path);
  if constexpr (std::is_same_v<T, float>) {
    return LossNetwork<T>(profile, file);
  } else {
    return LossNetwork<T>(profile, file.template cast<T>());
  }
}

template <typename T>
LossNetwork<T> init_loss_weights(std::uint64_t seed, const LossProfile& profile) {
  return LossNetwork<T>(profile, seed);
}

template class LossNetwork<float>;
template class LossNetwork<double>;
template LossNetwork<float> load_loss_weights(const std::string&, const LossProfile&);
template LossNetwork<double> load_loss_weights(const std::string&, const LossProfile&);
template LossNetwork<float> init_loss_weights(std::uint64_t, const LossProfile&);
template LossNetwork<double> init_loss_weights(std::uint64_t, const LossProfile&);

}  // namespace ctdp
