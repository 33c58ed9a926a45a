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
#include "ctdp/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ctdp/error.hpp"
#include "ctdp/ops.hpp"

namespace ctdp {

Branch parse_branch(std::string_view name) {
  if (name == "color") return Branch::Color;
  if (name == "texture") return Branch::Texture;
  if (name == "fusion") return Branch::Fusion;
  if (name == "all") return Branch::All;
  throw std::invalid_argument("unknown branch '" + std::string(name) +
                              "' (expected color, texture, fusion or all)");
}

std::vector<std::string_view> branch_groups(Branch b) {
  switch (b) {
    case Branch::Color:
      return {group::kEncS, group::kDecS};
    case Branch::Texture:
      return {group::kEncD, group::kDecD};
    case Branch::Fusion:
      return {group::kDae, group::kDecF};
    case Branch::All:
      return {group::kEncS, group::kDecS, group::kEncD, group::kDecD, group::kDae, group::kDecF};
  }
  return {};
}

template <typename T>
std::int64_t param_count(const ParamSet<T>& params, Branch branch) {
  std::int64_t total = 0;
  for (const auto& g : branch_groups(branch)) total += params.scalar_count(std::string(g) + ".");
  return total;
}

namespace {

Architecture::DeepDecoder make_deep_decoder(const std::string& prefix, const ModelConfig& c) {
  return {
      .sep1 = {prefix + ".sep1", c.deep_width3, c.deep_width3},
      .sep2 = {prefix + ".sep2", c.deep_width3, c.deep_width3},
      .conv3 = {prefix + ".conv3", ConvSpec{c.deep_width3, c.deep_width2, 3, 1}},
      .conv4 = {prefix + ".conv4", ConvSpec{c.deep_width2, c.deep_width1, 3, 1}},
      .conv5 = {prefix + ".conv5", ConvSpec{c.deep_width1, 3, 3, 1}},
  };
}

}  // namespace

Architecture::Architecture(const ModelConfig& c)
    : config(c),
      enc_s_conv1{"enc_s.conv1", ConvSpec{3, c.shallow_width, 3, 1}},
      enc_s_conv2{"enc_s.conv2", ConvSpec{c.shallow_width, c.shallow_width, 3, 1}},
      enc_s_sep3{"enc_s.sep3", c.shallow_width, c.shallow_width},
      enc_s_sep4{"enc_s.sep4", c.shallow_width, c.shallow_width},
      dec_s_sep1{"dec_s.sep1", c.shallow_width, c.shallow_width},
      dec_s_sep2{"dec_s.sep2", c.shallow_width, c.shallow_width},
      dec_s_conv3{"dec_s.conv3", ConvSpec{c.shallow_width, c.shallow_width, 3, 1}},
      dec_s_conv4{"dec_s.conv4", ConvSpec{c.shallow_width, 3, 3, 1}},
      enc_d_conv1{"enc_d.conv1", ConvSpec{3, c.deep_width1, 9, 1}},
      enc_d_conv2{"enc_d.conv2", ConvSpec{c.deep_width1, c.deep_width2, 3, 2}},
      enc_d_sep3{"enc_d.sep3", c.deep_width2, c.deep_width3, 3, 2},
      enc_d_sep4{"enc_d.sep4", c.deep_width3, c.deep_width3},
      enc_d_sep5{"enc_d.sep5", c.deep_width3, c.deep_width3},
      dae_gate{"dae.gate", c.shallow_width, c.shallow_width},
      dae_down{"dae.down", ConvSpec{c.shallow_width, c.deep_width3, 3, 2}},
      disc_conv1{"disc.conv1", ConvSpec{3, c.disc_width1, c.disc_kernel, 2}},
      disc_conv2{"disc.conv2", ConvSpec{c.disc_width1, c.disc_width2, c.disc_kernel, 2}},
      disc_conv3{"disc.conv3", ConvSpec{c.disc_width2, c.disc_width3, c.disc_kernel, 2}},
      disc_conv4{"disc.conv4", ConvSpec{c.disc_width3, 1, c.disc_kernel, 2}},
      dec_d(make_deep_decoder("dec_d", c)),
      dec_f(make_deep_decoder("dec_f", c)) {}

template <typename T>
CtdpModel<T>::CtdpModel(const ModelConfig& config) : arch_(config) {}

template <typename T>
CtdpModel<T> CtdpModel<T>::initialized(std::uint64_t seed, const ModelConfig& config) {
  CtdpModel m(config);
  auto engine = rng::make_engine(seed, 0x6374'6470ULL);
  const Architecture& a = m.arch_;
  ParamSet<T>& p = m.params_;
  init_layer(p, a.enc_s_conv1, engine);
  init_layer(p, a.enc_s_conv2, engine);
  init_layer(p, a.enc_s_sep3, engine);
  init_layer(p, a.enc_s_sep4, engine);
  init_layer(p, a.dec_s_sep1, engine);
  init_layer(p, a.dec_s_sep2, engine);
  init_layer(p, a.dec_s_conv3, engine);
  init_layer(p, a.dec_s_conv4, engine);
  init_layer(p, a.enc_d_conv1, engine);
  init_layer(p, a.enc_d_conv2, engine);
  init_layer(p, a.enc_d_sep3, engine);
  init_layer(p, a.enc_d_sep4, engine);
  init_layer(p, a.enc_d_sep5, engine);
  for (const auto* d : {&a.dec_d, &a.dec_f}) {
    init_layer(p, d->sep1, engine);
    init_layer(p, d->sep2, engine);
    init_layer(p, d->conv3, engine);
    init_layer(p, d->conv4, engine);
    init_layer(p, d->conv5, engine);
  }
  init_layer(p, a.dae_gate, engine);
  init_layer(p, a.dae_down, engine);
  init_layer(p, a.disc_conv1, engine);
  init_layer(p, a.disc_conv2, engine);
  init_layer(p, a.disc_conv3, engine);
  init_layer(p, a.disc_conv4, engine);
  return m;
}

template <typename T>
void CtdpModel<T>::load_params(const ParamSet<T>& source) {
  const CtdpModel reference = initialized(0, arch_.config);
  ParamSet<T> loaded;
  for (const auto& name : reference.params().names()) {
    if (!source.contains(name)) {
      if (in_group(name, group::kDisc)) {
        loaded.add(name, reference.params().get(name));
        continue;
      }
      throw UsageError("model parameters: missing tensor " + name);
    }
    const Tensor<T>& t = source.get(name);
    if (t.shape() != reference.params().get(name).shape()) {
      throw ShapeError(name, "model parameters: tensor " + name + " has shape " +
                                 to_string(t.shape()) + ", expected " +
                                 to_string(reference.params().get(name).shape()));
    }
    loaded.add(name, t);
  }
  params_ = std::move(loaded);
}

template <typename T>
ShallowTrace<T> CtdpModel<T>::trace_shallow(const Binding<T>& b, const Var<T>& image) const {
  if (image.shape().c != 3) {
    throw ShapeError("c", "encode_shallow: expected a 3-channel image, got " +
                              to_string(image.shape()));
  }
  ShallowTrace<T> t;
  t.conv1 = apply(b, arch_.enc_s_conv1, image, Activation::Relu);
  t.conv2 = apply(b, arch_.enc_s_conv2, t.conv1, Activation::Relu);
  t.conv3 = apply(b, arch_.enc_s_sep3, t.conv2, Activation::Relu);
  t.conv4 = apply(b, arch_.enc_s_sep4, t.conv3, Activation::Relu);
  return t;
}

template <typename T>
Var<T> CtdpModel<T>::encode_shallow_from_conv1(const Binding<T>& b, const Var<T>& conv1) const {
  Var<T> x = apply(b, arch_.enc_s_conv2, conv1, Activation::Relu);
  x = apply(b, arch_.enc_s_sep3, x, Activation::Relu);
  return apply(b, arch_.enc_s_sep4, x, Activation::Relu);
}

template <typename T>
Var<T> CtdpModel<T>::encode_shallow(const Binding<T>& b, const Var<T>& image) const {
  return trace_shallow(b, image).conv4;
}

template <typename T>
Var<T> CtdpModel<T>::encode_deep(const Binding<T>& b, const Var<T>& image) const {
  const Shape& s = image.shape();
  if (s.c != 3) {
    throw ShapeError("c", "encode_deep: expected a 3-channel image, got " + to_string(s));
  }
  if (s.h % 4 != 0) throw ShapeError("h", "encode_deep: height must be a multiple of 4");
  if (s.w % 4 != 0) throw ShapeError("w", "encode_deep: width must be a multiple of 4");
  Var<T> x = apply(b, arch_.enc_d_conv1, image, Activation::Relu);
  x = apply(b, arch_.enc_d_conv2, x, Activation::Relu);
  x = apply(b, arch_.enc_d_sep3, x, Activation::Relu);
  x = apply(b, arch_.enc_d_sep4, x, Activation::Relu);
  return apply(b, arch_.enc_d_sep5, x, Activation::Relu);
}

template <typename T>
Var<T> CtdpModel<T>::decode_color(const Binding<T>& b, const Var<T>& f_s) const {
  Var<T> x = apply(b, arch_.dec_s_sep1, f_s, Activation::Relu);
  x = apply(b, arch_.dec_s_sep2, x, Activation::Relu);
  x = apply(b, arch_.dec_s_conv3, x, Activation::Relu);
  return ops::sigmoid(apply(b, arch_.dec_s_conv4, x));
}

template <typename T>
Var<T> CtdpModel<T>::decode_deep(const Binding<T>& b, const Architecture::DeepDecoder& d,
                                 const Var<T>& f) const {
  Var<T> x = apply(b, d.sep1, f, Activation::Relu);
  x = apply(b, d.sep2, x, Activation::Relu);
  x = apply(b, d.conv3, ops::upsample_nearest(x, 2), Activation::Relu);
  x = apply(b, d.conv4, ops::upsample_nearest(x, 2), Activation::Relu);
  return ops::sigmoid(apply(b, d.conv5, x));
}

template <typename T>
Var<T> CtdpModel<T>::decode_texture(const Binding<T>& b, const Var<T>& f_d) const {
  return decode_deep(b, arch_.dec_d, f_d);
}

template <typename T>
Var<T> CtdpModel<T>::decode_fused(const Binding<T>& b, const Var<T>& f_f) const {
  return decode_deep(b, arch_.dec_f, f_f);
}

template <typename T>
Var<T> CtdpModel<T>::dae(const Binding<T>& b, const Var<T>& f_s) const {
  const Var<T> attention = ops::sigmoid(apply(b, arch_.dae_gate, f_s));
  const Var<T> gated = ops::mul(f_s, attention);
  return ops::avg_pool2(apply(b, arch_.dae_down, gated));
}

template <typename T>
Var<T> fuse_features(const Var<T>& shallow, const Var<T>& deep, T lambda_s, T lambda_d) {
  if (!std::isfinite(lambda_s) || !std::isfinite(lambda_d)) {
    throw std::invalid_argument("fuse: fusion weights must be finite");
  }
  return ops::add_scaled(shallow, deep, lambda_s, lambda_d);
}

template <typename T>
Var<T> CtdpModel<T>::fuse(const Binding<T>& b, const Var<T>& f_s, const Var<T>& f_d, T lambda_s,
                          T lambda_d) const {
  return fuse_features(dae(b, f_s), f_d, lambda_s, lambda_d);
}

template <typename T>
ForwardOutputs<T> CtdpModel<T>::forward_all(const Binding<T>& b, const Var<T>& image, T lambda_s,
                                            T lambda_d) const {
  ForwardOutputs<T> out;
  out.f_s = encode_shallow(b, image);
  out.f_d = encode_deep(b, image);
  out.cs_c = decode_color(b, out.f_s);
  out.cs_t = decode_texture(b, out.f_d);
  out.dae_s = dae(b, out.f_s);
  out.f_f = fuse_features(out.dae_s, out.f_d, lambda_s, lambda_d);
  out.cs_f = decode_fused(b, out.f_f);
  return out;
}

template <typename T>
Var<T> CtdpModel<T>::discriminate(const Binding<T>& b, const Var<T>& image) const {
  const T slope = T(0.2);
  Var<T> x = ops::leaky_relu(apply(b, arch_.disc_conv1, image), slope);
  x = ops::leaky_relu(apply(b, arch_.disc_conv2, x), slope);
  x = ops::leaky_relu(apply(b, arch_.disc_conv3, x), slope);
  return apply(b, arch_.disc_conv4, x);
}

template <typename T>
Tensor<T> inject_noise(const Tensor<T>& features, const std::vector<std::int64_t>& channels,
                       T amplitude, std::uint64_t seed, std::int64_t origin_y,
                       std::int64_t origin_x) {
  const Shape& s = features.shape();
  for (std::int64_t c : channels) {
    if (c < 0 || c >= s.c) {
      throw std::out_of_range("inject_noise: channel " + std::to_string(c) + " outside [0, " +
                              std::to_string(s.c) + ")");
    }
  }
  Tensor<T> out = features;
  if (amplitude == T(0)) return out;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c : channels) {
      T* plane = out.plane(n, c);
      for (std::int64_t y = 0; y < s.h; ++y) {
        const auto gy = static_cast<std::uint64_t>(origin_y + y);
        for (std::int64_t x = 0; x < s.w; ++x) {
          const auto gx = static_cast<std::uint64_t>(origin_x + x);
          const double z = rng::keyed_normal(seed, static_cast<std::uint64_t>(n * s.c + c), gy, gx);
          plane[y * s.w + x] += amplitude * static_cast<T>(z);
        }
      }
    }
  }
  return out;
}

template class CtdpModel<float>;
template class CtdpModel<double>;
template std::int64_t param_count(const ParamSet<float>&, Branch);
template std::int64_t param_count(const ParamSet<double>&, Branch);
template Var<float> fuse_features(const Var<float>&, const Var<float>&, float, float);
template Var<double> fuse_features(const Var<double>&, const Var<double>&, double, double);
template Tensor<float> inject_noise(const Tensor<float>&, const std::vector<std::int64_t>&, float,
                                    std::uint64_t, std::int64_t, std::int64_t);
template Tensor<double> inject_noise(const Tensor<double>&, const std::vector<std::int64_t>&,
                                     double, std::uint64_t, std::int64_t, std::int64_t);

}  // namespace ctdp
