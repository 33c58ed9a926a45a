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
#include <string_view>
#include <vector>

#include "ctdp/layers.hpp"
#include "ctdp/params.hpp"

namespace ctdp {

/// Channel widths of the network. The defaults put the color branch at
/// 20,079 trainable scalars.
struct ModelConfig {
  std::int64_t shallow_width = 28;
  std::int64_t deep_width1 = 16;
  std::int64_t deep_width2 = 32;
  std::int64_t deep_width3 = 48;
  std::int64_t disc_width1 = 32;
  std::int64_t disc_width2 = 64;
  std::int64_t disc_width3 = 128;
  std::int64_t disc_kernel = 3;
};

/// Parameter groups; each is the first component of its tensors' names.
namespace group {
inline constexpr std::string_view kEncS = "enc_s";
inline constexpr std::string_view kDecS = "dec_s";
inline constexpr std::string_view kEncD = "enc_d";
inline constexpr std::string_view kDecD = "dec_d";
inline constexpr std::string_view kDecF = "dec_f";
inline constexpr std::string_view kDae = "dae";
inline constexpr std::string_view kDisc = "disc";
}  // namespace group

/// color = enc_s + dec_s, texture = enc_d + dec_d, fusion = dae + dec_f,
/// all = the three together. The discriminator is training-only and belongs
/// to none of them.
enum class Branch { Color, Texture, Fusion, All };

Branch parse_branch(std::string_view name);
std::vector<std::string_view> branch_groups(Branch b);

template <typename T>
std::int64_t param_count(const ParamSet<T>& params, Branch branch);

/// Layer graph of the generator and discriminator.
struct Architecture {
  explicit Architecture(const ModelConfig& config = {});

  ModelConfig config;
  // Shallow encoder: two dense 3x3 then two separable, all stride 1.
  ConvLayer enc_s_conv1, enc_s_conv2;
  SeparableLayer enc_s_sep3, enc_s_sep4;
  // Shallow decoder, the mirror image ending in 3 channels.
  SeparableLayer dec_s_sep1, dec_s_sep2;
  ConvLayer dec_s_conv3, dec_s_conv4;
  // Deep encoder: 9x9, two stride-2 stages, two separable at 1/4 resolution.
  ConvLayer enc_d_conv1, enc_d_conv2;
  SeparableLayer enc_d_sep3, enc_d_sep4, enc_d_sep5;
  // Dae bridge: sigmoid-gated separable block then a stride-2 conv.
  SeparableLayer dae_gate;
  ConvLayer dae_down;
  ConvLayer disc_conv1, disc_conv2, disc_conv3, disc_conv4;

  struct DeepDecoder {
    SeparableLayer sep1, sep2;
    ConvLayer conv3, conv4, conv5;
  };
  DeepDecoder dec_d, dec_f;
};

/// Activations of the shallow encoder, all post-ReLU.
template <typename T>
struct ShallowTrace {
  Var<T> conv1, conv2, conv3, conv4;
};

template <typename T>
struct ForwardOutputs {
  Var<T> f_s;    // shallow features, full resolution
  Var<T> f_d;    // deep features, 1/4 resolution
  Var<T> dae_s;  // Dae(f_s), 1/4 resolution
  Var<T> f_f;    // lambda_s * Dae(f_s) + lambda_d * f_d
  Var<T> cs_c;   // color transfer
  Var<T> cs_t;   // texture transfer
  Var<T> cs_f;   // fused decoding
};

/// The dual-pipeline generator plus its patch discriminator. Forward methods
/// take a Binding so the same code serves inference (constants) and
/// training (taped leaves).
template <typename T>
class CtdpModel {
 public:
  explicit CtdpModel(const ModelConfig& config = {});

  /// He-uniform weights, zero biases, reproducible from the seed alone.
  static CtdpModel initialized(std::uint64_t seed, const ModelConfig& config = {});

  const Architecture& arch() const noexcept { return arch_; }
  ParamSet<T>& params() noexcept { return params_; }
  const ParamSet<T>& params() const noexcept { return params_; }

  /// Replaces the parameters; every expected tensor must be present with the
  /// expected shape, except "disc." tensors, which fall back to the seed-0
  /// initialization. Extra names are ignored.
  void load_params(const ParamSet<T>& source);

  ShallowTrace<T> trace_shallow(const Binding<T>& b, const Var<T>& image) const;
  /// Encoder layers after conv1, for feeding a modified conv1 activation.
  Var<T> encode_shallow_from_conv1(const Binding<T>& b, const Var<T>& conv1) const;
  Var<T> encode_shallow(const Binding<T>& b, const Var<T>& image) const;
  Var<T> encode_deep(const Binding<T>& b, const Var<T>& image) const;
  Var<T> decode_color(const Binding<T>& b, const Var<T>& f_s) const;
  Var<T> decode_texture(const Binding<T>& b, const Var<T>& f_d) const;
  Var<T> decode_fused(const Binding<T>& b, const Var<T>& f_f) const;
  Var<T> dae(const Binding<T>& b, const Var<T>& f_s) const;
  Var<T> fuse(const Binding<T>& b, const Var<T>& f_s, const Var<T>& f_d, T lambda_s,
              T lambda_d) const;
  ForwardOutputs<T> forward_all(const Binding<T>& b, const Var<T>& image, T lambda_s,
                                T lambda_d) const;
  /// Patch logits, one per 16x16 input cell.
  Var<T> discriminate(const Binding<T>& b, const Var<T>& image) const;

 private:
  Var<T> decode_deep(const Binding<T>& b, const Architecture::DeepDecoder& d,
                     const Var<T>& f) const;

  Architecture arch_;
  ParamSet<T> params_;
};

/// lambda_s * shallow + lambda_d * deep.
template <typename T>
Var<T> fuse_features(const Var<T>& shallow, const Var<T>& deep, T lambda_s, T lambda_d);

/// Adds amplitude * N(0, 1) to the listed channels of `features`; all other
/// channels are returned bit-identical. The noise at a pixel depends only on
/// (seed, sample, channel, origin_y + y, origin_x + x).
template <typename T>
Tensor<T> inject_noise(const Tensor<T>& features, const std::vector<std::int64_t>& channels,
                       T amplitude, std::uint64_t seed, std::int64_t origin_y = 0,
                       std::int64_t origin_x = 0);

extern template class CtdpModel<float>;
extern template class CtdpModel<double>;

}  // namespace ctdp
