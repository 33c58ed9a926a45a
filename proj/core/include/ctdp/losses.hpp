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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "ctdp/lossnet.hpp"
#include "ctdp/model.hpp"

namespace ctdp {

struct LossWeights {
  double bc = 1e0;
  double bs = 1e5;
  double adv = 1e0;
  double mtv = 2e-5;
  double fdc = 1e0;

  /// Throws std::invalid_argument naming the first negative or non-finite
  /// weight.
  void validate() const;
};

enum class StyleBranch { Shallow, Deep, Fusion };

StyleBranch parse_style_branch(std::string_view name);

/// Tap indices: 0 = relu1_1, 1 = relu2_1, 2 = relu3_1, 3 = relu4_1.
struct BranchLayerSets {
  static const std::vector<int>& layers(StyleBranch branch);
  static constexpr int kContent = 1;
};

template <typename T>
const Var<T>& tap(const FeatureTaps<T>& taps, int index);

/// Per-sample F F^T / (c h w) as an n x 1 x c x c tensor.
template <typename T>
Var<T> gram(const Var<T>& features);

/// Sum over the branch's layer set of the Gram mean squared difference,
/// averaged over the batch. Samples are paired by batch index.
template <typename T>
Var<T> branch_style_loss(const FeatureTaps<T>& cs, const FeatureTaps<T>& style,
                         StyleBranch branch);

/// Mean squared error at relu2_1.
template <typename T>
Var<T> content_loss(const FeatureTaps<T>& cs, const FeatureTaps<T>& content);

/// Squared horizontal differences weighted by `weight` at the right-hand
/// pixel plus squared vertical differences weighted at the lower pixel,
/// summed over channels and space and averaged over the batch. `weight` is
/// n x 1 x h x w (or 1 x 1 x h x w, shared) and broadcasts over channels.
template <typename T>
Var<T> masked_tv_loss(const Var<T>& image, const Tensor<T>& weight);

/// 1 - mask, the weight that penalizes smooth regions only.
template <typename T>
Tensor<T> smooth_region_weight(const Tensor<T>& edge_mask);

/// Per-sample ||a - b||^2 / (3 h w), averaged over the batch.
template <typename T>
Var<T> fdc_loss(const Var<T>& fused_decode_of_shallow, const Var<T>& shallow_decode);

/// BCE(D(style), 1) + BCE(D(detached fakes), 0) with the fake term averaged
/// over every patch of every fake batch.
template <typename T>
Var<T> discriminator_loss(const CtdpModel<T>& model, const Binding<T>& disc,
                          const Var<T>& style, const std::vector<Var<T>>& fakes);

/// Non-saturating BCE(D(fakes), 1). Pass a constant binding to keep the
/// discriminator out of the generator's gradient.
template <typename T>
Var<T> generator_adversarial_loss(const CtdpModel<T>& model, const Binding<T>& disc,
                                  const std::vector<Var<T>>& fakes);

template <typename T>
struct AdversarialLosses {
  Var<T> g_loss;
  Var<T> d_loss;
};

template <typename T>
AdversarialLosses<T> adversarial_losses(const CtdpModel<T>& model, const Binding<T>& disc,
                                        const Var<T>& style, const std::vector<Var<T>>& fakes);

template <typename T>
struct LossComponents {
  Var<T> bc, bs, adv, mtv, fdc;
};

inline constexpr std::array<std::string_view, 5> kComponentNames = {"L_bc", "L_bs", "L_adv",
                                                                    "L_mtv", "L_fdc"};

/// Weighted sum in the order bc, bs, adv, mtv, fdc. A non-finite component
/// raises NonFiniteError whose where() is the component name.
template <typename T>
Var<T> total_loss(const LossComponents<T>& components, const LossWeights& weights);

}  // namespace ctdp
