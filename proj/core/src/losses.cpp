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
#include "ctdp/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ctdp/error.hpp"
#include "ctdp/ops.hpp"

namespace ctdp {

void LossWeights::validate() const {
  const double values[] = {bc, bs, adv, mtv, fdc};
  for (std::size_t i = 0; i < 5; ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw std::invalid_argument("loss weight for " + std::string(kComponentNames[i]) +
                                  " must be finite and >= 0");
    }
  }
}

StyleBranch parse_style_branch(std::string_view name) {
  if (name == "shallow") return StyleBranch::Shallow;
  if (name == "deep") return StyleBranch::Deep;
  if (name == "fusion") return StyleBranch::Fusion;
  throw std::invalid_argument("unknown style branch '" + std::string(name) + "'");
}

const std::vector<int>& BranchLayerSets::layers(StyleBranch branch) {
  static const std::vector<int> shallow{0, 1};
  static const std::vector<int> deep{1, 2, 3};
  static const std::vector<int> fusion{0, 1, 2, 3};
  switch (branch) {
    case StyleBranch::Shallow: return shallow;
    case StyleBranch::Deep: return deep;
    case StyleBranch::Fusion: return fusion;
  }
  throw std::invalid_argument("unknown style branch");
}

template <typename T>
const Var<T>& tap(const FeatureTaps<T>& taps, int index) {
  switch (index) {
    case 0: return taps.relu1_1;
    case 1: return taps.relu2_1;
    case 2: return taps.relu3_1;
    case 3: return taps.relu4_1;
    default: throw std::out_of_range("tap index " + std::to_string(index));
  }
}

template <typename T>
Var<T> gram(const Var<T>& features) {
  const Shape s = features.shape();
  if (s.numel() == 0) throw ShapeError("numel", "gram: empty tensor");
  const std::int64_t c = s.c;
  const std::int64_t hw = s.plane();
  const double norm = 1.0 / static_cast<double>(c * hw);
  Tensor<T> g(Shape{s.n, 1, c, c});
  const Tensor<T>& f = features.value();
  for (std::int64_t n = 0; n < s.n; ++n) {
    T* out = g.plane(n, 0);
    for (std::int64_t i = 0; i < c; ++i) {
      const T* fi = f.plane(n, i);
      for (std::int64_t j = i; j < c; ++j) {
        const T* fj = f.plane(n, j);
        double acc = 0.0;
        for (std::int64_t k = 0; k < hw; ++k) acc += static_cast<double>(fi[k]) * fj[k];
        out[i * c + j] = out[j * c + i] = static_cast<T>(acc * norm);
      }
    }
  }
  return make_result<T>(
      "gram", std::move(g), {features},
      [norm](const detail::Node<T>& self, const Tensor<T>& gout, std::span<Tensor<T>> gin) {
        const Tensor<T>& f = self.inputs[0]->value;
        const Shape& s = f.shape();
        const std::int64_t c = s.c;
        const std::int64_t hw = s.plane();
        Tensor<T> df(s);
        // dF_i = sum_j (dG_ij + dG_ji) F_j / (c h w)
        std::vector<double> acc(static_cast<std::size_t>(hw));
        for (std::int64_t n = 0; n < s.n; ++n) {
          const T* dg = gout.plane(n, 0);
          for (std::int64_t i = 0; i < c; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::int64_t j = 0; j < c; ++j) {
              const double k = (static_cast<double>(dg[i * c + j]) + dg[j * c + i]) * norm;
              if (k == 0.0) continue;
              const T* fj = f.plane(n, j);
              for (std::int64_t p = 0; p < hw; ++p) acc[static_cast<std::size_t>(p)] += k * fj[p];
            }
            T* out = df.plane(n, i);
            for (std::int64_t p = 0; p < hw; ++p) out[p] = static_cast<T>(acc[static_cast<std::size_t>(p)]);
          }
        }
        gin[0] = std::move(df);
      });
}

template <typename T>
Var<T> branch_style_loss(const FeatureTaps<T>& cs, const FeatureTaps<T>& style,
                         StyleBranch branch) {
  Var<T> total;
  for (int l : BranchLayerSets::layers(branch)) {
    const Var<T>& a = tap(cs, l);
    const Var<T>& b = tap(style, l);
    if (a.shape().n != b.shape().n) {
      throw ShapeError("n", "branch_style_loss: stylized batch " + to_string(a.shape()) +
                                " vs style batch " + to_string(b.shape()));
    }
    Var<T> term = ops::mse(gram(a), gram(b));
    total = total.defined() ? ops::add_scaled(total, term, T(1), T(1)) : term;
  }
  return total;
}

template <typename T>
Var<T> content_loss(const FeatureTaps<T>& cs, const FeatureTaps<T>& content) {
  return ops::mse(tap(cs, BranchLayerSets::kContent), tap(content, BranchLayerSets::kContent));
}

template <typename T>
Var<T> masked_tv_loss(const Var<T>& image, const Tensor<T>& weight) {
  const Shape s = image.shape();
  const Shape& ws = weight.shape();
  if (ws.c != 1) throw ShapeError("c", "masked_tv_loss: weight map must have one channel");
  if (ws.n != s.n && ws.n != 1) {
    throw ShapeError("n", "masked_tv_loss: weight batch " + to_string(ws) + " vs image " +
                              to_string(s));
  }
  if (ws.h != s.h) throw ShapeError("h", "masked_tv_loss: weight " + to_string(ws) + " vs image " + to_string(s));
  if (ws.w != s.w) throw ShapeError("w", "masked_tv_loss: weight " + to_string(ws) + " vs image " + to_string(s));
  if (s.n == 0) throw ShapeError("n", "masked_tv_loss: empty batch");

  const Tensor<T>& x = image.value();
  double total = 0.0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    const T* m = weight.plane(ws.n == 1 ? 0 : n, 0);
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* p = x.plane(n, c);
      for (std::int64_t y = 0; y < s.h; ++y) {
        for (std::int64_t xx = 0; xx < s.w; ++xx) {
          const std::int64_t i = y * s.w + xx;
          if (xx + 1 < s.w) {
            const double d = static_cast<double>(p[i + 1]) - p[i];
            total += d * d * m[i + 1];
          }
          if (y + 1 < s.h) {
            const double d = static_cast<double>(p[i + s.w]) - p[i];
            total += d * d * m[i + s.w];
          }
        }
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(s.n);
  return make_result<T>(
      "masked_tv_loss", Tensor<T>::scalar(static_cast<T>(total * inv_n)), {image},
      [weight, inv_n](const detail::Node<T>& self, const Tensor<T>& g, std::span<Tensor<T>> gin) {
        const Tensor<T>& x = self.inputs[0]->value;
        const Shape& s = x.shape();
        const double k = 2.0 * static_cast<double>(g.item()) * inv_n;
        Tensor<T> dx(s);
        for (std::int64_t n = 0; n < s.n; ++n) {
          const T* m = weight.plane(weight.shape().n == 1 ? 0 : n, 0);
          for (std::int64_t c = 0; c < s.c; ++c) {
            const T* p = x.plane(n, c);
            T* d = dx.plane(n, c);
            for (std::int64_t y = 0; y < s.h; ++y) {
              for (std::int64_t xx = 0; xx < s.w; ++xx) {
                const std::int64_t i = y * s.w + xx;
                double acc = 0.0;
                if (xx + 1 < s.w) acc -= k * m[i + 1] * (static_cast<double>(p[i + 1]) - p[i]);
                if (xx > 0) acc += k * m[i] * (static_cast<double>(p[i]) - p[i - 1]);
                if (y + 1 < s.h) acc -= k * m[i + s.w] * (static_cast<double>(p[i + s.w]) - p[i]);
                if (y > 0) acc += k * m[i] * (static_cast<double>(p[i]) - p[i - s.w]);
                d[i] = static_cast<T>(acc);
              }
            }
          }
        }
        gin[0] = std::move(dx);
      });
}

template <typename T>
Tensor<T> smooth_region_weight(const Tensor<T>& edge_mask) {
  Tensor<T> out(edge_mask.shape());
  auto src = edge_mask.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = T(1) - src[i];
  return out;
}

template <typename T>
Var<T> fdc_loss(const Var<T>& fused_decode_of_shallow, const Var<T>& shallow_decode) {
  if (fused_decode_of_shallow.shape().c != 3 || shallow_decode.shape().c != 3) {
    throw ShapeError("c", "fdc_loss: expects 3-channel images, got " +
                              to_string(fused_decode_of_shallow.shape()) + " and " +
                              to_string(shallow_decode.shape()));
  }
  return ops::mse(fused_decode_of_shallow, shallow_decode);
}

namespace {

template <typename T>
void check_batch(const Var<T>& style, const std::vector<Var<T>>& fakes) {
  if (fakes.empty()) throw std::invalid_argument("adversarial loss: no stylized batches");
  for (const auto& f : fakes) {
    if (f.shape() != style.shape()) {
      throw ShapeError(f.shape().n != style.shape().n ? "n" : "hw",
                       "adversarial loss: stylized batch " + to_string(f.shape()) +
                           " vs style batch " + to_string(style.shape()));
    }
  }
}

template <typename T>
Var<T> mean_bce(const CtdpModel<T>& model, const Binding<T>& disc,
                const std::vector<Var<T>>& images, T target) {
  Var<T> total;
  const T w = T(1) / static_cast<T>(images.size());
  for (const auto& img : images) {
    Var<T> term = ops::bce_with_logits(model.discriminate(disc, img), target);
    total = total.defined() ? ops::add_scaled(total, term, T(1), w) : ops::scale(term, w);
  }
  return total;
}

}  // namespace

template <typename T>
Var<T> discriminator_loss(const CtdpModel<T>& model, const Binding<T>& disc,
                          const Var<T>& style, const std::vector<Var<T>>& fakes) {
  check_batch(style, fakes);
  std::vector<Var<T>> detached;
  detached.reserve(fakes.size());
  for (const auto& f : fakes) detached.push_back(detach(f));
  Var<T> real = ops::bce_with_logits(model.discriminate(disc, style), T(1));
  return ops::add_scaled(real, mean_bce(model, disc, detached, T(0)), T(1), T(1));
}

template <typename T>
Var<T> generator_adversarial_loss(const CtdpModel<T>& model, const Binding<T>& disc,
                                  const std::vector<Var<T>>& fakes) {
  if (fakes.empty()) throw std::invalid_argument("adversarial loss: no stylized batches");
  return mean_bce(model, disc, fakes, T(1));
}

template <typename T>
AdversarialLosses<T> adversarial_losses(const CtdpModel<T>& model, const Binding<T>& disc,
                                        const Var<T>& style, const std::vector<Var<T>>& fakes) {
  check_batch(style, fakes);
  return {generator_adversarial_loss(model, disc, fakes),
          discriminator_loss(model, disc, style, fakes)};
}

template <typename T>
Var<T> total_loss(const LossComponents<T>& c, const LossWeights& weights) {
  weights.validate();
  const Var<T>* parts[] = {&c.bc, &c.bs, &c.adv, &c.mtv, &c.fdc};
  const double lambdas[] = {weights.bc, weights.bs, weights.adv, weights.mtv, weights.fdc};
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string name(kComponentNames[i]);
    if (!parts[i]->defined()) throw UsageError("total_loss: component " + name + " missing");
    if (parts[i]->value().numel() != 1) {
      throw ShapeError("numel", "total_loss: component " + name + " is not a scalar");
    }
    if (!std::isfinite(static_cast<double>(parts[i]->value().item()))) {
      throw NonFiniteError(name, "total_loss: component " + name + " is not finite");
    }
  }
  Var<T> total = ops::add_scaled(*parts[0], *parts[1], static_cast<T>(lambdas[0]),
                                 static_cast<T>(lambdas[1]));
  for (std::size_t i = 2; i < 5; ++i) {
    total = ops::add_scaled(total, *parts[i], T(1), static_cast<T>(lambdas[i]));
  }
  return total;
}

#define CTDP_INSTANTIATE_LOSSES(T)                                                              \
  template const Var<T>& tap(const FeatureTaps<T>&, int);                                       \
  template Var<T> gram(const Var<T>&);                                                          \
  template Var<T> branch_style_loss(const FeatureTaps<T>&, const FeatureTaps<T>&, StyleBranch); \
  template Var<T> content_loss(const FeatureTaps<T>&, const FeatureTaps<T>&);                   \
  template Var<T> masked_tv_loss(const Var<T>&, const Tensor<T>&);                              \
  template Tensor<T> smooth_region_weight(const Tensor<T>&);                                    \
  template Var<T> fdc_loss(const Var<T>&, const Var<T>&);                                       \
  template Var<T> discriminator_loss(const CtdpModel<T>&, const Binding<T>&, const Var<T>&,     \
                                     const std::vector<Var<T>>&);                               \
  template Var<T> generator_adversarial_loss(const CtdpModel<T>&, const Binding<T>&,            \
                                             const std::vector<Var<T>>&);                       \
  template AdversarialLosses<T> adversarial_losses(const CtdpModel<T>&, const Binding<T>&,      \
                                                   const Var<T>&, const std::vector<Var<T>>&);  \
  template Var<T> total_loss(const LossComponents<T>&, const LossWeights&);

CTDP_INSTANTIATE_LOSSES(float)
CTDP_INSTANTIATE_LOSSES(double)

#undef CTDP_INSTANTIATE_LOSSES

}  // namespace ctdp
