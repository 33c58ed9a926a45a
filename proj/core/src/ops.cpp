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
#include "ctdp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctdp/error.hpp"

namespace ctdp::ops {
namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& x = a.shape();
  const Shape& y = b.shape();
  const char* axis = x.n != y.n ? "n" : x.c != y.c ? "c" : x.h != y.h ? "h" : x.w != y.w ? "w" : nullptr;
  if (axis != nullptr) {
    throw ShapeError(axis, std::string(op) + ": shape mismatch on axis " + axis + " (" +
                               to_string(x) + " vs " + to_string(y) + ")");
  }
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& x, F f) {
  Tensor<T> out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& input, const ConvSpec& spec, const Var<T>& weight,
              const Var<T>& bias, Activation act) {
  Tensor<T> out = conv2d_forward(input.value(), spec, weight.value(), bias.value(), act);
  return make_result<T>(
      act == Activation::Relu ? "conv2d_relu" : "conv2d", std::move(out), {input, weight, bias},
      [spec, act](const detail::Node<T>& self, const Tensor<T>& g_out, std::span<Tensor<T>> gin) {
        Tensor<T> masked;
        if (act == Activation::Relu) {
          masked = Tensor<T>::uninitialized(g_out.shape());
          const auto y = self.value.data();
          const auto src = g_out.data();
          auto dst = masked.data();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = y[i] > T(0) ? src[i] : T(0);
        }
        const Tensor<T>& g = act == Activation::Relu ? masked : g_out;
        const auto& x = self.inputs[0];
        if (x->requires_grad) {
          gin[0] = conv2d_backward_input(g, x->value.shape(), spec, self.inputs[1]->value);
        }
        if (self.inputs[1]->requires_grad) gin[1] = conv2d_backward_weight(g, x->value, spec);
        if (self.inputs[2]->requires_grad) gin[2] = conv2d_backward_bias(g, spec);
      });
}

template <typename T>
Var<T> dw_separable_conv(const Var<T>& input, const ConvSpec& depthwise,
                         const Var<T>& depthwise_weight, const Var<T>& depthwise_bias,
                         const ConvSpec& pointwise, const Var<T>& pointwise_weight,
                         const Var<T>& pointwise_bias, Activation act) {
  if (!depthwise.depthwise) {
    throw ShapeError("depthwise", "dw_separable_conv: first stage must be depthwise");
  }
  if (pointwise.kernel != 1 || pointwise.stride != 1 || pointwise.depthwise) {
    throw ShapeError("pointwise", "dw_separable_conv: second stage must be a dense 1x1 conv");
  }
  const Var<T> mid = conv2d(input, depthwise, depthwise_weight, depthwise_bias);
  return conv2d(mid, pointwise, pointwise_weight, pointwise_bias, act);
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = map(x.value(), [](T v) { return v > T(0) ? v : T(0); });
  return make_result<T>("relu", std::move(out), {x},
                        [](const detail::Node<T>& self, const Tensor<T>& g,
                           std::span<Tensor<T>> gin) {
                          const auto src = self.inputs[0]->value.data();
                          Tensor<T> d(g.shape());
                          auto dd = d.data();
                          auto gg = g.data();
                          for (std::size_t i = 0; i < dd.size(); ++i) {
                            dd[i] = src[i] > T(0) ? gg[i] : T(0);
                          }
                          gin[0] = std::move(d);
                        });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> out = map(x.value(), [slope](T v) { return v > T(0) ? v : slope * v; });
  return make_result<T>("leaky_relu", std::move(out), {x},
                        [slope](const detail::Node<T>& self, const Tensor<T>& g,
                                std::span<Tensor<T>> gin) {
                          const auto src = self.inputs[0]->value.data();
                          Tensor<T> d(g.shape());
                          auto dd = d.data();
                          auto gg = g.data();
                          for (std::size_t i = 0; i < dd.size(); ++i) {
                            dd[i] = src[i] > T(0) ? gg[i] : slope * gg[i];
                          }
                          gin[0] = std::move(d);
                        });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out = map(x.value(), [](T v) { return stable_sigmoid(v); });
  return make_result<T>("sigmoid", std::move(out), {x},
                        [](const detail::Node<T>& self, const Tensor<T>& g,
                           std::span<Tensor<T>> gin) {
                          const auto y = self.value.data();
                          Tensor<T> d(g.shape());
                          auto dd = d.data();
                          auto gg = g.data();
                          for (std::size_t i = 0; i < dd.size(); ++i) {
                            dd[i] = gg[i] * y[i] * (T(1) - y[i]);
                          }
                          gin[0] = std::move(d);
                        });
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int factor) {
  if (factor < 1) throw ShapeError("factor", "upsample_nearest: factor must be >= 1");
  const Shape s = x.shape();
  const std::int64_t f = factor;
  Tensor<T> out(Shape{s.n, s.c, s.h * f, s.w * f});
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* src = x.value().plane(n, c);
      T* dst = out.plane(n, c);
      const std::int64_t wo = s.w * f;
      for (std::int64_t y = 0; y < s.h; ++y) {
        T* row = dst + y * f * wo;
        for (std::int64_t xx = 0; xx < s.w; ++xx) {
          std::fill(row + xx * f, row + (xx + 1) * f, src[y * s.w + xx]);
        }
        for (std::int64_t r = 1; r < f; ++r) std::copy(row, row + wo, row + r * wo);
      }
    }
  }
  return make_result<T>(
      "upsample_nearest", std::move(out), {x},
      [f](const detail::Node<T>& self, const Tensor<T>& g, std::span<Tensor<T>> gin) {
        const Shape s = self.inputs[0]->value.shape();
        Tensor<T> d(s);
        const std::int64_t wo = s.w * f;
        for (std::int64_t n = 0; n < s.n; ++n) {
          for (std::int64_t c = 0; c < s.c; ++c) {
            const T* src = g.plane(n, c);
            T* dst = d.plane(n, c);
            for (std::int64_t y = 0; y < s.h * f; ++y) {
              for (std::int64_t xx = 0; xx < wo; ++xx) dst[(y / f) * s.w + xx / f] += src[y * wo + xx];
            }
          }
        }
        gin[0] = std::move(d);
      });
}

template <typename T>
Var<T> add_scaled(const Var<T>& a, const Var<T>& b, T alpha, T beta) {
  require_same_shape("add_scaled", a.value(), b.value());
  Tensor<T> out(a.shape());
  {
    auto x = a.value().data();
    auto y = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * x[i] + beta * y[i];
  }
  return make_result<T>("add_scaled", std::move(out), {a, b},
                        [alpha, beta](const detail::Node<T>&, const Tensor<T>& g,
                                      std::span<Tensor<T>> gin) {
                          gin[0] = map(g, [alpha](T v) { return alpha * v; });
                          gin[1] = map(g, [beta](T v) { return beta * v; });
                        });
}

template <typename T>
Var<T> scale(const Var<T>& x, T alpha) {
  Tensor<T> out = map(x.value(), [alpha](T v) { return alpha * v; });
  return make_result<T>("scale", std::move(out), {x},
                        [alpha](const detail::Node<T>&, const Tensor<T>& g,
                                std::span<Tensor<T>> gin) {
                          gin[0] = map(g, [alpha](T v) { return alpha * v; });
                        });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor<T> out(a.shape());
  {
    auto x = a.value().data();
    auto y = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  }
  return make_result<T>("mul", std::move(out), {a, b},
                        [](const detail::Node<T>& self, const Tensor<T>& g,
                           std::span<Tensor<T>> gin) {
                          const auto x = self.inputs[0]->value.data();
                          const auto y = self.inputs[1]->value.data();
                          const auto gg = g.data();
                          Tensor<T> da(g.shape());
                          Tensor<T> db(g.shape());
                          auto pa = da.data();
                          auto pb = db.data();
                          for (std::size_t i = 0; i < gg.size(); ++i) {
                            pa[i] = gg[i] * y[i];
                            pb[i] = gg[i] * x[i];
                          }
                          gin[0] = std::move(da);
                          gin[1] = std::move(db);
                        });
}

namespace {

template <typename T>
Shape pooled_shape(const char* op, const Shape& s) {
  if (s.h < 2 || s.w < 2) {
    throw ShapeError(s.h < 2 ? "h" : "w", std::string(op) + ": input " + to_string(s) +
                                              " smaller than the 2x2 window");
  }
  return Shape{s.n, s.c, s.h / 2, s.w / 2};
}

}  // namespace

template <typename T>
Var<T> avg_pool2(const Var<T>& x) {
  const Shape s = x.shape();
  const Shape os = pooled_shape<T>("avg_pool2", s);
  Tensor<T> out(os);
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const T* src = x.value().data().data() + p * s.plane();
    T* dst = out.data().data() + p * os.plane();
    for (std::int64_t y = 0; y < os.h; ++y) {
      const T* r0 = src + 2 * y * s.w;
      const T* r1 = r0 + s.w;
      for (std::int64_t xx = 0; xx < os.w; ++xx) {
        dst[y * os.w + xx] =
            T(0.25) * ((r0[2 * xx] + r0[2 * xx + 1]) + (r1[2 * xx] + r1[2 * xx + 1]));
      }
    }
  }
  return make_result<T>(
      "avg_pool2", std::move(out), {x},
      [](const detail::Node<T>& self, const Tensor<T>& g, std::span<Tensor<T>> gin) {
        const Shape s = self.inputs[0]->value.shape();
        const Shape os = g.shape();
        Tensor<T> d(s);
        for (std::int64_t p = 0; p < s.n * s.c; ++p) {
          const T* src = g.data().data() + p * os.plane();
          T* dst = d.data().data() + p * s.plane();
          for (std::int64_t y = 0; y < os.h; ++y) {
            for (std::int64_t xx = 0; xx < os.w; ++xx) {
              const T v = T(0.25) * src[y * os.w + xx];
              dst[2 * y * s.w + 2 * xx] = v;
              dst[2 * y * s.w + 2 * xx + 1] = v;
              dst[(2 * y + 1) * s.w + 2 * xx] = v;
              dst[(2 * y + 1) * s.w + 2 * xx + 1] = v;
            }
          }
        }
        gin[0] = std::move(d);
      });
}

template <typename T>
Var<T> max_pool2(const Var<T>& x) {
  const Shape s = x.shape();
  const Shape os = pooled_shape<T>("max_pool2", s);
  Tensor<T> out(os);
  // Flat input offset of each window's maximum (first maximum in raster
  // order wins).
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(os.numel()));
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    const T* src = x.value().data().data() + p * s.plane();
    T* dst = out.data().data() + p * os.plane();
    for (std::int64_t y = 0; y < os.h; ++y) {
      for (std::int64_t xx = 0; xx < os.w; ++xx) {
        const std::int64_t cand[4] = {2 * y * s.w + 2 * xx, 2 * y * s.w + 2 * xx + 1,
                                      (2 * y + 1) * s.w + 2 * xx, (2 * y + 1) * s.w + 2 * xx + 1};
        std::int64_t best = cand[0];
        for (int i = 1; i < 4; ++i) {
          if (src[cand[i]] > src[best]) best = cand[i];
        }
        dst[y * os.w + xx] = src[best];
        (*argmax)[static_cast<std::size_t>(p * os.plane() + y * os.w + xx)] = p * s.plane() + best;
      }
    }
  }
  return make_result<T>("max_pool2", std::move(out), {x},
                        [argmax](const detail::Node<T>& self, const Tensor<T>& g,
                                 std::span<Tensor<T>> gin) {
                          Tensor<T> d(self.inputs[0]->value.shape());
                          auto dd = d.data();
                          auto gg = g.data();
                          for (std::size_t i = 0; i < gg.size(); ++i) dd[(*argmax)[i]] += gg[i];
                          gin[0] = std::move(d);
                        });
}

template <typename T>
Var<T> shift_channels(const Var<T>& x, const std::vector<T>& offsets) {
  const Shape s = x.shape();
  if (static_cast<std::int64_t>(offsets.size()) != s.c) {
    throw ShapeError("c", "shift_channels: " + std::to_string(offsets.size()) +
                              " offsets for " + std::to_string(s.c) + " channels");
  }
  Tensor<T> out(s);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* src = x.value().plane(n, c);
      T* dst = out.plane(n, c);
      for (std::int64_t i = 0; i < s.plane(); ++i) dst[i] = src[i] - offsets[c];
    }
  }
  return make_result<T>("shift_channels", std::move(out), {x},
                        [](const detail::Node<T>&, const Tensor<T>& g, std::span<Tensor<T>> gin) {
                          gin[0] = g;
                        });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = T(0);
  for (T v : x.value().data()) total += v;
  return make_result<T>("sum", Tensor<T>::scalar(total), {x},
                        [](const detail::Node<T>& self, const Tensor<T>& g,
                           std::span<Tensor<T>> gin) {
                          gin[0] = Tensor<T>(self.inputs[0]->value.shape(), g.item());
                        });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const std::int64_t count = x.value().numel();
  if (count == 0) throw ShapeError("numel", "mean: empty tensor");
  T total = T(0);
  for (T v : x.value().data()) total += v;
  return make_result<T>("mean", Tensor<T>::scalar(total / static_cast<T>(count)), {x},
                        [count](const detail::Node<T>& self, const Tensor<T>& g,
                                std::span<Tensor<T>> gin) {
                          gin[0] = Tensor<T>(self.inputs[0]->value.shape(),
                                             g.item() / static_cast<T>(count));
                        });
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mse", a.value(), b.value());
  const std::int64_t count = a.value().numel();
  if (count == 0) throw ShapeError("numel", "mse: empty tensor");
  T total = T(0);
  {
    auto x = a.value().data();
    auto y = b.value().data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T d = x[i] - y[i];
      total += d * d;
    }
  }
  return make_result<T>(
      "mse", Tensor<T>::scalar(total / static_cast<T>(count)), {a, b},
      [count](const detail::Node<T>& self, const Tensor<T>& g, std::span<Tensor<T>> gin) {
        const auto x = self.inputs[0]->value.data();
        const auto y = self.inputs[1]->value.data();
        const T k = T(2) * g.item() / static_cast<T>(count);
        Tensor<T> da(self.inputs[0]->value.shape());
        auto pa = da.data();
        for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = k * (x[i] - y[i]);
        gin[1] = map(da, [](T v) { return -v; });
        gin[0] = std::move(da);
      });
}

template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, T target) {
  const std::int64_t count = logits.value().numel();
  if (count == 0) throw ShapeError("numel", "bce_with_logits: empty tensor");
  T total = T(0);
  for (T z : logits.value().data()) {
    total += std::max(z, T(0)) - z * target + std::log1p(std::exp(-std::abs(z)));
  }
  return make_result<T>(
      "bce_with_logits", Tensor<T>::scalar(total / static_cast<T>(count)), {logits},
      [count, target](const detail::Node<T>& self, const Tensor<T>& g, std::span<Tensor<T>> gin) {
        const T k = g.item() / static_cast<T>(count);
        gin[0] = map(self.inputs[0]->value, [k, target](T z) { return k * (stable_sigmoid(z) - target); });
      });
}

#define CTDP_INSTANTIATE_OPS(T)                                                                \
  template Var<T> conv2d(const Var<T>&, const ConvSpec&, const Var<T>&, const Var<T>&, Activation);       \
  template Var<T> dw_separable_conv(const Var<T>&, const ConvSpec&, const Var<T>&,            \
                                    const Var<T>&, const ConvSpec&, const Var<T>&,            \
                                    const Var<T>&, Activation);                               \
  template Var<T> relu(const Var<T>&);                                                         \
  template Var<T> leaky_relu(const Var<T>&, T);                                                \
  template Var<T> sigmoid(const Var<T>&);                                                      \
  template Var<T> upsample_nearest(const Var<T>&, int);                                        \
  template Var<T> add_scaled(const Var<T>&, const Var<T>&, T, T);                              \
  template Var<T> scale(const Var<T>&, T);                                                     \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                           \
  template Var<T> avg_pool2(const Var<T>&);                                                    \
  template Var<T> max_pool2(const Var<T>&);                                                    \
  template Var<T> shift_channels(const Var<T>&, const std::vector<T>&);                        \
  template Var<T> sum(const Var<T>&);                                                          \
  template Var<T> mean(const Var<T>&);                                                         \
  template Var<T> mse(const Var<T>&, const Var<T>&);                                           \
  template Var<T> bce_with_logits(const Var<T>&, T);

CTDP_INSTANTIATE_OPS(float)
CTDP_INSTANTIATE_OPS(double)

#undef CTDP_INSTANTIATE_OPS

}  // namespace ctdp::ops
