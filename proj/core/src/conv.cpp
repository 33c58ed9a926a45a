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
#include "ctdp/conv.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "ctdp/error.hpp"

namespace ctdp {
namespace {

// Register tile of the dense kernel: kOcBlock output channels by
// kDenseXBlock consecutive output columns.
#if defined(__AVX512F__)
constexpr std::size_t kVecBytes = 64;
constexpr std::int64_t kOcBlock = 8;
constexpr std::int64_t kDenseXBlock = 32;
#else
constexpr std::size_t kVecBytes = 32;
constexpr std::int64_t kOcBlock = 4;
constexpr std::int64_t kDenseXBlock = 16;
#endif
constexpr std::int64_t kDepthwiseXBlock = 64;
constexpr std::int64_t kMaxXBlock = 64;
// Pixels per band of the 1x1 kernel.
constexpr std::int64_t kPointBand = 2048;

template <typename T>
using Buffer = std::vector<T, detail::BufferAllocator<T>>;

/// Reflect-padded copy of `channels` planes. With stride 2 each padded row is
/// split into its even and odd columns ("phases") so that every tap of a
/// strided kernel reads a contiguous run.
template <typename T>
struct PaddedPlanes {
  std::int64_t channels = 0;
  std::int64_t phases = 1;
  std::int64_t hp = 0;
  std::int64_t wq = 0;
  Buffer<T> data;

  const T* row(std::int64_t c, std::int64_t phase, std::int64_t y) const {
    return data.data() + ((c * phases + phase) * hp + y) * wq;
  }
};

template <typename T>
PaddedPlanes<T> pad_planes(const T* src, std::int64_t channels, std::int64_t h, std::int64_t w,
                           std::int64_t pad, std::int64_t stride) {
  PaddedPlanes<T> p;
  p.channels = channels;
  p.phases = stride;
  p.hp = h + 2 * pad;
  const std::int64_t wp = w + 2 * pad;
  p.wq = (wp + stride - 1) / stride;
  // Slack lets the register tile read past the last row.
  const std::int64_t body = channels * p.phases * p.hp * p.wq;
  p.data.resize(static_cast<std::size_t>(body + 2 * kMaxXBlock + 16));
  std::fill(p.data.begin() + body, p.data.end(), T(0));
  std::vector<std::int64_t> col(static_cast<std::size_t>(wp));
  for (std::int64_t x = 0; x < wp; ++x) col[x] = reflect_index(x - pad, w);
  for (std::int64_t c = 0; c < channels; ++c) {
    const T* plane = src + c * h * w;
    for (std::int64_t y = 0; y < p.hp; ++y) {
      const T* in_row = plane + reflect_index(y - pad, h) * w;
      if (stride == 1) {
        T* out_row = p.data.data() + (c * p.hp + y) * p.wq;
        for (std::int64_t x = 0; x < pad; ++x) out_row[x] = in_row[col[x]];
        std::copy(in_row, in_row + w, out_row + pad);
        for (std::int64_t x = pad + w; x < wp; ++x) out_row[x] = in_row[col[x]];
      } else {
        T* even = p.data.data() + ((c * 2) * p.hp + y) * p.wq;
        T* odd = p.data.data() + ((c * 2 + 1) * p.hp + y) * p.wq;
        std::int64_t x = 0;
        for (; x + 1 < wp; x += 2) {
          even[x / 2] = in_row[col[x]];
          odd[x / 2] = in_row[col[x + 1]];
        }
        if (x < wp) {
          even[x / 2] = in_row[col[x]];
          odd[x / 2] = T(0);
        }
      }
    }
  }
  return p;
}

// Weights regrouped as [block][in][ky][kx][kOcBlock], zero-filled past
// out_channels.
template <typename T>
std::vector<T> pack_dense_weights(const Tensor<T>& weight, const ConvSpec& spec) {
  const std::int64_t k = spec.kernel;
  const std::int64_t blocks = (spec.out_channels + kOcBlock - 1) / kOcBlock;
  const std::int64_t per_block = spec.in_channels * k * k * kOcBlock;
  std::vector<T> packed(static_cast<std::size_t>(blocks * per_block), T(0));
  const auto w = weight.data();
  for (std::int64_t oc = 0; oc < spec.out_channels; ++oc) {
    const std::int64_t b = oc / kOcBlock;
    const std::int64_t lane = oc % kOcBlock;
    for (std::int64_t ic = 0; ic < spec.in_channels; ++ic) {
      for (std::int64_t t = 0; t < k * k; ++t) {
        packed[b * per_block + (ic * k * k + t) * kOcBlock + lane] =
            w[(oc * spec.in_channels + ic) * k * k + t];
      }
    }
  }
  return packed;
}

// Native SIMD vectors (GCC/Clang vector extension).
typedef float VecF __attribute__((vector_size(kVecBytes)));
typedef double VecD __attribute__((vector_size(kVecBytes)));

template <typename T>
struct VecOf;
template <>
struct VecOf<float> {
  using type = VecF;
};
template <>
struct VecOf<double> {
  using type = VecD;
};

template <typename T>
using Vec = typename VecOf<T>::type;

template <typename T>
constexpr std::int64_t kVecLanes = static_cast<std::int64_t>(kVecBytes / sizeof(T));

template <typename T>
inline Vec<T> load_vec(const T* p) {
  Vec<T> v;
  __builtin_memcpy(&v, p, sizeof(v));
  return v;
}

template <typename T>
inline void store_vec(T* p, const Vec<T>& v) {
  __builtin_memcpy(p, &v, sizeof(v));
}

template <typename T>
inline Vec<T> activate(Vec<T> v, Activation act) {
  if (act == Activation::Relu) v = v > T(0) ? v : Vec<T>{};
  return v;
}

template <typename T, std::int64_t XB>
inline void store_tile(T* dst, const Vec<T>* acc, std::int64_t valid_x, Activation act) {
  constexpr std::int64_t L = kVecLanes<T>;
  constexpr std::int64_t V = XB / L;
  if (valid_x == XB) {
    for (std::int64_t v = 0; v < V; ++v) store_vec(dst + v * L, activate<T>(acc[v], act));
  } else {
    T tmp[XB];
    for (std::int64_t v = 0; v < V; ++v) store_vec(tmp + v * L, activate<T>(acc[v], act));
    for (std::int64_t j = 0; j < valid_x; ++j) dst[j] = tmp[j];
  }
}

// One register tile: kOcBlock channels of block `wb` over XB columns
// starting at each tap's source pointer `src(ic, ky, kx)`.
template <typename T, std::int64_t XB, typename Src>
inline void dense_tile(const T* wb, const T* bias_lane, std::int64_t in_channels, std::int64_t k,
                       Src src, Vec<T> (&acc)[kOcBlock][XB / kVecLanes<T>]) {
  constexpr std::int64_t L = kVecLanes<T>;
  constexpr std::int64_t V = XB / L;
  // Local accumulators stay in registers; writing through `acc` in the loop
  // forces spills.
  Vec<T> a[kOcBlock][V];
  for (std::int64_t o = 0; o < kOcBlock; ++o) {
    for (std::int64_t v = 0; v < V; ++v) a[o][v] = Vec<T>{} + bias_lane[o];
  }
  const T* wp = wb;
  for (std::int64_t ic = 0; ic < in_channels; ++ic) {
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx, wp += kOcBlock) {
        const T* p = src(ic, ky, kx);
        Vec<T> xv[V];
        for (std::int64_t v = 0; v < V; ++v) xv[v] = load_vec(p + v * L);
        for (std::int64_t o = 0; o < kOcBlock; ++o) {
          const T wv = wp[o];
          for (std::int64_t v = 0; v < V; ++v) a[o][v] += wv * xv[v];
        }
      }
    }
  }
  for (std::int64_t o = 0; o < kOcBlock; ++o) {
    for (std::int64_t v = 0; v < V; ++v) acc[o][v] = a[o][v];
  }
}

template <typename T>
void dense_forward_sample(const PaddedPlanes<T>& in, const ConvSpec& spec,
                          const std::vector<T>& packed, const T* bias, T* out,
                          std::int64_t ho, std::int64_t wo, Activation act) {
  constexpr std::int64_t XB = kDenseXBlock;
  constexpr std::int64_t V = XB / kVecLanes<T>;
  const std::int64_t k = spec.kernel;
  const std::int64_t s = spec.stride;
  const std::int64_t blocks = (spec.out_channels + kOcBlock - 1) / kOcBlock;
  const std::int64_t per_block = spec.in_channels * k * k * kOcBlock;
  std::vector<T> bias_lanes(static_cast<std::size_t>(blocks * kOcBlock), T(0));
  std::copy(bias, bias + spec.out_channels, bias_lanes.begin());

  // Rows outermost so the input rows of one output row stay in cache while
  // every channel block consumes them.
#if defined(CTDP_USE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t y = 0; y < ho; ++y) {
    for (std::int64_t b = 0; b < blocks; ++b) {
      const T* wb = packed.data() + b * per_block;
      const std::int64_t oc0 = b * kOcBlock;
      const std::int64_t valid_oc = std::min(kOcBlock, spec.out_channels - oc0);
      for (std::int64_t x0 = 0; x0 < wo; x0 += XB) {
        Vec<T> acc[kOcBlock][V];
        dense_tile<T, XB>(wb, bias_lanes.data() + oc0, spec.in_channels, k,
                          [&](std::int64_t ic, std::int64_t ky, std::int64_t kx) {
                            return in.row(ic, kx % s, s * y + ky) + x0 + kx / s;
                          },
                          acc);
        const std::int64_t valid_x = std::min(XB, wo - x0);
        for (std::int64_t o = 0; o < valid_oc; ++o) {
          store_tile<T, XB>(out + ((oc0 + o) * ho + y) * wo + x0, acc[o], valid_x, act);
        }
      }
    }
  }
}

// 1x1 stride-1 dense conv read straight from the input; each plane is one
// long row. The final partial tile goes through a zero-padded copy.
template <typename T>
void pointwise_forward_sample(const T* in, const ConvSpec& spec, const std::vector<T>& packed,
                              const T* bias, T* out, std::int64_t plane, Activation act) {
  constexpr std::int64_t XB = kDenseXBlock;
  constexpr std::int64_t V = XB / kVecLanes<T>;
  const std::int64_t cin = spec.in_channels;
  const std::int64_t blocks = (spec.out_channels + kOcBlock - 1) / kOcBlock;
  const std::int64_t per_block = cin * kOcBlock;
  std::vector<T> bias_lanes(static_cast<std::size_t>(blocks * kOcBlock), T(0));
  std::copy(bias, bias + spec.out_channels, bias_lanes.begin());
  const std::int64_t full = plane / XB * XB;
  std::vector<T> tail(static_cast<std::size_t>(cin * XB), T(0));
  for (std::int64_t ic = 0; ic < cin; ++ic) {
    std::copy(in + ic * plane + full, in + (ic + 1) * plane, tail.begin() + ic * XB);
  }

#if defined(CTDP_USE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t p0 = 0; p0 < plane; p0 += kPointBand) {
    const std::int64_t p1 = std::min(plane, p0 + kPointBand);
    for (std::int64_t b = 0; b < blocks; ++b) {
      const T* wb = packed.data() + b * per_block;
      const std::int64_t oc0 = b * kOcBlock;
      const std::int64_t valid_oc = std::min(kOcBlock, spec.out_channels - oc0);
      for (std::int64_t x0 = p0; x0 < p1; x0 += XB) {
        Vec<T> acc[kOcBlock][V];
        if (x0 < full) {
          dense_tile<T, XB>(wb, bias_lanes.data() + oc0, cin, 1,
                            [&](std::int64_t ic, std::int64_t, std::int64_t) {
                              return in + ic * plane + x0;
                            },
                            acc);
        } else {
          dense_tile<T, XB>(wb, bias_lanes.data() + oc0, cin, 1,
                            [&](std::int64_t ic, std::int64_t, std::int64_t) {
                              return tail.data() + ic * XB;
                            },
                            acc);
        }
        const std::int64_t valid_x = std::min(XB, plane - x0);
        for (std::int64_t o = 0; o < valid_oc; ++o) {
          store_tile<T, XB>(out + (oc0 + o) * plane + x0, acc[o], valid_x, act);
        }
      }
    }
  }
}

template <typename T>
void depthwise_forward_sample(const PaddedPlanes<T>& in, const ConvSpec& spec,
                              const T* weight, const T* bias, T* out, std::int64_t ho,
                              std::int64_t wo, Activation act) {
  constexpr std::int64_t XB = kDepthwiseXBlock;
  constexpr std::int64_t L = kVecLanes<T>;
  constexpr std::int64_t V = XB / L;
  const std::int64_t k = spec.kernel;
  const std::int64_t s = spec.stride;
#if defined(CTDP_USE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t c = 0; c < spec.out_channels; ++c) {
    const T* wc = weight + c * k * k;
    for (std::int64_t y = 0; y < ho; ++y) {
      for (std::int64_t x0 = 0; x0 < wo; x0 += XB) {
        Vec<T> acc[V];
        for (std::int64_t v = 0; v < V; ++v) acc[v] = Vec<T>{} + bias[c];
        for (std::int64_t ky = 0; ky < k; ++ky) {
          for (std::int64_t kx = 0; kx < k; ++kx) {
            const T wv = wc[ky * k + kx];
            const T* src = in.row(c, kx % s, s * y + ky) + x0 + kx / s;
            for (std::int64_t v = 0; v < V; ++v) acc[v] += wv * load_vec(src + v * L);
          }
        }
        store_tile<T, XB>(out + (c * ho + y) * wo + x0, acc, std::min(XB, wo - x0), act);
      }
    }
  }
}

// Fixed-order lane reduction so dot products vectorize without
// reassociation.
template <typename T>
T dot(const T* a, const T* b, std::int64_t n) {
  constexpr std::int64_t kLanes = 8;
  T lanes[kLanes] = {};
  std::int64_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::int64_t j = 0; j < kLanes; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  T tail = T(0);
  for (; i < n; ++i) tail += a[i] * b[i];
  T sum = T(0);
  for (std::int64_t j = 0; j < kLanes; ++j) sum += lanes[j];
  return sum + tail;
}

// Reflect padding folded back: every padded position adds its gradient to
// the source pixel it was copied from.
template <typename T>
void fold_padded_gradient(const std::vector<T>& gpad, std::int64_t hp, std::int64_t wp,
                          std::int64_t pad, std::int64_t h, std::int64_t w, T* dst) {
  for (std::int64_t y = 0; y < hp; ++y) {
    const std::int64_t sy = reflect_index(y - pad, h);
    const T* g = gpad.data() + y * wp;
    T* d = dst + sy * w;
    if (pad == 0) {
      for (std::int64_t x = 0; x < w; ++x) d[x] += g[x];
      continue;
    }
    for (std::int64_t x = 0; x < wp; ++x) d[reflect_index(x - pad, w)] += g[x];
  }
}

}  // namespace

template <typename T>
void validate_conv(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                   const Tensor<T>& bias) {
  if (spec.kernel < 1 || spec.kernel % 2 == 0) {
    throw ShapeError("kernel", "conv2d: kernel must be odd and positive, got " +
                                   std::to_string(spec.kernel));
  }
  if (spec.stride != 1 && spec.stride != 2) {
    throw ShapeError("stride", "conv2d: stride must be 1 or 2, got " + std::to_string(spec.stride));
  }
  if (spec.depthwise && spec.in_channels != spec.out_channels) {
    throw ShapeError("c", "conv2d: depthwise layer needs in_channels == out_channels");
  }
  const Shape& s = input.shape();
  if (s.c != spec.in_channels) {
    throw ShapeError("c", "conv2d: input has " + std::to_string(s.c) + " channels, layer expects " +
                              std::to_string(spec.in_channels));
  }
  const std::int64_t pad = spec.pad();
  if (s.h <= pad || (spec.stride == 2 && s.h < spec.kernel)) {
    throw ShapeError("h", "conv2d: height " + std::to_string(s.h) + " too small for kernel " +
                              std::to_string(spec.kernel));
  }
  if (s.w <= pad || (spec.stride == 2 && s.w < spec.kernel)) {
    throw ShapeError("w", "conv2d: width " + std::to_string(s.w) + " too small for kernel " +
                              std::to_string(spec.kernel));
  }
  if (weight.shape() != spec.weight_shape()) {
    throw ShapeError("weight", "conv2d: weight shape " + to_string(weight.shape()) +
                                   " does not match " + to_string(spec.weight_shape()));
  }
  if (bias.shape() != spec.bias_shape()) {
    throw ShapeError("bias", "conv2d: bias shape " + to_string(bias.shape()) +
                                 " does not match " + to_string(spec.bias_shape()));
  }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                         const Tensor<T>& bias, Activation act) {
  validate_conv(input, spec, weight, bias);
  const Shape& s = input.shape();
  const Shape os = spec.output_shape(s);
  auto out = Tensor<T>::uninitialized(os);
  std::vector<T> packed;
  if (!spec.depthwise) packed = pack_dense_weights(weight, spec);
  const bool pointwise = !spec.depthwise && spec.kernel == 1 && spec.stride == 1;
  for (std::int64_t n = 0; n < s.n; ++n) {
    if (pointwise) {
      pointwise_forward_sample(input.plane(n, 0), spec, packed, bias.data().data(),
                               out.plane(n, 0), s.plane(), act);
      continue;
    }
    const auto padded = pad_planes(input.plane(n, 0), s.c, s.h, s.w, spec.pad(), spec.stride);
    if (spec.depthwise) {
      depthwise_forward_sample(padded, spec, weight.data().data(), bias.data().data(),
                               out.plane(n, 0), os.h, os.w, act);
    } else {
      dense_forward_sample(padded, spec, packed, bias.data().data(), out.plane(n, 0), os.h, os.w,
                           act);
    }
  }
  return out;
}

template <typename T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Shape& input_shape,
                                const ConvSpec& spec, const Tensor<T>& weight) {
  const Shape os = spec.output_shape(input_shape);
  if (grad_out.shape() != os) {
    throw ShapeError("grad", "conv2d backward: gradient shape " + to_string(grad_out.shape()) +
                                 " expected " + to_string(os));
  }
  const std::int64_t k = spec.kernel;
  const std::int64_t s = spec.stride;
  const std::int64_t pad = spec.pad();
  const std::int64_t hp = input_shape.h + 2 * pad;
  const std::int64_t wp = input_shape.w + 2 * pad;
  Tensor<T> grad_in(input_shape);
  const auto w = weight.data();
  std::vector<T> gpad(static_cast<std::size_t>(hp * wp));

  for (std::int64_t n = 0; n < input_shape.n; ++n) {
    for (std::int64_t ic = 0; ic < input_shape.c; ++ic) {
      std::fill(gpad.begin(), gpad.end(), T(0));
      const std::int64_t oc_begin = spec.depthwise ? ic : 0;
      const std::int64_t oc_end = spec.depthwise ? ic + 1 : spec.out_channels;
      for (std::int64_t oc = oc_begin; oc < oc_end; ++oc) {
        const T* g = grad_out.plane(n, oc);
        const T* wk = spec.depthwise ? w.data() + oc * k * k
                                     : w.data() + (oc * spec.in_channels + ic) * k * k;
        for (std::int64_t ky = 0; ky < k; ++ky) {
          for (std::int64_t kx = 0; kx < k; ++kx) {
            const T wv = wk[ky * k + kx];
            for (std::int64_t y = 0; y < os.h; ++y) {
              T* dst = gpad.data() + (s * y + ky) * wp + kx;
              const T* src = g + y * os.w;
              if (s == 1) {
                for (std::int64_t x = 0; x < os.w; ++x) dst[x] += wv * src[x];
              } else {
                for (std::int64_t x = 0; x < os.w; ++x) dst[2 * x] += wv * src[x];
              }
            }
          }
        }
      }
      fold_padded_gradient(gpad, hp, wp, pad, input_shape.h, input_shape.w, grad_in.plane(n, ic));
    }
  }
  return grad_in;
}

template <typename T>
Tensor<T> conv2d_backward_weight(const Tensor<T>& grad_out, const Tensor<T>& input,
                                 const ConvSpec& spec) {
  const Shape& s = input.shape();
  const Shape os = spec.output_shape(s);
  if (grad_out.shape() != os) {
    throw ShapeError("grad", "conv2d backward: gradient shape " + to_string(grad_out.shape()) +
                                 " expected " + to_string(os));
  }
  const std::int64_t k = spec.kernel;
  const std::int64_t st = spec.stride;
  Tensor<T> grad_w(spec.weight_shape());
  auto gw = grad_w.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    const auto padded = pad_planes(input.plane(n, 0), s.c, s.h, s.w, spec.pad(), st);
#if defined(CTDP_USE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t oc = 0; oc < spec.out_channels; ++oc) {
      const T* g = grad_out.plane(n, oc);
      const std::int64_t ic_begin = spec.depthwise ? oc : 0;
      const std::int64_t ic_end = spec.depthwise ? oc + 1 : spec.in_channels;
      for (std::int64_t ic = ic_begin; ic < ic_end; ++ic) {
        T* dst = spec.depthwise ? gw.data() + oc * k * k
                                : gw.data() + (oc * spec.in_channels + ic) * k * k;
        for (std::int64_t ky = 0; ky < k; ++ky) {
          for (std::int64_t kx = 0; kx < k; ++kx) {
            T sum = T(0);
            for (std::int64_t y = 0; y < os.h; ++y) {
              sum += dot(g + y * os.w, padded.row(ic, kx % st, st * y + ky) + kx / st, os.w);
            }
            dst[ky * k + kx] += sum;
          }
        }
      }
    }
  }
  return grad_w;
}

template <typename T>
Tensor<T> conv2d_backward_bias(const Tensor<T>& grad_out, const ConvSpec& spec) {
  const Shape& s = grad_out.shape();
  if (s.c != spec.out_channels) {
    throw ShapeError("c", "conv2d backward: gradient has wrong channel count");
  }
  Tensor<T> grad_b(spec.bias_shape());
  std::vector<T> ones(static_cast<std::size_t>(s.plane()), T(1));
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      grad_b.data()[c] += dot(grad_out.plane(n, c), ones.data(), s.plane());
    }
  }
  return grad_b;
}

#define CTDP_INSTANTIATE_CONV(T)                                                             \
  template void validate_conv<T>(const Tensor<T>&, const ConvSpec&, const Tensor<T>&,       \
                                 const Tensor<T>&);                                          \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const ConvSpec&, const Tensor<T>&, \
                                       const Tensor<T>&, Activation);                        \
  template Tensor<T> conv2d_backward_input<T>(const Tensor<T>&, const Shape&,               \
                                              const ConvSpec&, const Tensor<T>&);            \
  template Tensor<T> conv2d_backward_weight<T>(const Tensor<T>&, const Tensor<T>&,          \
                                               const ConvSpec&);                             \
  template Tensor<T> conv2d_backward_bias<T>(const Tensor<T>&, const ConvSpec&);

CTDP_INSTANTIATE_CONV(float)
CTDP_INSTANTIATE_CONV(double)

#undef CTDP_INSTANTIATE_CONV

}  // namespace ctdp
