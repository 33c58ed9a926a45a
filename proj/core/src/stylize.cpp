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
#include "ctdp/stylize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ctdp/error.hpp"
#include "ctdp/image.hpp"
#include "ctdp/ops.hpp"

namespace ctdp {

StylizeMode parse_stylize_mode(std::string_view name) {
  if (name == "color") return StylizeMode::Color;
  if (name == "texture") return StylizeMode::Texture;
  if (name == "fused") return StylizeMode::Fused;
  throw std::invalid_argument("unknown mode '" + std::string(name) +
                              "' (expected color, texture or fused)");
}

void StylizeOptions::validate() const {
  if (!std::isfinite(lambda_s)) throw std::invalid_argument("lambda_s must be finite");
  if (!std::isfinite(intensity)) throw std::invalid_argument("intensity must be finite");
  if (!std::isfinite(noise.amplitude)) throw std::invalid_argument("noise amplitude must be finite");
  if (tile < 0 || tile % 4 != 0) throw std::invalid_argument("tile must be a multiple of 4");
  if (halo < 0 || halo % 4 != 0) throw std::invalid_argument("halo must be a multiple of 4");
  if (smooth_input && (smooth_radius < 1 || !(smooth_eps > 0.0))) {
    throw std::invalid_argument("smoothing needs radius >= 1 and eps > 0");
  }
}

namespace {

Tensor4 run_region(const CtdpModel<float>& model, const Binding<float>& b, const Tensor4& region,
                   const StylizeOptions& o, std::int64_t origin_y, std::int64_t origin_x) {
  const Var<float> x = constant(region);
  Var<float> conv1 = ops::relu(apply(b, model.arch().enc_s_conv1, x));
  if (o.noise.amplitude != 0.0 && !o.noise.channels.empty()) {
    conv1 = constant(inject_noise(conv1.value(), o.noise.channels,
                                  static_cast<float>(o.noise.amplitude), o.noise.seed, origin_y,
                                  origin_x));
  }
  const Var<float> f_s = model.encode_shallow_from_conv1(b, conv1);
  if (o.mode == StylizeMode::Color) return model.decode_color(b, f_s).value();
  const float ld = o.mode == StylizeMode::Texture ? 1.0f : static_cast<float>(o.intensity);
  const Var<float> f_d = model.encode_deep(b, x);
  const Var<float> f_f = model.fuse(b, f_s, f_d, static_cast<float>(o.lambda_s), ld);
  return model.decode_fused(b, f_f).value();
}

void paste(Tensor4& dst, const Tensor4& src, std::int64_t sy, std::int64_t sx, std::int64_t dy,
           std::int64_t dx, std::int64_t h, std::int64_t w) {
  for (std::int64_t c = 0; c < dst.shape().c; ++c) {
    const float* s = src.plane(0, c);
    float* d = dst.plane(0, c);
    for (std::int64_t r = 0; r < h; ++r) {
      std::copy_n(s + (sy + r) * src.shape().w + sx, w, d + (dy + r) * dst.shape().w + dx);
    }
  }
}

}  // namespace

Tensor4 stylize(const CtdpModel<float>& model, const Tensor4& image, const StylizeOptions& o) {
  o.validate();
  const Shape& s = image.shape();
  if (s.n != 1) throw ShapeError("n", "stylize: expects a single image, got " + to_string(s));
  if (s.c != 3) throw ShapeError("c", "stylize: expects 3 channels, got " + to_string(s));
  if (s.h < 4 || s.w < 4) throw ShapeError(s.h < 4 ? "h" : "w", "stylize: image too small");

  const Tensor4 source =
      o.smooth_input ? guided_filter(image, o.smooth_radius, o.smooth_eps) : image;
  const std::int64_t ph = (4 - s.h % 4) % 4;
  const std::int64_t pw = (4 - s.w % 4) % 4;
  const Tensor4 padded = ph || pw ? reflect_pad(source, 0, ph, 0, pw) : source;
  const std::int64_t H = padded.shape().h;
  const std::int64_t W = padded.shape().w;

  const Binding<float> b = Binding<float>::constants(model.params());
  Tensor4 out(Shape{1, 3, H, W});
  const std::int64_t tile = o.tile > 0 ? o.tile : std::max(H, W);
  for (std::int64_t ty = 0; ty < H; ty += tile) {
    for (std::int64_t tx = 0; tx < W; tx += tile) {
      const std::int64_t th = std::min(tile, H - ty);
      const std::int64_t tw = std::min(tile, W - tx);
      const std::int64_t y0 = std::max<std::int64_t>(0, ty - o.halo);
      const std::int64_t x0 = std::max<std::int64_t>(0, tx - o.halo);
      const std::int64_t y1 = std::min(H, ty + th + o.halo);
      const std::int64_t x1 = std::min(W, tx + tw + o.halo);
      const bool whole = y0 == 0 && x0 == 0 && y1 == H && x1 == W;
      const Tensor4 region = whole ? padded : crop(padded, y0, x0, y1 - y0, x1 - x0);
      const Tensor4 result = run_region(model, b, region, o, y0, x0);
      paste(out, result, ty - y0, tx - x0, ty, tx, th, tw);
    }
  }
  return ph || pw ? crop(out, 0, 0, s.h, s.w) : out;
}

}  // namespace ctdp
