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
#include "ctdp/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "ctdp/conv.hpp"
#include "ctdp/error.hpp"

namespace ctdp {
namespace {

Tensor4 from_rgb8(const std::uint8_t* rgb, std::int64_t h, std::int64_t w) {
  Tensor4 out(Shape{1, 3, h, w});
  const std::int64_t plane = h * w;
  float* dst = out.data().data();
  for (std::int64_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) dst[c * plane + i] = static_cast<float>(rgb[i * 3 + c]) / 255.0f;
  }
  return out;
}

Tensor4 load_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_rgb8(buffer.data(), img.height, img.width);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};

Tensor4 load_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  jpeg_decompress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  JDIMENSION width = 0;
  JDIMENSION height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw IoError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = info.output_width;
  height = info.output_height;
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  while (info.output_scanline < height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return from_rgb8(pixels.data(), height, width);
}

// Box mean over clipped (2r+1)^2 windows using a double prefix table.
void box_mean(const double* src, std::int64_t h, std::int64_t w, int r, double* dst,
              std::vector<double>& table) {
  const std::int64_t tw = w + 1;
  table.assign(static_cast<std::size_t>((h + 1) * tw), 0.0);
  for (std::int64_t y = 0; y < h; ++y) {
    double row = 0.0;
    for (std::int64_t x = 0; x < w; ++x) {
      row += src[y * w + x];
      table[static_cast<std::size_t>((y + 1) * tw + x + 1)] =
          table[static_cast<std::size_t>(y * tw + x + 1)] + row;
    }
  }
  for (std::int64_t y = 0; y < h; ++y) {
    const std::int64_t y0 = std::max<std::int64_t>(0, y - r);
    const std::int64_t y1 = std::min<std::int64_t>(h, y + r + 1);
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t x0 = std::max<std::int64_t>(0, x - r);
      const std::int64_t x1 = std::min<std::int64_t>(w, x + r + 1);
      const double s = table[static_cast<std::size_t>(y1 * tw + x1)] -
                       table[static_cast<std::size_t>(y0 * tw + x1)] -
                       table[static_cast<std::size_t>(y1 * tw + x0)] +
                       table[static_cast<std::size_t>(y0 * tw + x0)];
      dst[y * w + x] = s / static_cast<double>((y1 - y0) * (x1 - x0));
    }
  }
}

}  // namespace

Tensor4 load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char magic[8] = {};
  in.read(reinterpret_cast<char*>(magic), sizeof magic);
  if (in.gcount() >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(path);
  if (in.gcount() >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    return load_jpeg(path);
  }
  throw IoError("unsupported image format: " + path.string());
}

std::uint8_t quantize(float v) noexcept {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::floor(static_cast<double>(v) * 255.0 + 0.5));
}

namespace {

// Fast zlib level; output size matters less than write time for large frames.
constexpr int kPngCompression = 2;

void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
               std::int64_t width, std::int64_t height, std::int64_t channels) {
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (file == nullptr) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    std::fclose(file);
    throw IoError("cannot write " + path.string() + ": out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw IoError("cannot write " + path.string() + ": libpng error");
  }
  png_init_io(png, file);
  png_set_compression_level(png, kPngCompression);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width * channels);
  for (std::int64_t y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(file) != 0) throw IoError("cannot write " + path.string());
}

}  // namespace

void save_image(const Tensor4& image, const std::filesystem::path& path) {
  const Shape& s = image.shape();
  if (s.n != 1) throw ShapeError("n", "save_image: expects one sample, got " + to_string(s));
  if (s.c != 1 && s.c != 3) {
    throw ShapeError("c", "save_image: expects 1 or 3 channels, got " + to_string(s));
  }
  if (s.h <= 0 || s.w <= 0) throw ShapeError("h", "save_image: empty image");
  const std::int64_t plane = s.plane();
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(plane * s.c));
  const float* src = image.data().data();
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t c = 0; c < s.c; ++c) buffer[i * s.c + c] = quantize(src[c * plane + i]);
  }
  write_png(path, buffer, s.w, s.h, s.c);
}

Tensor4 resize_bilinear(const Tensor4& image, std::int64_t height, std::int64_t width) {
  const Shape& s = image.shape();
  if (height <= 0 || width <= 0) throw ShapeError("h", "resize_bilinear: empty target");
  if (height == s.h && width == s.w) return image;
  Tensor4 out(Shape{s.n, s.c, height, width});
  const double sy = static_cast<double>(s.h) / static_cast<double>(height);
  const double sx = static_cast<double>(s.w) / static_cast<double>(width);
  std::vector<std::int64_t> x0(static_cast<std::size_t>(width)), x1(x0.size());
  std::vector<double> fx(x0.size());
  for (std::int64_t x = 0; x < width; ++x) {
    const double src = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
    const auto i = std::min<std::int64_t>(static_cast<std::int64_t>(src), s.w - 1);
    x0[x] = i;
    x1[x] = std::min<std::int64_t>(i + 1, s.w - 1);
    fx[x] = src - static_cast<double>(i);
  }
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* p = image.plane(n, c);
      float* o = out.plane(n, c);
      for (std::int64_t y = 0; y < height; ++y) {
        const double src = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
        const auto y0 = std::min<std::int64_t>(static_cast<std::int64_t>(src), s.h - 1);
        const std::int64_t y1 = std::min<std::int64_t>(y0 + 1, s.h - 1);
        const double fy = src - static_cast<double>(y0);
        const float* r0 = p + y0 * s.w;
        const float* r1 = p + y1 * s.w;
        for (std::int64_t x = 0; x < width; ++x) {
          const double top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * fx[x];
          const double bot = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * fx[x];
          o[y * width + x] = static_cast<float>(top + (bot - top) * fy);
        }
      }
    }
  }
  return out;
}

Tensor4 resize_shorter_edge(const Tensor4& image, std::int64_t target) {
  const Shape& s = image.shape();
  if (target <= 0) throw std::invalid_argument("resize target must be positive");
  if (s.h <= 0 || s.w <= 0) throw ShapeError("h", "resize_shorter_edge: empty image");
  const std::int64_t shorter = std::min(s.h, s.w);
  if (shorter == target) return image;
  const double k = static_cast<double>(target) / static_cast<double>(shorter);
  const std::int64_t h = s.h == shorter ? target : std::llround(static_cast<double>(s.h) * k);
  const std::int64_t w = s.w == shorter ? target : std::llround(static_cast<double>(s.w) * k);
  return resize_bilinear(image, h, w);
}

Tensor4 crop(const Tensor4& image, std::int64_t y, std::int64_t x, std::int64_t height,
             std::int64_t width) {
  const Shape& s = image.shape();
  if (y < 0 || height < 0 || y + height > s.h) {
    throw ShapeError("h", "crop: rows [" + std::to_string(y) + ", " + std::to_string(y + height) +
                              ") outside " + to_string(s));
  }
  if (x < 0 || width < 0 || x + width > s.w) {
    throw ShapeError("w", "crop: columns [" + std::to_string(x) + ", " +
                              std::to_string(x + width) + ") outside " + to_string(s));
  }
  Tensor4 out(Shape{s.n, s.c, height, width});
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* p = image.plane(n, c);
      float* o = out.plane(n, c);
      for (std::int64_t r = 0; r < height; ++r) {
        std::copy_n(p + (y + r) * s.w + x, width, o + r * width);
      }
    }
  }
  return out;
}

Tensor4 reflect_pad(const Tensor4& image, std::int64_t top, std::int64_t bottom,
                    std::int64_t left, std::int64_t right) {
  const Shape& s = image.shape();
  if (top < 0 || bottom < 0 || top >= s.h || bottom >= s.h) {
    throw ShapeError("h", "reflect_pad: vertical pad must be in [0, h)");
  }
  if (left < 0 || right < 0 || left >= s.w || right >= s.w) {
    throw ShapeError("w", "reflect_pad: horizontal pad must be in [0, w)");
  }
  const std::int64_t h = s.h + top + bottom;
  const std::int64_t w = s.w + left + right;
  Tensor4 out(Shape{s.n, s.c, h, w});
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* p = image.plane(n, c);
      float* o = out.plane(n, c);
      for (std::int64_t y = 0; y < h; ++y) {
        const float* row = p + reflect_index(y - top, s.h) * s.w;
        for (std::int64_t x = 0; x < w; ++x) o[y * w + x] = row[reflect_index(x - left, s.w)];
      }
    }
  }
  return out;
}

Tensor4 take_sample(const Tensor4& batch, std::int64_t index) {
  const Shape& s = batch.shape();
  if (index < 0 || index >= s.n) throw std::out_of_range("take_sample: index outside batch");
  const std::int64_t count = s.c * s.plane();
  const float* src = batch.data().data() + index * count;
  return Tensor4(Shape{1, s.c, s.h, s.w}, std::vector<float>(src, src + count));
}

Tensor4 stack(const std::vector<Tensor4>& samples) {
  if (samples.empty()) throw std::invalid_argument("stack: no samples");
  const Shape first = samples.front().shape();
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(first.numel()) * samples.size());
  for (const auto& t : samples) {
    const Shape& s = t.shape();
    if (s.n != 1 || s.c != first.c || s.h != first.h || s.w != first.w) {
      throw ShapeError(s.c != first.c ? "c" : s.h != first.h ? "h" : s.w != first.w ? "w" : "n",
                       "stack: sample " + to_string(s) + " vs " + to_string(first));
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor4(Shape{static_cast<std::int64_t>(samples.size()), first.c, first.h, first.w},
                 std::move(data));
}

AugmentResult augment(const Tensor4& image, const AugmentSpec& spec, rng::Engine& engine) {
  if (spec.crop <= 0) throw std::invalid_argument("augment: crop size must be positive");
  if (spec.resize_target < spec.crop) {
    throw std::invalid_argument("augment: resize target smaller than the crop");
  }
  Tensor4 resized = resize_shorter_edge(image, spec.resize_target);
  const Shape& s = resized.shape();
  if (s.h < spec.crop || s.w < spec.crop) {
    throw ShapeError(s.h < spec.crop ? "h" : "w",
                     "augment: resized image " + to_string(s) + " smaller than the crop");
  }
  std::uniform_int_distribution<std::int64_t> dy(0, s.h - spec.crop);
  std::uniform_int_distribution<std::int64_t> dx(0, s.w - spec.crop);
  AugmentResult r;
  r.y = dy(engine);
  r.x = dx(engine);
  r.crop = crop(resized, r.y, r.x, spec.crop, spec.crop);
  return r;
}

AugmentResult augment(const Tensor4& image, const AugmentSpec& spec) {
  rng::Engine engine = rng::make_engine(spec.seed, 0x61756721ULL);
  return augment(image, spec, engine);
}

Tensor4 sobel_edge(const Tensor4& image) {
  const Shape& s = image.shape();
  if (s.c != 3) throw ShapeError("c", "sobel_edge: expects 3 channels, got " + to_string(s));
  if (s.h < 2 || s.w < 2) throw ShapeError(s.h < 2 ? "h" : "w", "sobel_edge: image too small");
  const double norm = 1.0 / (4.0 * std::sqrt(2.0));
  Tensor4 out(Shape{s.n, 1, s.h, s.w});
  std::vector<double> luma(static_cast<std::size_t>(s.plane()));
  for (std::int64_t n = 0; n < s.n; ++n) {
    const float* r = image.plane(n, 0);
    const float* g = image.plane(n, 1);
    const float* b = image.plane(n, 2);
    for (std::int64_t i = 0; i < s.plane(); ++i) {
      luma[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    }
    float* o = out.plane(n, 0);
    for (std::int64_t y = 0; y < s.h; ++y) {
      const double* up = luma.data() + reflect_index(y - 1, s.h) * s.w;
      const double* mid = luma.data() + y * s.w;
      const double* dn = luma.data() + reflect_index(y + 1, s.h) * s.w;
      for (std::int64_t x = 0; x < s.w; ++x) {
        const std::int64_t l = reflect_index(x - 1, s.w);
        const std::int64_t rr = reflect_index(x + 1, s.w);
        const double gx = (up[rr] + 2.0 * mid[rr] + dn[rr]) - (up[l] + 2.0 * mid[l] + dn[l]);
        const double gy = (dn[l] + 2.0 * dn[x] + dn[rr]) - (up[l] + 2.0 * up[x] + up[rr]);
        o[y * s.w + x] = static_cast<float>(std::min(1.0, std::sqrt(gx * gx + gy * gy) * norm));
      }
    }
  }
  return out;
}

Tensor4 edge_mask(const Tensor4& image, float delta) {
  if (!(delta > 0.0f && delta <= 1.0f)) {
    throw std::invalid_argument("edge_mask: delta must lie in (0, 1], got " +
                                std::to_string(delta));
  }
  Tensor4 out = sobel_edge(image);
  for (float& v : out.data()) v = v > delta ? 1.0f : 0.0f;
  return out;
}

Tensor4 guided_filter(const Tensor4& image, int radius, double eps) {
  if (radius < 1) throw std::invalid_argument("guided_filter: radius must be >= 1");
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("guided_filter: eps must be positive and finite");
  }
  const Shape& s = image.shape();
  const std::int64_t side = 2 * static_cast<std::int64_t>(radius) + 1;
  if (s.h < side || s.w < side) {
    throw ShapeError(s.h < side ? "h" : "w", "guided_filter: image " + to_string(s) +
                                                 " smaller than the " + std::to_string(side) +
                                                 "-pixel window");
  }
  const auto plane = static_cast<std::size_t>(s.plane());
  std::vector<double> p(plane), pp(plane), mean(plane), mean_sq(plane), a(plane), b(plane), table;
  Tensor4 out(s);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = image.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        p[i] = src[i];
        pp[i] = p[i] * p[i];
      }
      box_mean(p.data(), s.h, s.w, radius, mean.data(), table);
      box_mean(pp.data(), s.h, s.w, radius, mean_sq.data(), table);
      for (std::size_t i = 0; i < plane; ++i) {
        const double var = std::max(0.0, mean_sq[i] - mean[i] * mean[i]);
        a[i] = var / (var + eps);
        b[i] = mean[i] - a[i] * mean[i];
      }
      box_mean(a.data(), s.h, s.w, radius, mean.data(), table);
      box_mean(b.data(), s.h, s.w, radius, mean_sq.data(), table);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = static_cast<float>(mean[i] * p[i] + mean_sq[i]);
      }
    }
  }
  return out;
}

}  // namespace ctdp
