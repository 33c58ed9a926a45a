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
#include <span>
#include <string>
#include <vector>

#include "ctdp/buffer.hpp"

namespace ctdp {

/// NCHW extents of a rank-4 tensor.
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  std::int64_t numel() const noexcept { return n * c * h * w; }
  std::int64_t plane() const noexcept { return h * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense rank-4 array stored row-major with w fastest. Values are owned;
/// copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Storage = std::vector<T, detail::BufferAllocator<T>>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, const std::vector<T>& values);
  Tensor(Shape shape, Storage values);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor ones(Shape shape) { return Tensor(shape, T(1)); }
  static Tensor scalar(T v) { return Tensor(Shape{1, 1, 1, 1}, v); }
  /// Contents unspecified; for outputs that are fully overwritten.
  static Tensor uninitialized(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::int64_t numel() const noexcept { return shape_.numel(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const Storage& values() const noexcept { return data_; }

  T* plane(std::int64_t n, std::int64_t c) noexcept {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }
  const T* plane(std::int64_t n, std::int64_t c) const noexcept {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  T& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) noexcept {
    return data_[static_cast<std::size_t>(((n * shape_.c + c) * shape_.h + y) * shape_.w + x)];
  }
  T at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const noexcept {
    return data_[static_cast<std::size_t>(((n * shape_.c + c) * shape_.h + y) * shape_.w + x)];
  }

  T item() const;

  bool all_finite() const noexcept;

  template <typename U>
  Tensor<U> cast() const {
    typename Tensor<U>::Storage out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{};
  Storage data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

using Tensor4 = Tensor<float>;

}  // namespace ctdp
