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
#include "ctdp/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ctdp/error.hpp"

namespace ctdp {

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << s.n << "x" << s.c << "x" << s.h << "x" << s.w;
  return os.str();
}

namespace {

void check_extents(const Shape& s) {
  if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
    throw ShapeError("shape", "negative extent in shape " + to_string(s));
  }
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  check_extents(shape);
  data_.assign(static_cast<std::size_t>(shape.numel()), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, const std::vector<T>& values)
    : Tensor(shape, Storage(values.begin(), values.end())) {}

template <typename T>
Tensor<T> Tensor<T>::uninitialized(Shape shape) {
  check_extents(shape);
  Tensor t;
  t.shape_ = shape;
  t.data_.resize(static_cast<std::size_t>(shape.numel()));
  return t;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, Storage values) : shape_(shape), data_(std::move(values)) {
  check_extents(shape);
  if (static_cast<std::int64_t>(data_.size()) != shape.numel()) {
    throw ShapeError("data", "tensor of shape " + to_string(shape) + " needs " +
                                 std::to_string(shape.numel()) + " values, got " +
                                 std::to_string(data_.size()));
  }
}

template <typename T>
T Tensor<T>::item() const {
  if (data_.size() != 1) {
    throw ShapeError("numel", "item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ctdp
