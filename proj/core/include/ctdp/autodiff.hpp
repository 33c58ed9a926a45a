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

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctdp/tensor.hpp"

namespace ctdp {

template <typename T>
class Tape;

namespace detail {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

template <typename T>
struct Node;

/// Fills `grad_in[i]` with the gradient for input i. Entries for inputs that
/// do not require a gradient may be left empty.
template <typename T>
using BackwardFn =
    std::function<void(const Node<T>& self, const Tensor<T>& grad_out, std::span<Tensor<T>> grad_in)>;

template <typename T>
struct Node {
  Tensor<T> value;
  bool requires_grad = false;
  Tape<T>* tape = nullptr;
  std::size_t index = kNoIndex;
  std::string op;
  std::vector<std::shared_ptr<const Node>> inputs;
  BackwardFn<T> backward;
};

}  // namespace detail

/// Handle to a value produced by a differentiable op. Cheap to copy; the
/// underlying tensor is immutable.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<const detail::Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tape<T>* tape() const { return node_ ? node_->tape : nullptr; }
  std::size_t index() const { return node_ ? node_->index : detail::kNoIndex; }
  bool defined() const noexcept { return static_cast<bool>(node_); }

  const std::shared_ptr<const detail::Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<const detail::Node<T>> node_;
};

/// Untaped constant; never receives a gradient.
template <typename T>
Var<T> constant(Tensor<T> value);

/// Gradients from one backward pass, keyed by the Var they belong to.
template <typename T>
class Gradients {
 public:
  Gradients() = default;
  Gradients(const Tape<T>* tape, std::vector<Tensor<T>> grads)
      : tape_(tape), grads_(std::move(grads)) {}

  /// Gradient of the loss w.r.t. `v`; zeros of v's shape when v is not on
  /// the path to the loss.
  Tensor<T> operator[](const Var<T>& v) const;

 private:
  const Tape<T>* tape_ = nullptr;
  std::vector<Tensor<T>> grads_;
};

/// Ordered record of the differentiable ops of one computation. Single
/// writer: one tape belongs to one training step.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Taped input value. With requires_grad = false the value is a constant.
  Var<T> leaf(Tensor<T> value, bool requires_grad = true, std::string name = "leaf");

  /// Reverse pass from a 1-element loss. Each recorded op is visited exactly
  /// once, in reverse execution order.
  Gradients<T> backward(const Var<T>& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Tape indices visited by the most recent backward call, in visit order.
  const std::vector<std::size_t>& last_visit_order() const noexcept { return visit_order_; }

  /// Internal: appends a node produced by an op.
  void record(const std::shared_ptr<detail::Node<T>>& node);

 private:
  std::vector<std::shared_ptr<detail::Node<T>>> nodes_;
  std::vector<std::size_t> visit_order_;
};

/// Builds the output Var of an op. When any input requires a gradient the node
/// is recorded on that input's tape together with `backward`; otherwise the
/// inputs are released and the result is a constant. Throws NonFiniteError if
/// `value` holds a NaN or infinity.
template <typename T>
Var<T> make_result(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                   detail::BackwardFn<T> backward);

/// Plain copy of v's value with no gradient connection.
template <typename T>
Var<T> detach(const Var<T>& v);

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Gradients<float>;
extern template class Gradients<double>;

}  // namespace ctdp
