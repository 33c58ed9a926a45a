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
#include "ctdp/autodiff.hpp"

#include "ctdp/error.hpp"

namespace ctdp {

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto node = std::make_shared<detail::Node<T>>();
  node->value = std::move(value);
  node->op = "constant";
  return Var<T>(std::move(node));
}

template <typename T>
Tensor<T> Gradients<T>::operator[](const Var<T>& v) const {
  if (!v.defined()) throw UsageError("gradient lookup on an undefined Var");
  if (v.tape() == tape_ && v.index() < grads_.size() && !grads_[v.index()].empty()) {
    return grads_[v.index()];
  }
  return Tensor<T>::zeros(v.shape());
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad, std::string name) {
  auto node = std::make_shared<detail::Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->op = std::move(name);
  if (requires_grad) record(node);
  return Var<T>(std::move(node));
}

template <typename T>
void Tape<T>::record(const std::shared_ptr<detail::Node<T>>& node) {
  node->tape = this;
  node->index = nodes_.size();
  nodes_.push_back(node);
}

template <typename T>
Gradients<T> Tape<T>::backward(const Var<T>& loss) {
  if (!loss.defined() || loss.tape() != this || !loss.requires_grad()) {
    throw UsageError("backward: loss was not recorded on this tape");
  }
  if (loss.value().numel() != 1) {
    throw UsageError("backward: loss must hold exactly one element, got shape " +
                     to_string(loss.shape()));
  }
  std::vector<Tensor<T>> grads(nodes_.size());
  grads[loss.index()] = Tensor<T>::ones(loss.shape());
  visit_order_.clear();

  std::vector<Tensor<T>> grad_in;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    const auto& node = nodes_[i];
    if (!node->backward || grads[i].empty()) continue;
    visit_order_.push_back(i);
    grad_in.assign(node->inputs.size(), Tensor<T>{});
    node->backward(*node, grads[i], grad_in);
    for (std::size_t k = 0; k < node->inputs.size(); ++k) {
      const auto& in = node->inputs[k];
      if (!in->requires_grad || grad_in[k].empty()) continue;
      if (grad_in[k].shape() != in->value.shape()) {
        throw ShapeError("grad", "backward of " + node->op + " produced gradient of shape " +
                                     to_string(grad_in[k].shape()) + " for input of shape " +
                                     to_string(in->value.shape()));
      }
      Tensor<T>& acc = grads[in->index];
      if (acc.empty()) {
        acc = std::move(grad_in[k]);
      } else {
        auto dst = acc.data();
        auto src = grad_in[k].data();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
      }
    }
    // Interior gradients are no longer needed once propagated.
    if (i != loss.index() && node->backward) grads[i] = Tensor<T>{};
  }
  return Gradients<T>(this, std::move(grads));
}

template <typename T>
Var<T> make_result(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                   detail::BackwardFn<T> backward) {
  if (!value.all_finite()) {
    throw NonFiniteError(op, op + ": produced a non-finite value");
  }
  Tape<T>* tape = nullptr;
  bool requires_grad = false;
  for (const auto& in : inputs) {
    if (!in.defined()) throw UsageError(op + ": undefined input");
    if (!in.requires_grad()) continue;
    if (tape != nullptr && in.tape() != tape) {
      throw UsageError(op + ": inputs belong to different tapes");
    }
    tape = in.tape();
    requires_grad = true;
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->value = std::move(value);
  node->op = std::move(op);
  if (requires_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
    tape->record(node);
  }
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> detach(const Var<T>& v) {
  return constant(v.value());
}

template class Tape<float>;
template class Tape<double>;
template class Gradients<float>;
template class Gradients<double>;
template Var<float> constant(Tensor<float>);
template Var<double> constant(Tensor<double>);
template Var<float> make_result(std::string, Tensor<float>, std::vector<Var<float>>,
                                detail::BackwardFn<float>);
template Var<double> make_result(std::string, Tensor<double>, std::vector<Var<double>>,
                                 detail::BackwardFn<double>);
template Var<float> detach(const Var<float>&);
template Var<double> detach(const Var<double>&);

}  // namespace ctdp
