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
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctdp/autodiff.hpp"
#include "ctdp/tensor.hpp"

namespace ctdp {

/// Ordered collection of uniquely named tensors. Names are dotted paths whose
/// first component is the parameter group ("enc_s", "dae", "disc", ...).
template <typename T>
class ParamSet {
 public:
  void add(std::string name, Tensor<T> value);
  bool contains(std::string_view name) const;
  const Tensor<T>& get(std::string_view name) const;
  Tensor<T>& get(std::string_view name);

  /// Names in insertion order.
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

  /// Total scalar count of tensors whose name starts with `prefix`.
  std::int64_t scalar_count(std::string_view prefix = {}) const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], values_[i].template cast<U>());
    return out;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// ParamSet values bound to Vars for one forward computation.
template <typename T>
class Binding {
 public:
  /// Every parameter as an untaped constant.
  static Binding constants(const ParamSet<T>& params);

  /// Every parameter as a leaf on `tape`; those accepted by `trainable`
  /// require gradients.
  static Binding on_tape(Tape<T>& tape, const ParamSet<T>& params,
                         const std::function<bool(std::string_view)>& trainable);

  const Var<T>& operator[](std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Var<T>> vars_;
};

/// True when `name` belongs to the group `group` (first dotted component).
bool in_group(std::string_view name, std::string_view group);

extern template class ParamSet<float>;
extern template class ParamSet<double>;
extern template class Binding<float>;
extern template class Binding<double>;

}  // namespace ctdp
