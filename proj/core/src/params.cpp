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
#include "ctdp/params.hpp"

#include "ctdp/error.hpp"

namespace ctdp {

bool in_group(std::string_view name, std::string_view group) {
  return name.size() > group.size() && name.substr(0, group.size()) == group &&
         name[group.size()] == '.';
}

template <typename T>
void ParamSet<T>::add(std::string name, Tensor<T> value) {
  if (name.empty()) throw UsageError("ParamSet: empty parameter name");
  if (index_.contains(name)) throw UsageError("ParamSet: duplicate parameter name " + name);
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

template <typename T>
bool ParamSet<T>::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

template <typename T>
const Tensor<T>& ParamSet<T>::get(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw UsageError("ParamSet: no parameter named " + std::string(name));
  return values_[it->second];
}

template <typename T>
Tensor<T>& ParamSet<T>::get(std::string_view name) {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw UsageError("ParamSet: no parameter named " + std::string(name));
  return values_[it->second];
}

template <typename T>
std::int64_t ParamSet<T>::scalar_count(std::string_view prefix) const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (std::string_view(names_[i]).starts_with(prefix)) total += values_[i].numel();
  }
  return total;
}

template <typename T>
Binding<T> Binding<T>::constants(const ParamSet<T>& params) {
  Binding b;
  for (const auto& name : params.names()) {
    b.names_.push_back(name);
    b.vars_.emplace(name, constant(params.get(name)));
  }
  return b;
}

template <typename T>
Binding<T> Binding<T>::on_tape(Tape<T>& tape, const ParamSet<T>& params,
                               const std::function<bool(std::string_view)>& trainable) {
  Binding b;
  for (const auto& name : params.names()) {
    b.names_.push_back(name);
    b.vars_.emplace(name, tape.leaf(params.get(name), trainable(name), name));
  }
  return b;
}

template <typename T>
const Var<T>& Binding<T>::operator[](std::string_view name) const {
  const auto it = vars_.find(std::string(name));
  if (it == vars_.end()) throw UsageError("Binding: no parameter named " + std::string(name));
  return it->second;
}

template class ParamSet<float>;
template class ParamSet<double>;
template class Binding<float>;
template class Binding<double>;

}  // namespace ctdp
