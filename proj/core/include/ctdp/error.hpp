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

#include <stdexcept>
#include <string>

namespace ctdp {

/// Tensor dimensions do not satisfy an operation's contract. `axis()` names
/// the offending axis ("n", "c", "h", "w" or an operation-specific label).
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string axis, const std::string& what)
      : std::invalid_argument(what), axis_(std::move(axis)) {}

  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// API misuse, e.g. calling backward on a value that was never recorded.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A NaN or infinity was produced. `where()` names the operation or loss
/// component that produced it.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::string where, const std::string& what)
      : std::runtime_error(what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctdp
