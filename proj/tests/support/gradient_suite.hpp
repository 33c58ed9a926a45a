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

#include <string>
#include <vector>

namespace ctdp::testing {

struct GradientResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return error < tolerance; }
};

/// Every differentiable op, checked with respect to its input and, for the
/// convolutions, its weights and biases. T = double uses tolerance 1e-5 on
/// unrestricted random instances; T = float uses 1e-2 on instances whose
/// gradient entries are bounded away from zero.
template <typename T>
std::vector<GradientResult> op_gradient_suite();

/// The five training losses (style once per branch) composed with a
/// one-conv network and differentiated with respect to the conv weights.
template <typename T>
std::vector<GradientResult> loss_gradient_suite();

}  // namespace ctdp::testing
