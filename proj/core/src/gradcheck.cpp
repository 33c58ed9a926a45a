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
#include "ctdp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctdp/error.hpp"

namespace ctdp {

template <typename T>
double gradient_check(const ScalarFunction<T>& f, const Tensor<T>& point, T step) {
  if (!(step > T(0))) throw std::invalid_argument("gradient_check: step must be positive");

  Tape<T> tape;
  const Var<T> x = tape.leaf(point, true, "point");
  const Var<T> loss = f(x);
  const Tensor<T> analytic = tape.backward(loss)[x];

  auto evaluate = [&](const Tensor<T>& at) {
    const T v = f(constant(at)).value().item();
    if (!std::isfinite(v)) throw NonFiniteError("gradient_check", "gradient_check: f is not finite");
    return v;
  };

  double worst = 0.0;
  Tensor<T> probe = point;
  auto p = probe.data();
  const auto a = analytic.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T saved = p[i];
    const T hi = saved + step;
    const T lo = saved - step;
    p[i] = hi;
    const T up = evaluate(probe);
    p[i] = lo;
    const T down = evaluate(probe);
    p[i] = saved;
    // Divide by the representable width, not 2 * step.
    const double numeric = (static_cast<double>(up) - static_cast<double>(down)) /
                           (static_cast<double>(hi) - static_cast<double>(lo));
    const double an = static_cast<double>(a[i]);
    const double denom = std::max({std::abs(an), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(an - numeric) / denom);
  }
  return worst;
}

template <typename T>
double directional_gradient_check(const ScalarFunction<T>& f, const Tensor<T>& point,
                                  const Tensor<T>& direction, T step) {
  if (!(step > T(0))) {
    throw std::invalid_argument("directional_gradient_check: step must be positive");
  }
  if (direction.shape() != point.shape()) {
    throw ShapeError("shape", "directional_gradient_check: direction and point shapes differ");
  }
  Tape<T> tape;
  const Var<T> x = tape.leaf(point, true, "point");
  const Tensor<T> grad = tape.backward(f(x))[x];
  double analytic = 0.0;
  const auto g = grad.data();
  const auto d = direction.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    analytic += static_cast<double>(g[i]) * static_cast<double>(d[i]);
  }

  auto evaluate = [&](T sign) {
    Tensor<T> at = point;
    auto p = at.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += sign * step * d[i];
    const T v = f(constant(at)).value().item();
    if (!std::isfinite(v)) {
      throw NonFiniteError("directional_gradient_check", "directional_gradient_check: f is not finite");
    }
    return static_cast<double>(v);
  };
  const double numeric = (evaluate(T(1)) - evaluate(T(-1))) / (2.0 * static_cast<double>(step));
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

template double gradient_check<float>(const ScalarFunction<float>&, const Tensor<float>&, float);
template double gradient_check<double>(const ScalarFunction<double>&, const Tensor<double>&,
                                       double);
template double directional_gradient_check<float>(const ScalarFunction<float>&,
                                                  const Tensor<float>&, const Tensor<float>&,
                                                  float);
template double directional_gradient_check<double>(const ScalarFunction<double>&,
                                                   const Tensor<double>&, const Tensor<double>&,
                                                   double);

}  // namespace ctdp

