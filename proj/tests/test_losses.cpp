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
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "ctdp/error.hpp"
#include "ctdp/gradcheck.hpp"
#include "ctdp/losses.hpp"
#include "ctdp/ops.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace ctdp;
using ctdp::testing::max_abs_diff;
using ctdp::testing::random_tensor;

namespace {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  return ev;
}

template <typename T>
FeatureTaps<T> random_taps(rng::Engine& e, std::int64_t n = 2) {
  return {constant(random_tensor<T>({n, 4, 8, 8}, e, 0, 1)),
          constant(random_tensor<T>({n, 5, 4, 4}, e, 0, 1)),
          constant(random_tensor<T>({n, 6, 2, 2}, e, 0, 1)),
          constant(random_tensor<T>({n, 7, 2, 2}, e, 0, 1))};
}

template <typename T>
FeatureTaps<T> with_tap(FeatureTaps<T> taps, int index, Var<T> v) {
  switch (index) {
    case 0: taps.relu1_1 = std::move(v); break;
    case 1: taps.relu2_1 = std::move(v); break;
    case 2: taps.relu3_1 = std::move(v); break;
    default: taps.relu4_1 = std::move(v); break;
  }
  return taps;
}

double gram_mse_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  const auto ga = ctdp::testing::naive_gram(a);
  const auto gb = ctdp::testing::naive_gram(b);
  double total = 0;
  const std::size_t c = ga[0].size();
  for (std::size_t n = 0; n < ga.size(); ++n)
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) total += std::pow(ga[n][i][j] - gb[n][i][j], 2);
  return total / static_cast<double>(ga.size() * c * c);
}

Tensor<double> random_binary(Shape s, rng::Engine& e) {
  std::bernoulli_distribution coin(0.5);
  Tensor<double> t(s);
  for (double& v : t.data()) v = coin(e) ? 1.0 : 0.0;
  return t;
}

template <typename T>
CtdpModel<T> with_zero_discriminator() {
  auto m = CtdpModel<T>::initialized(3);
  for (const auto& name : m.params().names()) {
    if (!in_group(name, group::kDisc)) continue;
    for (T& v : m.params().get(name).data()) v = T(0);
  }
  return m;
}

}  // namespace

TEST_CASE("gram examples") {
  const auto zero = gram(constant(Tensor4({2, 3, 4, 5})));
  CHECK(zero.shape() == Shape{2, 1, 3, 3});
  for (float v : zero.value().data()) REQUIRE(v == 0.0f);

  const auto single = gram(constant(Tensor4({1, 1, 6, 7}, 0.3f)));
  CHECK(single.value().item() == doctest::Approx(0.09).epsilon(1e-6));
  CHECK_THROWS_AS(gram(constant(Tensor4({1, 0, 4, 4}))), ShapeError);
}

TEST_CASE("gram is symmetric, positive semidefinite and matches the oracle") {
  auto e = rng::make_engine(1);
  int instances = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_tensor<double>({2, 4, 5, 5}, e, -1, 1);
    const auto g = gram(constant(f)).value();
    const auto oracle = ctdp::testing::naive_gram(f);
    for (std::int64_t n = 0; n < 2; ++n) {
      std::vector<std::vector<double>> m(4, std::vector<double>(4));
      for (std::int64_t i = 0; i < 4; ++i)
        for (std::int64_t j = 0; j < 4; ++j) {
          m[i][j] = g.at(n, 0, i, j);
          REQUIRE(std::abs(m[i][j] - oracle[n][i][j]) < 1e-6);
          REQUIRE(m[i][j] == g.at(n, 0, j, i));
        }
      for (double ev : symmetric_eigenvalues(m)) REQUIRE(ev >= -1e-6);
    }
    ++instances;
  }
  CHECK(instances == 100);
}

TEST_CASE("branch style loss") {
  auto e = rng::make_engine(2);
  const auto cs = random_taps<double>(e);
  const auto style = random_taps<double>(e);
  for (auto branch : {StyleBranch::Shallow, StyleBranch::Deep, StyleBranch::Fusion}) {
    CHECK(branch_style_loss(cs, cs, branch).value().item() == 0.0);
    double oracle = 0;
    for (int l : BranchLayerSets::layers(branch)) {
      oracle += gram_mse_oracle(tap(cs, l).value(), tap(style, l).value());
    }
    CHECK(std::abs(branch_style_loss(cs, style, branch).value().item() - oracle) < 1e-9);
    CHECK(branch_style_loss(cs, style, branch).value().item() > 0.0);
  }
  CHECK(BranchLayerSets::layers(StyleBranch::Shallow) == std::vector<int>{0, 1});
  CHECK(BranchLayerSets::layers(StyleBranch::Deep) == std::vector<int>{1, 2, 3});
  CHECK(BranchLayerSets::layers(StyleBranch::Fusion) == std::vector<int>{0, 1, 2, 3});
  CHECK(parse_style_branch("deep") == StyleBranch::Deep);
  CHECK_THROWS_AS(parse_style_branch("color"), std::invalid_argument);
}

TEST_CASE("branch style loss ignores layers outside its set") {
  auto e = rng::make_engine(3);
  const auto cs = random_taps<double>(e);
  const auto style = random_taps<double>(e);
  const std::pair<StyleBranch, int> excluded[] = {
      {StyleBranch::Shallow, 2}, {StyleBranch::Shallow, 3}, {StyleBranch::Deep, 0}};
  for (auto [branch, layer] : excluded) {
    const auto& t = tap(cs, layer);
    const auto perturbed = with_tap(cs, layer, constant(random_tensor<double>(t.shape(), e, 0, 5)));
    CHECK(branch_style_loss(perturbed, style, branch).value().item() ==
          branch_style_loss(cs, style, branch).value().item());
  }
  const auto changed = with_tap(cs, 0, constant(random_tensor<double>(cs.relu1_1.shape(), e)));
  CHECK(branch_style_loss(changed, style, StyleBranch::Fusion).value().item() !=
        branch_style_loss(cs, style, StyleBranch::Fusion).value().item());
}

TEST_CASE("content loss") {
  auto e = rng::make_engine(4);
  const auto cs = random_taps<double>(e);
  CHECK(content_loss(cs, cs).value().item() == 0.0);
  Tensor<double> shifted = cs.relu2_1.value();
  for (double& v : shifted.data()) v += 0.3;
  const auto other = with_tap(cs, 1, constant(shifted));
  CHECK(content_loss(cs, other).value().item() == doctest::Approx(0.09).epsilon(1e-12));
  const auto noisy = with_tap(other, 0, constant(random_tensor<double>(cs.relu1_1.shape(), e)));
  CHECK(content_loss(cs, noisy).value().item() == content_loss(cs, other).value().item());
  const auto bad = with_tap(cs, 1, constant(Tensor<double>({2, 5, 4, 3})));
  CHECK_THROWS_AS(content_loss(cs, bad), ShapeError);
}

TEST_CASE("masked TV examples") {
  const auto img = constant(Tensor<double>({1, 1, 2, 2}, std::vector<double>{0, 1, 1, 0}));
  CHECK(masked_tv_loss(img, Tensor<double>({1, 1, 2, 2}, 1.0)).value().item() == 4.0);
  CHECK(masked_tv_loss(img, Tensor<double>({1, 1, 2, 2})).value().item() == 0.0);
  auto e = rng::make_engine(5);
  const auto flat = constant(Tensor<double>({2, 3, 7, 9}, 0.6));
  CHECK(masked_tv_loss(flat, random_tensor<double>({2, 1, 7, 9}, e, 0, 1)).value().item() == 0.0);
  CHECK_THROWS_AS(masked_tv_loss(flat, Tensor<double>({2, 1, 7, 8})), ShapeError);
  CHECK_THROWS_AS(masked_tv_loss(flat, Tensor<double>({2, 3, 7, 9})), ShapeError);
  CHECK_THROWS_AS(masked_tv_loss(flat, Tensor<double>({3, 1, 7, 9})), ShapeError);
}

TEST_CASE("masked TV weights the right and lower pixel") {
  Tensor<double> img({1, 1, 2, 2}, std::vector<double>{0, 1, 1, 0});
  // Only (0, 1) active: the horizontal term ending there counts once.
  Tensor<double> w({1, 1, 2, 2}, std::vector<double>{0, 1, 0, 0});
  CHECK(masked_tv_loss(constant(img), w).value().item() == 1.0);
  // Only (1, 1): horizontal (1,0)-(1,1) and vertical (0,1)-(1,1).
  w = Tensor<double>({1, 1, 2, 2}, std::vector<double>{0, 0, 0, 1});
  CHECK(masked_tv_loss(constant(img), w).value().item() == 2.0);
  w = Tensor<double>({1, 1, 2, 2}, std::vector<double>{1, 0, 0, 0});
  CHECK(masked_tv_loss(constant(img), w).value().item() == 0.0);
}

TEST_CASE("masked TV matches the double-loop oracle") {
  auto e = rng::make_engine(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto img = random_tensor<double>({2, 3, 16, 16}, e, 0, 1);
    const auto w = random_binary({trial % 2 == 0 ? 2 : 1, 1, 16, 16}, e);
    REQUIRE(std::abs(masked_tv_loss(constant(img), w).value().item() -
                     ctdp::testing::naive_masked_tv(img, w)) < 1e-6);
  }
}

TEST_CASE("smooth region weight inverts the mask") {
  const Tensor4 mask({1, 1, 1, 4}, std::vector<float>{0, 1, 1, 0});
  CHECK(smooth_region_weight(mask) == Tensor4({1, 1, 1, 4}, std::vector<float>{1, 0, 0, 1}));
}

TEST_CASE("fdc loss") {
  auto e = rng::make_engine(7);
  const auto a = random_tensor<double>({2, 3, 5, 6}, e, 0, 1);
  Tensor<double> b = a;
  for (double& v : b.data()) v += 1.0;
  CHECK(fdc_loss(constant(a), constant(a)).value().item() == 0.0);
  CHECK(fdc_loss(constant(a), constant(b)).value().item() == doctest::Approx(1.0).epsilon(1e-12));
  const auto c = random_tensor<double>(a.shape(), e, 0, 1);
  Tensor<double> far = a;
  for (std::int64_t i = 0; i < a.numel(); ++i) far.data()[i] = a.data()[i] + 3.0 * (c.data()[i] - a.data()[i]);
  CHECK(fdc_loss(constant(a), constant(far)).value().item() ==
        doctest::Approx(9.0 * fdc_loss(constant(a), constant(c)).value().item()).epsilon(1e-12));
  CHECK_THROWS_AS(fdc_loss(constant(a), constant(Tensor<double>({2, 3, 5, 5}))), ShapeError);
  CHECK_THROWS_AS(fdc_loss(constant(Tensor<double>({2, 1, 5, 6})), constant(Tensor<double>({2, 1, 5, 6}))),
                  ShapeError);
}

TEST_CASE("adversarial losses with a zero discriminator") {
  const auto m = with_zero_discriminator<double>();
  const auto disc = Binding<double>::constants(m.params());
  auto e = rng::make_engine(8);
  const auto style = constant(random_tensor<double>({2, 3, 32, 32}, e, 0, 1));
  const auto fake = constant(random_tensor<double>({2, 3, 32, 32}, e, 0, 1));
  const auto losses = adversarial_losses(m, disc, style, {fake, fake});
  CHECK(m.discriminate(disc, fake).shape() == Shape{2, 1, 2, 2});
  CHECK(losses.g_loss.value().item() == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(losses.d_loss.value().item() == doctest::Approx(2 * std::numbers::ln2).epsilon(1e-12));
  CHECK_THROWS_AS(adversarial_losses(m, disc, style, {}), std::invalid_argument);
  CHECK_THROWS_AS(
      adversarial_losses(m, disc, style, {constant(Tensor<double>({1, 3, 32, 32}))}), ShapeError);
}

TEST_CASE("discriminator loss is symmetric under label swap") {
  const auto m = CtdpModel<double>::initialized(9);
  CtdpModel<double> negated = m;
  for (const char* name : {"disc.conv4.weight", "disc.conv4.bias"}) {
    for (double& v : negated.params().get(name).data()) v = -v;
  }
  auto e = rng::make_engine(10);
  const auto real = constant(random_tensor<double>({2, 3, 32, 32}, e, 0, 1));
  const auto fake = constant(random_tensor<double>({2, 3, 32, 32}, e, 0, 1));
  const double d = discriminator_loss(m, Binding<double>::constants(m.params()), real, {fake})
                       .value()
                       .item();
  const double swapped =
      discriminator_loss(negated, Binding<double>::constants(negated.params()), fake, {real})
          .value()
          .item();
  CHECK(d == doctest::Approx(swapped).epsilon(1e-12));
  CHECK(d > 0.0);
}

TEST_CASE("frozen discriminator receives no generator gradient") {
  const auto m = CtdpModel<double>::initialized(11);
  Tape<double> tape;
  const auto b = Binding<double>::on_tape(tape, m.params(), [](std::string_view name) {
    return !in_group(name, group::kDisc);
  });
  auto e = rng::make_engine(12);
  const auto fake = tape.leaf(random_tensor<double>({1, 3, 32, 32}, e, 0, 1));
  const auto g = generator_adversarial_loss(m, b, {fake});
  const auto grads = tape.backward(g);
  for (const auto& name : m.params().names()) {
    if (!in_group(name, group::kDisc)) continue;
    CHECK_FALSE(b[name].requires_grad());
    const auto gw = grads[b[name]];
    for (double v : gw.data()) REQUIRE(v == 0.0);
  }
  const auto gf = grads[fake];
  double norm = 0;
  for (double v : gf.data()) norm += std::abs(v);
  CHECK(norm > 0.0);
}

TEST_CASE("discriminator loss does not reach the generator") {
  const auto m = CtdpModel<double>::initialized(13);
  Tape<double> tape;
  const auto b = Binding<double>::on_tape(tape, m.params(), [](std::string_view) { return true; });
  auto e = rng::make_engine(14);
  const auto fake = tape.leaf(random_tensor<double>({1, 3, 32, 32}, e, 0, 1));
  const auto d = discriminator_loss(m, b, constant(random_tensor<double>({1, 3, 32, 32}, e)), {fake});
  const auto grads = tape.backward(d);
  const auto gf = grads[fake];
  for (double v : gf.data()) REQUIRE(v == 0.0);
}

TEST_CASE("total loss") {
  const LossWeights w;
  auto scalar = [](double v) { return constant(Tensor<double>::scalar(v)); };
  auto components = [&](double a, double b, double c, double d, double f) {
    return LossComponents<double>{scalar(a), scalar(b), scalar(c), scalar(d), scalar(f)};
  };
  CHECK(total_loss(components(0, 0, 0, 0, 0), w).value().item() == 0.0);
  CHECK(total_loss(components(1, 0, 0, 0, 0), w).value().item() == 1e0);
  CHECK(total_loss(components(0, 1, 0, 0, 0), w).value().item() == 1e5);
  CHECK(total_loss(components(0, 0, 1, 0, 0), w).value().item() == 1e0);
  CHECK(total_loss(components(0, 0, 0, 1, 0), w).value().item() == 2e-5);
  CHECK(total_loss(components(0, 0, 0, 0, 1), w).value().item() == 1e0);
  CHECK(total_loss(components(1, 2, 3, 4, 5), w).value().item() ==
        doctest::Approx(1 + 2e5 + 3 + 8e-5 + 5).epsilon(1e-15));

  for (int i = 0; i < 5; ++i) {
    double v[5] = {0, 0, 0, 0, 0};
    v[i] = std::nan("");
    try {
      total_loss(components(v[0], v[1], v[2], v[3], v[4]), w);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& err) {
      CHECK(err.where() == kComponentNames[static_cast<std::size_t>(i)]);
    }
  }
  LossWeights bad;
  bad.mtv = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.bs = INFINITY;
  CHECK_THROWS_AS(total_loss(components(0, 0, 0, 0, 0), bad), std::invalid_argument);
}

TEST_CASE("losses are non-negative") {
  auto e = rng::make_engine(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_taps<double>(e);
    const auto b = random_taps<double>(e);
    CHECK(content_loss(a, b).value().item() >= 0.0);
    CHECK(branch_style_loss(a, b, StyleBranch::Fusion).value().item() >= 0.0);
    const auto img = random_tensor<double>({1, 3, 8, 8}, e, 0, 1);
    CHECK(masked_tv_loss(constant(img), random_binary({1, 1, 8, 8}, e)).value().item() >= 0.0);
  }
}

TEST_CASE("every loss passes a 64-bit gradient check through a one-conv network") {
  auto e = rng::make_engine(16);
  const ConvSpec spec{3, 3, 3, 1};
  const auto x = random_tensor<double>({2, 3, 32, 32}, e, 0, 1);
  const auto bias = random_tensor<double>(spec.bias_shape(), e, -0.1, 0.1);
  const auto w0 = random_tensor<double>(spec.weight_shape(), e, -0.3, 0.3);
  const auto target = random_tensor<double>({2, 3, 32, 32}, e, 0, 1);
  const auto net_loss = init_loss_weights<double>(17);
  const auto target_taps = net_loss.extract_taps(constant(target));
  const auto mask = random_binary({2, 1, 32, 32}, e);
  const auto model = CtdpModel<double>::initialized(18);
  const auto disc = Binding<double>::constants(model.params());

  auto net = [&](const Var<double>& w) {
    return ops::sigmoid(ops::conv2d(constant(x), spec, w, constant(bias)));
  };
  // Feature losses pass through many ReLU and max-pool kinks; the smaller
  // step keeps the central differences inside one linear piece.
  const std::vector<std::tuple<std::string, double, ScalarFunction<double>>> cases = {
      {"content", 1e-6, [&](const Var<double>& w) {
         return content_loss(net_loss.extract_taps(net(w)), target_taps);
       }},
      {"style shallow", 1e-6, [&](const Var<double>& w) {
         return branch_style_loss(net_loss.extract_taps(net(w)), target_taps, StyleBranch::Shallow);
       }},
      {"style deep", 1e-6, [&](const Var<double>& w) {
         return branch_style_loss(net_loss.extract_taps(net(w)), target_taps, StyleBranch::Deep);
       }},
      {"style fusion", 1e-6, [&](const Var<double>& w) {
         return branch_style_loss(net_loss.extract_taps(net(w)), target_taps, StyleBranch::Fusion);
       }},
      {"masked tv", 1e-5, [&](const Var<double>& w) { return masked_tv_loss(net(w), mask); }},
      {"fdc", 1e-5, [&](const Var<double>& w) { return fdc_loss(net(w), constant(target)); }},
      {"adversarial", 1e-5, [&](const Var<double>& w) {
         return generator_adversarial_loss(model, disc, {net(w)});
       }},
  };
  for (const auto& [name, step, f] : cases) {
    CAPTURE(name);
    CHECK(gradient_check(f, w0, step) < 1e-5);
  }
}

TEST_CASE("32-bit gradient check on the pixel losses") {
  auto e = rng::make_engine(19);
  const ConvSpec spec{3, 3, 3, 1};
  const auto x = random_tensor<float>({1, 3, 8, 8}, e, 0.2, 1);
  const auto bias = Tensor4(spec.bias_shape());
  const auto w0 = random_tensor<float>(spec.weight_shape(), e, 0.1, 0.5);
  const Tensor4 target({1, 3, 8, 8}, -1.0f);
  auto net = [&](const Var<float>& w) { return ops::conv2d(constant(x), spec, w, constant(bias)); };
  const ScalarFunction<float> fdc = [&](const Var<float>& w) {
    return fdc_loss(net(w), constant(target));
  };
  CHECK(gradient_check(fdc, w0, 1e-2f) < 1e-2);
  Tensor4 ramp({1, 3, 8, 8});
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t xx = 0; xx < 8; ++xx) ramp.at(0, c, y, xx) = 0.3f * float(xx + 2 * y + c);
  const ScalarFunction<float> tv = [&](const Var<float>& w) {
    return masked_tv_loss(ops::conv2d(constant(ramp), spec, w, constant(bias)), Tensor4({1, 1, 8, 8}, 1.0f));
  };
  CHECK(gradient_check(tv, w0, 1e-2f) < 1e-2);
}
