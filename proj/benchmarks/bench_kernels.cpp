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
#include <benchmark/benchmark.h>

#include "ctdp/conv.hpp"
#include "ctdp/image.hpp"
#include "ctdp/losses.hpp"
#include "ctdp/random.hpp"

namespace {

using namespace ctdp;

Tensor4 random_image(Shape shape, std::uint64_t seed) {
  Tensor4 t(shape);
  auto e = rng::make_engine(seed);
  rng::fill_uniform(t, 0.0f, 1.0f, e);
  return t;
}

// args: channels, kernel, stride, depthwise, size
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = state.range(0);
  const ConvSpec spec{c, c, state.range(1), state.range(2), state.range(3) != 0};
  const auto size = state.range(4);
  const auto x = random_image({1, c, size, size}, 1);
  const auto w = random_image(spec.weight_shape(), 2);
  const auto b = random_image(spec.bias_shape(), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_forward(x, spec, w, b, Activation::Relu));
  }
  const auto os = spec.output_shape(x.shape());
  const double macs = static_cast<double>(os.numel()) * (spec.depthwise ? 1 : c) * spec.kernel *
                      spec.kernel;
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Conv2dForward)
    ->Args({28, 3, 1, 0, 256})
    ->Args({28, 1, 1, 0, 256})
    ->Args({28, 3, 1, 1, 256})
    ->Args({32, 3, 2, 0, 256})
    ->Args({48, 3, 1, 1, 128})
    ->Unit(benchmark::kMillisecond);

void BM_Conv2dBackwardInput(benchmark::State& state) {
  const auto c = state.range(0);
  const ConvSpec spec{c, c, 3, 1, false};
  const auto x = random_image({1, c, 64, 64}, 1);
  const auto w = random_image(spec.weight_shape(), 2);
  const auto g = random_image(spec.output_shape(x.shape()), 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward_input(g, x.shape(), spec, w));
}
BENCHMARK(BM_Conv2dBackwardInput)->Arg(16)->Arg(28)->Unit(benchmark::kMillisecond);

void BM_GuidedFilter(benchmark::State& state) {
  const auto size = state.range(0);
  const auto x = random_image({1, 3, size, size}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(guided_filter(x, 8, 1e-4));
}
BENCHMARK(BM_GuidedFilter)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_SobelMask(benchmark::State& state) {
  const auto x = random_image({1, 3, state.range(0), state.range(0)}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(edge_mask(x, 0.2f));
}
BENCHMARK(BM_SobelMask)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Gram(benchmark::State& state) {
  const auto c = state.range(0);
  const auto f = constant(random_image({2, c, 32, 32}, 6));
  for (auto _ : state) benchmark::DoNotOptimize(gram(f));
}
BENCHMARK(BM_Gram)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
