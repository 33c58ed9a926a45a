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

#include "ctdp/model.hpp"
#include "ctdp/random.hpp"
#include "ctdp/stylize.hpp"

namespace {

using namespace ctdp;

void BM_Stylize(benchmark::State& state) {
  const auto model = CtdpModel<float>::initialized(1);
  const auto size = state.range(0);
  Tensor4 image({1, 3, size, size});
  auto e = rng::make_engine(7);
  rng::fill_uniform(image, 0.0f, 1.0f, e);
  StylizeOptions options;
  options.mode = static_cast<StylizeMode>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(stylize(model, image, options));
  state.counters["Mpix/s"] = benchmark::Counter(static_cast<double>(size * size) / 1e6,
                                                benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Stylize)
    ->ArgsProduct({{256, 1024}, {static_cast<int>(StylizeMode::Color),
                                 static_cast<int>(StylizeMode::Fused)}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
