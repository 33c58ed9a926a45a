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
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctdp/checkpoint.hpp"
#include "ctdp/image.hpp"
#include "ctdp/losses.hpp"
#include "ctdp/model.hpp"
#include "ctdp/ops.hpp"
#include "ctdp/stylize.hpp"
#include "ctdp/trainer.hpp"
#include "support/gradient_suite.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ctdp;
using ctdp::testing::max_abs_diff;
using ctdp::testing::random_tensor;
using ctdp::testing::TempDir;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double mean_of(const TrainReport& r, std::size_t from, std::size_t to, double ReportRow::*field) {
  double acc = 0;
  for (std::size_t i = from; i < to; ++i) acc += r[i].*field;
  return acc / static_cast<double>(to - from);
}

double mean_squared_laplacian(const Tensor4& img) {
  const Shape s = img.shape();
  double acc = 0;
  std::int64_t count = 0;
  for (std::int64_t c = 0; c < s.c; ++c)
    for (std::int64_t y = 1; y + 1 < s.h; ++y)
      for (std::int64_t x = 1; x + 1 < s.w; ++x) {
        const double l = static_cast<double>(img.at(0, c, y - 1, x)) + img.at(0, c, y + 1, x) +
                         img.at(0, c, y, x - 1) + img.at(0, c, y, x + 1) -
                         4.0 * img.at(0, c, y, x);
        acc += l * l;
        ++count;
      }
  return acc / static_cast<double>(count);
}

double mse(const Tensor4& a, const Tensor4& b) {
  double acc = 0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

void parameter_budget() {
  const auto start = std::chrono::steady_clock::now();
  const auto model = CtdpModel<float>::initialized(0);
  const std::int64_t first = param_count(model.params(), Branch::Color);
  const std::int64_t second = param_count(CtdpModel<float>::initialized(9).params(), Branch::Color);
  const double elapsed = seconds_since(start);
  const bool ok = first >= 16000 && first <= 25000 && first == second && elapsed < 1.0;
  report(1, ok, format("color parameters %lld (repeat %lld), %.3f s", static_cast<long long>(first),
                       static_cast<long long>(second), elapsed));
}

void oracle_agreement() {
  auto e = rng::make_engine(101);
  std::uniform_int_distribution<int> dim(3, 16), ch(1, 8), spick(1, 2);
  double conv_err = 0, dw_err = 0, gram_err = 0, tv_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t s = spick(e);
    const std::int64_t h = dim(e), w = dim(e);
    const std::int64_t cin = ch(e), cout = ch(e);
    const auto x = random_tensor<float>({1 + trial % 3, cin, h, w}, e);

    const ConvSpec dense{cin, cout, 3, s, false};
    const auto wd = random_tensor<float>(dense.weight_shape(), e);
    const auto bd = random_tensor<float>(dense.bias_shape(), e);
    const auto y = ops::conv2d(constant(x), dense, constant(wd), constant(bd)).value();
    conv_err = std::max(conv_err, max_abs_diff(y, testing::naive_conv2d(x, wd, bd, s, false)));

    const ConvSpec dw{cin, cin, 3, s, true};
    const ConvSpec pw{cin, cout, 1, 1, false};
    const auto wdw = random_tensor<float>(dw.weight_shape(), e);
    const auto bdw = random_tensor<float>(dw.bias_shape(), e);
    const auto wpw = random_tensor<float>(pw.weight_shape(), e);
    const auto bpw = random_tensor<float>(pw.bias_shape(), e);
    const auto sep = ops::dw_separable_conv(constant(x), dw, constant(wdw), constant(bdw), pw,
                                            constant(wpw), constant(bpw))
                         .value();
    const auto depth = testing::naive_conv2d(x, wdw, bdw, s, true);
    const auto oracle = testing::naive_conv2d(depth, wpw.cast<double>(), bpw.cast<double>(), 1, false);
    dw_err = std::max(dw_err, max_abs_diff(sep, oracle));

    const auto f = random_tensor<double>({1 + trial % 3, cin, h, w}, e);
    const auto g = gram(constant(f)).value();
    const auto gref = testing::naive_gram(f);
    for (std::int64_t n = 0; n < f.shape().n; ++n)
      for (std::int64_t i = 0; i < cin; ++i)
        for (std::int64_t j = 0; j < cin; ++j)
          gram_err = std::max(gram_err, std::abs(g.at(n, 0, i, j) - gref[n][i][j]));

    const auto img = random_tensor<double>({1 + trial % 3, 3, h, w}, e, 0, 1);
    auto weight = random_tensor<double>({img.shape().n, 1, h, w}, e, 0, 1);
    const double tv = masked_tv_loss(constant(img), weight).value().item();
    const double tref = testing::naive_masked_tv(img, weight);
    tv_err = std::max(tv_err, std::abs(tv - tref) / std::max(1.0, std::abs(tref)));
  }
  const bool ok = conv_err < 1e-5 && dw_err < 1e-5 && gram_err < 1e-6 && tv_err < 1e-6;
  report(2, ok,
         format("100 instances each: conv2d %.2e, dw-separable %.2e, gram %.2e, masked TV %.2e",
                conv_err, dw_err, gram_err, tv_err));
}

void gradient_checks() {
  std::vector<testing::GradientResult> all;
  for (auto suite : {testing::op_gradient_suite<double>, testing::op_gradient_suite<float>,
                     testing::loss_gradient_suite<double>, testing::loss_gradient_suite<float>}) {
    const auto part = suite();
    all.insert(all.end(), part.begin(), part.end());
  }
  int failed = 0;
  double worst64 = 0, worst32 = 0;
  for (const auto& r : all) {
    if (r.tolerance < 1e-4) worst64 = std::max(worst64, r.error);
    else worst32 = std::max(worst32, r.error);
    if (!r.passed()) {
      ++failed;
      std::printf("  gradient %s: %.3e (tolerance %.0e)\n", r.name.c_str(), r.error, r.tolerance);
    }
  }
  report(3, failed == 0,
         format("%zu gradient checks, %d over tolerance; worst 64-bit %.2e (< 1e-5), worst 32-bit "
                "%.2e (< 1e-2)",
                all.size(), failed, worst64, worst32));
}

void loss_fixed_points() {
  auto e = rng::make_engine(55);
  std::vector<std::string> broken;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) broken.emplace_back(what);
  };
  const Tensor<double> flat({2, 3, 16, 16}, 0.37);
  expect(masked_tv_loss(constant(flat), Tensor<double>({2, 1, 16, 16}, 1.0)).value().item() == 0.0,
         "tv of constant image");
  const auto img = random_tensor<double>({2, 3, 16, 16}, e, 0, 1);
  expect(masked_tv_loss(constant(img), Tensor<double>({2, 1, 16, 16}, 0.0)).value().item() == 0.0,
         "tv with zero mask");

  const auto net = init_loss_weights<double>(3);
  const auto taps = net.extract_taps(constant(img));
  const auto same = net.extract_taps(constant(img));
  expect(content_loss(taps, same).value().item() == 0.0, "content of identical taps");
  for (auto b : {StyleBranch::Shallow, StyleBranch::Deep, StyleBranch::Fusion})
    expect(branch_style_loss(taps, same, b).value().item() == 0.0, "style of identical taps");

  const Tensor<double> shifted({2, 3, 16, 16}, 1.37);
  expect(std::abs(fdc_loss(constant(shifted), constant(flat)).value().item() - 1.0) < 1e-12,
         "fdc of a unit offset");

  auto scalar = [](double v) { return constant(Tensor<double>::scalar(v)); };
  const LossWeights w;
  const double expected[5] = {1e0, 1e5, 1e0, 2e-5, 1e0};
  for (int i = 0; i < 5; ++i) {
    double v[5] = {0, 0, 0, 0, 0};
    v[i] = 1;
    const LossComponents<double> c{scalar(v[0]), scalar(v[1]), scalar(v[2]), scalar(v[3]),
                                   scalar(v[4])};
    expect(total_loss(c, w).value().item() == expected[i], "one-hot total");
  }
  std::string detail = "tv, content, style, fdc and weighted-total fixed points";
  for (const auto& b : broken) detail += "; broken: " + b;
  report(4, broken.empty(), detail);
}

struct TrainedRun {
  TempDir dir{"acceptance"};
  TrainConfig config;
  TrainResult result;
};

TrainConfig toy_config(const fs::path& root, std::uint64_t seed, std::int64_t iterations) {
  TrainConfig c = TrainConfig::toy();
  c.content_dir = root / "content";
  c.style_image = root / "style.png";
  c.seed = seed;
  c.iterations = iterations;
  return c;
}

void convergence(const TrainedRun& run) {
  const auto& r = run.result.report;
  if (r.size() < 200) {
    report(5, false, format("only %zu report rows", r.size()));
    return;
  }
  const std::size_t n = r.size();
  const double total0 = mean_of(r, 4, 15, &ReportRow::total);
  const double total1 = mean_of(r, n - 10, n, &ReportRow::total);
  const double mtv0 = mean_of(r, 4, 15, &ReportRow::mtv);
  const double mtv1 = mean_of(r, n - 10, n, &ReportRow::mtv);
  const double fdc0 = mean_of(r, 4, 15, &ReportRow::fdc);
  const double fdc1 = mean_of(r, n - 10, n, &ReportRow::fdc);
  const bool ok = total1 < 0.5 * total0 && mtv1 <= 0.7 * mtv0 && fdc1 <= 0.7 * fdc0;
  report(5, ok,
         format("200 toy steps, seed 0: total ratio %.3f (< 0.5), L_mtv ratio %.3f (<= 0.7), L_fdc ratio "
                "%.3f (<= 0.7)",
                total1 / total0, mtv1 / mtv0, fdc1 / fdc0));
}

std::vector<Tensor4> test_images() {
  std::vector<Tensor4> out;
  for (int i = 0; i < 3; ++i) out.push_back(testing::synthetic_content(128, 9001, i));
  return out;
}

void intensity_and_consistency(const CtdpModel<float>& model, const TrainedRun& run) {
  const auto images = test_images();
  double lap[3] = {0, 0, 0};
  const double lambdas[3] = {0.0, 0.5, 1.0};
  double worst_mse = 0;
  for (const auto& img : images) {
    for (int k = 0; k < 3; ++k) {
      StylizeOptions o;
      o.intensity = lambdas[k];
      lap[k] += mean_squared_laplacian(stylize(model, img, o)) / 3.0;
    }
    StylizeOptions fused0;
    fused0.intensity = 0.0;
    StylizeOptions color;
    color.mode = StylizeMode::Color;
    worst_mse = std::max(worst_mse, mse(stylize(model, img, fused0), stylize(model, img, color)));
  }
  const double final_fdc = run.result.report.back().fdc;
  const bool monotone = lap[0] <= lap[1] && lap[1] <= lap[2];
  const bool consistent = worst_mse <= 2.0 * final_fdc;
  report(6, monotone && consistent,
         format("mean squared Laplacian %.4e, %.4e, %.4e at intensity 0, 0.5, 1; worst "
                "MSE(intensity 0, color) %.3e vs 2 x final L_fdc %.3e",
                lap[0], lap[1], lap[2], worst_mse, 2.0 * final_fdc));
}

void smoothing_reduces_tv(const CtdpModel<float>& model) {
  const auto images = test_images();
  int lower = 0;
  std::string values;
  for (const auto& img : images) {
    const auto weight = smooth_region_weight(edge_mask(img));
    StylizeOptions plain;
    StylizeOptions smooth;
    smooth.smooth_input = true;
    const double a = masked_tv_loss(constant(stylize(model, img, plain)), weight).value().item();
    const double b = masked_tv_loss(constant(stylize(model, img, smooth)), weight).value().item();
    if (b < a) ++lower;
    values += format(" %.4f->%.4f", a, b);
  }
  report(7, lower >= 2, format("smoothed input lowers masked TV on %d of 3 images:%s", lower,
                               values.c_str()));
}

void reproducibility(const fs::path& corpus) {
  TempDir a("acceptance_a"), b("acceptance_b"), c("acceptance_c");
  TrainConfig cfg = toy_config(corpus, 77, 6);
  cfg.checkpoint_every = 3;
  const auto ra = train(cfg, {a.path(), {}, {}});
  const auto rb = train(cfg, {b.path(), {}, {}});
  const bool same_report = ra.report == rb.report &&
                           file_bytes(ra.report_path) == file_bytes(rb.report_path);
  const bool same_ckpt = file_bytes(ra.checkpoint) == file_bytes(rb.checkpoint);

  const auto loaded = load_checkpoint(ra.checkpoint);
  save_checkpoint(loaded, c.path() / "resaved.ctdp");
  const bool roundtrip = file_bytes(ra.checkpoint) == file_bytes(c.path() / "resaved.ctdp");

  fs::copy_file(a.path() / "report.jsonl", c.path() / "report.jsonl");
  const auto rc = train(cfg, {c.path(), a.path() / "step_3.ctdp", {}});
  const bool resumed = rc.report == ra.report && file_bytes(rc.checkpoint) == file_bytes(ra.checkpoint);
  report(8, same_report && same_ckpt && roundtrip && resumed,
         format("same-seed report %s, checkpoint %s, save/load %s, resume from step 3 %s",
                same_report ? "identical" : "differs", same_ckpt ? "identical" : "differs",
                roundtrip ? "bit-identical" : "differs", resumed ? "bit-identical" : "differs"));
}

void throughput(const CtdpModel<float>& model) {
  auto e = rng::make_engine(4242);
  const auto hd = random_tensor<float>({1, 3, 1024, 1024}, e, 0, 1);
  const StylizeOptions o;
  auto start = std::chrono::steady_clock::now();
  const auto out1 = stylize(model, hd, o);
  const double t1 = seconds_since(start);
  const auto uhd = random_tensor<float>({1, 3, 2160, 3840}, e, 0, 1);
  start = std::chrono::steady_clock::now();
  const auto out2 = stylize(model, uhd, o);
  const double t2 = seconds_since(start);
  const bool dims = out1.shape() == hd.shape() && out2.shape() == uhd.shape();
  report(9, dims && t1 < 5.0 && t2 < 60.0,
         format("fused 1024x1024 %.2f s (< 5), 3840x2160 %.2f s (< 60), dimensions %s", t1, t2,
                dims ? "preserved" : "changed"));
}

}  // namespace

int main() {
  try {
    parameter_budget();
    oracle_agreement();
    gradient_checks();
    loss_fixed_points();

    TrainedRun run;
    testing::write_toy_corpus(run.dir.path());
    run.config = toy_config(run.dir.path(), 0, 200);
    const fs::path out = run.dir.path() / "run";
    run.result = train(run.config, {out, {}, {}});
    CtdpModel<float> model;
    model.load_params(load_checkpoint(run.result.checkpoint));

    convergence(run);
    intensity_and_consistency(model, run);
    smoothing_reduces_tv(model);
    reproducibility(run.dir.path());
    throughput(model);
  } catch (const std::exception& err) {
    std::printf("FAIL acceptance aborted: %s\n", err.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
