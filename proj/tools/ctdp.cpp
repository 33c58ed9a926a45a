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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctdp/checkpoint.hpp"
#include "ctdp/image.hpp"
#include "ctdp/model.hpp"
#include "ctdp/stylize.hpp"
#include "ctdp/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CliUsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ctdp::CtdpModel<float> load_model(const fs::path& checkpoint) {
  if (checkpoint.empty()) throw CliUsageError("--checkpoint is required");
  ctdp::CtdpModel<float> model;
  model.load_params(ctdp::load_checkpoint(checkpoint));
  return model;
}

void ensure_parent(const fs::path& out) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
}

std::vector<std::int64_t> parse_channels(const std::string& spec, std::int64_t count) {
  std::vector<std::int64_t> out;
  if (spec == "all") {
    for (std::int64_t c = 0; c < count; ++c) out.push_back(c);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw CliUsageError("bad channel list '" + spec + "' (expected e.g. 0,7 or all)");
    }
    out.push_back(v);
  }
  if (out.empty()) throw CliUsageError("empty channel list");
  return out;
}

struct StylizeArgs {
  fs::path input;
  fs::path checkpoint;
  fs::path out;
  std::string mode = "fused";
  double intensity = 1.0;
  double lambda_s = 1.0;
  bool smooth = false;
  std::int64_t tile = 1024;
};

void add_stylize_flags(CLI::App* cmd, StylizeArgs& a) {
  cmd->add_option("--input", a.input, "Content image (PNG or JPEG)")->required();
  cmd->add_option("--checkpoint", a.checkpoint, "Trained checkpoint")->required();
  cmd->add_option("--out,--output", a.out, "Output PNG")->required();
  cmd->add_option("--mode", a.mode, "color, texture or fused")
      ->check(CLI::IsMember({"color", "texture", "fused"}));
  cmd->add_option("--intensity", a.intensity, "Texture intensity lambda_d (fused mode)");
  cmd->add_option("--lambda-s", a.lambda_s, "Shallow weight lambda_s");
  cmd->add_flag("--smooth-input", a.smooth, "Guided-filter the input before encoding");
  cmd->add_option("--tile", a.tile, "Tile edge in pixels, multiple of 4; 0 disables tiling");
}

ctdp::StylizeOptions stylize_options(const StylizeArgs& a) {
  if (!std::isfinite(a.intensity)) throw CliUsageError("--intensity must be finite");
  if (!std::isfinite(a.lambda_s)) throw CliUsageError("--lambda-s must be finite");
  if (a.tile < 0 || a.tile % 4 != 0) throw CliUsageError("--tile must be a multiple of 4");
  ctdp::StylizeOptions o;
  o.mode = ctdp::parse_stylize_mode(a.mode);
  o.intensity = a.intensity;
  o.lambda_s = a.lambda_s;
  o.smooth_input = a.smooth;
  o.tile = a.tile;
  return o;
}

int run_stylize(const StylizeArgs& a, const ctdp::NoiseSpec* noise) {
  ctdp::StylizeOptions o = stylize_options(a);
  const ctdp::CtdpModel<float> model = load_model(a.checkpoint);
  if (noise != nullptr) o.noise = *noise;
  const ctdp::Tensor4 image = ctdp::load_image(a.input);
  const ctdp::Tensor4 result = ctdp::stylize(model, image, o);
  ensure_parent(a.out);
  ctdp::save_image(result, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CTDP dual-pipeline style transfer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ctdp 0.1.0");

  // train
  auto* train = app.add_subcommand("train", "Train a single-style model");
  fs::path content_dir, style, train_out, resume, loss_weights;
  std::string profile = "toy";
  std::int64_t iters = 0, batch = 0, checkpoint_every = 0;
  std::uint64_t train_seed = 0;
  double lr = 0.0;
  train->add_option("--content-dir", content_dir, "Directory of content images")->required();
  train->add_option("--style", style, "Style image")->required();
  train->add_option("--iters", iters, "Iterations (profile default when omitted)");
  train->add_option("--batch", batch, "Batch size (profile default when omitted)");
  train->add_option("--profile", profile, "toy or paper")->check(CLI::IsMember({"toy", "paper"}));
  train->add_option("--seed", train_seed, "Random seed");
  train->add_option("--out,--output", train_out, "Output directory")->required();
  train->add_option("--checkpoint-every", checkpoint_every, "Save every k steps (0 = final only)");
  train->add_option("--resume", resume, "Continue from a checkpoint in the same output directory");
  train->add_option("--loss-weights", loss_weights, "Checkpoint with lossnet.* tensors");
  train->add_option("--lr", lr, "Adam learning rate");

  // stylize
  auto* stylize = app.add_subcommand("stylize", "Stylize one image");
  StylizeArgs sty;
  add_stylize_flags(stylize, sty);

  // mask
  auto* mask = app.add_subcommand("mask", "Write the binary Sobel edge mask");
  fs::path mask_in, mask_out;
  float delta = 0.2f;
  mask->add_option("--input", mask_in, "Input image")->required();
  mask->add_option("--delta", delta, "Edge threshold in (0, 1]");
  mask->add_option("--out,--output", mask_out, "Output PNG")->required();

  // smooth
  auto* smooth = app.add_subcommand("smooth", "Self-guided filter smoothing");
  fs::path smooth_in, smooth_out;
  int radius = 8;
  double eps = 1e-4;
  smooth->add_option("--input", smooth_in, "Input image")->required();
  smooth->add_option("--radius", radius, "Window radius");
  smooth->add_option("--eps", eps, "Regularization");
  smooth->add_option("--out,--output", smooth_out, "Output PNG")->required();

  // dump-features
  auto* dump = app.add_subcommand("dump-features", "Write shallow-encoder feature maps");
  fs::path dump_in, dump_ckpt, dump_dir;
  std::string layer = "conv1";
  dump->add_option("--input", dump_in, "Input image")->required();
  dump->add_option("--layer", layer, "conv1 or conv3")->check(CLI::IsMember({"conv1", "conv3"}));
  dump->add_option("--checkpoint", dump_ckpt, "Trained checkpoint")->required();
  dump->add_option("--out-dir", dump_dir, "Output directory")->required();

  // inject-noise
  auto* noise = app.add_subcommand("inject-noise", "Stylize with noise added after conv1");
  StylizeArgs nsty;
  add_stylize_flags(noise, nsty);
  std::string channels = "all";
  double amplitude = 0.0;
  std::uint64_t noise_seed = 0;
  noise->add_option("--channels", channels, "Comma-separated channel list or all");
  noise->add_option("--amplitude", amplitude, "Noise standard deviation");
  noise->add_option("--seed", noise_seed, "Noise seed");

  // param-count
  auto* count = app.add_subcommand("param-count", "Print per-branch parameter counts");
  fs::path count_ckpt;
  count->add_option("--checkpoint", count_ckpt, "Checkpoint (default architecture when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) {
      ctdp::TrainConfig config = ctdp::TrainConfig::profile(profile);
      config.content_dir = content_dir;
      config.style_image = style;
      if (iters != 0) config.iterations = iters;
      if (batch != 0) config.batch_size = batch;
      if (lr != 0.0) config.adam.lr = lr;
      config.seed = train_seed;
      config.checkpoint_every = checkpoint_every;
      config.loss_weights = loss_weights;
      try {
        config.validate();
      } catch (const std::invalid_argument& e) {
        throw CliUsageError(e.what());
      }
      ctdp::TrainOptions options;
      options.out_dir = train_out;
      options.resume = resume;
      options.on_step = [&](const ctdp::ReportRow& r) {
        if (r.step == 1 || r.step % 10 == 0 || r.step == config.iterations) {
          std::fprintf(stderr, "step %lld total %.6g L_bc %.4g L_bs %.4g L_adv %.4g L_mtv %.4g L_fdc %.4g d %.4g\n",
                       static_cast<long long>(r.step), r.total, r.bc, r.bs, r.adv, r.mtv, r.fdc,
                       r.d_loss);
        }
      };
      const ctdp::TrainResult result = ctdp::train(config, options);
      std::cout << "checkpoint " << result.checkpoint.string() << '\n'
                << "report " << result.report_path.string() << '\n';
    } else if (*stylize) {
      return run_stylize(sty, nullptr);
    } else if (*mask) {
      const ctdp::Tensor4 image = ctdp::load_image(mask_in);
      if (!(delta > 0.0f && delta <= 1.0f)) throw CliUsageError("--delta must lie in (0, 1]");
      ensure_parent(mask_out);
      ctdp::save_image(ctdp::edge_mask(image, delta), mask_out);
    } else if (*smooth) {
      if (radius < 1) throw CliUsageError("--radius must be >= 1");
      if (!(eps > 0.0)) throw CliUsageError("--eps must be positive");
      const ctdp::Tensor4 image = ctdp::load_image(smooth_in);
      ensure_parent(smooth_out);
      ctdp::save_image(ctdp::guided_filter(image, radius, eps), smooth_out);
    } else if (*dump) {
      const ctdp::CtdpModel<float> model = load_model(dump_ckpt);
      const ctdp::Tensor4 image = ctdp::load_image(dump_in);
      const auto b = ctdp::Binding<float>::constants(model.params());
      const auto trace = model.trace_shallow(b, ctdp::constant(image));
      const ctdp::Tensor4& f = (layer == "conv1" ? trace.conv1 : trace.conv3).value();
      fs::create_directories(dump_dir);
      const ctdp::Shape& s = f.shape();
      for (std::int64_t c = 0; c < s.c; ++c) {
        ctdp::Tensor4 plane(ctdp::Shape{1, 1, s.h, s.w});
        const float* src = f.plane(0, c);
        float lo = std::numeric_limits<float>::max();
        float hi = std::numeric_limits<float>::lowest();
        for (std::int64_t i = 0; i < s.plane(); ++i) {
          lo = std::min(lo, src[i]);
          hi = std::max(hi, src[i]);
        }
        if (hi > lo) {
          const double k = 1.0 / (static_cast<double>(hi) - lo);
          float* dst = plane.data().data();
          for (std::int64_t i = 0; i < s.plane(); ++i) {
            dst[i] = static_cast<float>((static_cast<double>(src[i]) - lo) * k);
          }
        }
        char name[32];
        std::snprintf(name, sizeof name, "ch_%03lld.png", static_cast<long long>(c));
        ctdp::save_image(plane, dump_dir / name);
      }
      std::cout << s.c << " feature maps written to " << dump_dir.string() << '\n';
    } else if (*noise) {
      if (!std::isfinite(amplitude)) throw CliUsageError("--amplitude must be finite");
      ctdp::NoiseSpec spec;
      spec.channels = parse_channels(channels, ctdp::ModelConfig{}.shallow_width);
      spec.amplitude = amplitude;
      spec.seed = noise_seed;
      return run_stylize(nsty, &spec);
    } else if (*count) {
      ctdp::ParamSet<float> params;
      if (count_ckpt.empty()) {
        params = ctdp::CtdpModel<float>::initialized(0).params();
      } else {
        params = load_model(count_ckpt).params();
      }
      std::cout << "color " << ctdp::param_count(params, ctdp::Branch::Color) << '\n'
                << "texture " << ctdp::param_count(params, ctdp::Branch::Texture) << '\n'
                << "fusion " << ctdp::param_count(params, ctdp::Branch::Fusion) << '\n'
                << "total " << ctdp::param_count(params, ctdp::Branch::All) << '\n';
    }
  } catch (const CliUsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
