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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ctdp/image.hpp"
#include "ctdp/losses.hpp"
#include "ctdp/lossnet.hpp"
#include "ctdp/model.hpp"

namespace ctdp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `param` in place; `t` is the 1-based
/// step number after increment.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v,
               const AdamConfig& config, std::int64_t t);

/// Adam over a named subset of a parameter set.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::int64_t t() const noexcept { return t_; }

  /// Advances t and updates every named parameter with its gradient.
  void step(ParamSet<T>& params, const std::vector<std::string>& names,
            const std::vector<Tensor<T>>& grads);

  /// Moments under "<prefix>m.<name>" / "<prefix>v.<name>" and the step
  /// counter under "<prefix>t".
  void export_state(ParamSet<float>& into, const std::string& prefix) const;
  void import_state(const ParamSet<float>& from, const std::string& prefix);

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  ParamSet<T> m_;
  ParamSet<T> v_;
};

struct TrainConfig {
  std::filesystem::path content_dir;
  std::filesystem::path style_image;
  std::int64_t iterations = 40000;
  std::int64_t batch_size = 4;
  std::int64_t crop = 256;
  std::int64_t resize = 512;
  std::uint64_t seed = 0;
  LossWeights weights;
  double lambda_s = 1.0;
  double lambda_d = 1.0;
  float edge_delta = 0.2f;
  std::int64_t checkpoint_every = 0;
  AdamConfig adam;
  std::string loss_profile = "mini";
  /// Optional checkpoint holding "lossnet.*" tensors; seeded init otherwise.
  std::filesystem::path loss_weights;
  /// Parameter groups excluded from generator updates.
  std::vector<std::string> frozen_groups;
  ModelConfig model;

  /// 64 x 64 crops from a 128 shorter edge, B = 2, mini loss network.
  static TrainConfig toy();
  /// 256 x 256 crops from a 512 shorter edge, B = 4.
  static TrainConfig paper();
  static TrainConfig profile(std::string_view name);

  void validate() const;
};

struct ReportRow {
  std::int64_t step = 0;
  double bc = 0, bs = 0, adv = 0, mtv = 0, fdc = 0, total = 0, d_loss = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

using TrainReport = std::vector<ReportRow>;

/// One JSON object per line.
void write_report_row(std::ostream& out, const ReportRow& row);
TrainReport read_report(const std::filesystem::path& path);

/// Content files whose resized images are decoded once and cached. Files
/// that fail to decode or are too small are skipped with a warning.
class ImagePool {
 public:
  ImagePool(const std::filesystem::path& content_dir, const std::filesystem::path& style_image,
            std::int64_t resize, std::int64_t crop);

  std::size_t content_count() const noexcept { return content_.size(); }
  const std::filesystem::path& content_path(std::size_t i) const { return content_paths_[i]; }
  const Tensor4& content(std::size_t i) const { return content_[i]; }
  const std::filesystem::path& style_path() const noexcept { return style_path_; }
  const Tensor4& style() const noexcept { return style_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::vector<std::filesystem::path> content_paths_;
  std::vector<Tensor4> content_;
  std::filesystem::path style_path_;
  Tensor4 style_;
  std::vector<std::string> warnings_;
};

struct CropOrigin {
  std::size_t source = 0;
  std::int64_t y = 0;
  std::int64_t x = 0;

  friend bool operator==(const CropOrigin&, const CropOrigin&) = default;
};

struct Batch {
  Tensor4 content;
  Tensor4 style;
  std::vector<CropOrigin> content_origins;
  std::vector<CropOrigin> style_origins;
  std::filesystem::path style_source;
};

/// B content crops from uniformly chosen files and B crops of the style.
Batch sample_batch(const TrainConfig& config, const ImagePool& pool, rng::Engine& engine);

/// Model, frozen loss network and both optimizers.
struct TrainState {
  CtdpModel<float> model;
  LossNetwork<float> lossnet;
  Adam<float> gen_opt;
  Adam<float> disc_opt;
  std::int64_t step = 0;
  double last_fdc = 0.0;

  static TrainState initial(const TrainConfig& config);

  /// Everything needed to resume: model, "lossnet.", "opt." and "meta.".
  ParamSet<float> to_checkpoint() const;
  static TrainState from_checkpoint(const TrainConfig& config, const ParamSet<float>& ckpt);
};

/// Discriminator update on detached outputs, then a generator update on
/// the weighted objective. Non-finite values raise NonFiniteError naming
/// the component.
ReportRow train_step(TrainState& state, const Batch& batch, const TrainConfig& config);

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Checkpoint to continue from; its meta.step sets the first step.
  std::filesystem::path resume;
  std::function<void(const ReportRow&)> on_step;
};

struct TrainResult {
  TrainReport report;
  std::filesystem::path checkpoint;
  std::filesystem::path report_path;
};

/// Runs until config.iterations steps have completed. Writes
/// <out>/report.jsonl, <out>/final.ctdp and, every checkpoint_every steps,
/// <out>/step_<k>.ctdp. Batches depend only on (seed, step).
TrainResult train(const TrainConfig& config, const TrainOptions& options);

}  // namespace ctdp
