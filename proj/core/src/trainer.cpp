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
#include "ctdp/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ctdp/checkpoint.hpp"
#include "ctdp/error.hpp"
#include "ctdp/ops.hpp"

namespace ctdp {

template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v,
               const AdamConfig& c, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
  if (grad.shape() != param.shape()) {
    throw ShapeError("grad", "adam_step: gradient " + to_string(grad.shape()) + " vs parameter " +
                                 to_string(param.shape()));
  }
  if (m.shape() != param.shape() || v.shape() != param.shape()) {
    throw ShapeError("state", "adam_step: moment shape does not match the parameter");
  }
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  auto p = param.data();
  auto g = grad.data();
  auto pm = m.data();
  auto pv = v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = c.beta1 * pm[i] + (1.0 - c.beta1) * gi;
    const double vi = c.beta2 * pv[i] + (1.0 - c.beta2) * gi * gi;
    pm[i] = static_cast<T>(mi);
    pv[i] = static_cast<T>(vi);
    const double mhat = static_cast<double>(pm[i]) / bc1;
    const double vhat = static_cast<double>(pv[i]) / bc2;
    p[i] = static_cast<T>(p[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps));
  }
}

template <typename T>
void Adam<T>::step(ParamSet<T>& params, const std::vector<std::string>& names,
                   const std::vector<Tensor<T>>& grads) {
  if (names.size() != grads.size()) {
    throw std::invalid_argument("Adam::step: names and gradients differ in length");
  }
  ++t_;
  for (std::size_t i = 0; i < names.size(); ++i) {
    Tensor<T>& p = params.get(names[i]);
    if (!m_.contains(names[i])) {
      m_.add(names[i], Tensor<T>(p.shape()));
      v_.add(names[i], Tensor<T>(p.shape()));
    }
    adam_step(p, grads[i], m_.get(names[i]), v_.get(names[i]), config_, t_);
  }
}

template <typename T>
void Adam<T>::export_state(ParamSet<float>& into, const std::string& prefix) const {
  into.add(prefix + "t", Tensor<float>::scalar(static_cast<float>(t_)));
  for (const auto& name : m_.names()) {
    into.add(prefix + "m." + name, m_.get(name).template cast<float>());
    into.add(prefix + "v." + name, v_.get(name).template cast<float>());
  }
}

template <typename T>
void Adam<T>::import_state(const ParamSet<float>& from, const std::string& prefix) {
  m_ = ParamSet<T>{};
  v_ = ParamSet<T>{};
  t_ = 0;
  if (!from.contains(prefix + "t")) return;
  t_ = static_cast<std::int64_t>(from.get(prefix + "t").item());
  const std::string mp = prefix + "m.";
  for (const auto& name : from.names()) {
    if (name.rfind(mp, 0) != 0) continue;
    const std::string param = name.substr(mp.size());
    const std::string vname = prefix + "v." + param;
    if (!from.contains(vname)) {
      throw FormatError(FormatErrorKind::MissingTensor, "optimizer state: missing " + vname);
    }
    m_.add(param, from.get(name).template cast<T>());
    v_.add(param, from.get(vname).template cast<T>());
  }
}

template class Adam<float>;
template class Adam<double>;
template void adam_step(Tensor<float>&, const Tensor<float>&, Tensor<float>&, Tensor<float>&,
                        const AdamConfig&, std::int64_t);
template void adam_step(Tensor<double>&, const Tensor<double>&, Tensor<double>&, Tensor<double>&,
                        const AdamConfig&, std::int64_t);

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.iterations = 200;
  c.batch_size = 2;
  c.crop = 64;
  c.resize = 128;
  return c;
}

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::profile(std::string_view name) {
  if (name == "toy") return toy();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown training profile '" + std::string(name) +
                              "' (expected toy or paper)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (crop < 16 || crop % 4 != 0) {
    throw std::invalid_argument("crop must be a multiple of 4 and at least 16");
  }
  if (resize < crop) throw std::invalid_argument("resize target must be >= crop");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (!std::isfinite(lambda_s) || !std::isfinite(lambda_d)) {
    throw std::invalid_argument("fusion weights must be finite");
  }
  if (!(edge_delta > 0.0f && edge_delta <= 1.0f)) {
    throw std::invalid_argument("edge threshold must lie in (0, 1]");
  }
  weights.validate();
  LossProfile::by_name(loss_profile);
}

void write_report_row(std::ostream& out, const ReportRow& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["L_bc"] = r.bc;
  j["L_bs"] = r.bs;
  j["L_adv"] = r.adv;
  j["L_mtv"] = r.mtv;
  j["L_fdc"] = r.fdc;
  j["total"] = r.total;
  j["d_loss"] = r.d_loss;
  out << j.dump() << '\n';
}

TrainReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  TrainReport rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    ReportRow r;
    r.step = j.at("step").get<std::int64_t>();
    r.bc = j.at("L_bc").get<double>();
    r.bs = j.at("L_bs").get<double>();
    r.adv = j.at("L_adv").get<double>();
    r.mtv = j.at("L_mtv").get<double>();
    r.fdc = j.at("L_fdc").get<double>();
    r.total = j.at("total").get<double>();
    r.d_loss = j.at("d_loss").get<double>();
    rows.push_back(r);
  }
  return rows;
}

namespace {

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

ImagePool::ImagePool(const std::filesystem::path& content_dir,
                     const std::filesystem::path& style_image, std::int64_t resize,
                     std::int64_t crop)
    : style_path_(style_image) {
  std::error_code ec;
  if (!std::filesystem::is_directory(content_dir, ec)) {
    throw IoError("content directory not found: " + content_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(content_dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      Tensor4 img = resize_shorter_edge(load_image(f), resize);
      if (img.shape().h < crop || img.shape().w < crop) {
        throw ShapeError("h", "image smaller than the crop after resizing");
      }
      content_paths_.push_back(f);
      content_.push_back(std::move(img));
    } catch (const std::exception& e) {
      warnings_.push_back("skipping " + f.string() + ": " + e.what());
      std::cerr << "warning: " << warnings_.back() << '\n';
    }
  }
  if (content_.empty()) {
    throw IoError("no usable content images in " + content_dir.string());
  }
  style_ = resize_shorter_edge(load_image(style_image), resize);
  if (style_.shape().h < crop || style_.shape().w < crop) {
    throw ShapeError("h", "style image " + style_image.string() +
                              " is smaller than the crop after resizing");
  }
}

Batch sample_batch(const TrainConfig& config, const ImagePool& pool, rng::Engine& engine) {
  const std::int64_t k = config.crop;
  std::vector<Tensor4> content;
  std::vector<Tensor4> style;
  Batch b;
  b.style_source = pool.style_path();
  std::uniform_int_distribution<std::size_t> pick(0, pool.content_count() - 1);
  for (std::int64_t i = 0; i < config.batch_size; ++i) {
    CropOrigin o;
    o.source = pick(engine);
    const Shape& s = pool.content(o.source).shape();
    o.y = std::uniform_int_distribution<std::int64_t>(0, s.h - k)(engine);
    o.x = std::uniform_int_distribution<std::int64_t>(0, s.w - k)(engine);
    content.push_back(crop(pool.content(o.source), o.y, o.x, k, k));
    b.content_origins.push_back(o);
  }
  const Shape& ss = pool.style().shape();
  for (std::int64_t i = 0; i < config.batch_size; ++i) {
    CropOrigin o;
    o.y = std::uniform_int_distribution<std::int64_t>(0, ss.h - k)(engine);
    o.x = std::uniform_int_distribution<std::int64_t>(0, ss.w - k)(engine);
    style.push_back(crop(pool.style(), o.y, o.x, k, k));
    b.style_origins.push_back(o);
  }
  b.content = stack(content);
  b.style = stack(style);
  return b;
}

namespace {

LossNetwork<float> make_lossnet(const TrainConfig& config) {
  const LossProfile profile = LossProfile::by_name(config.loss_profile);
  if (!config.loss_weights.empty()) return load_loss_weights<float>(config.loss_weights.string(), profile);
  return init_loss_weights<float>(config.seed ^ 0x9e3779b97f4a7c15ULL, profile);
}

Tensor<float> encode_seed(std::uint64_t seed) {
  std::vector<float> parts(4);
  for (int i = 0; i < 4; ++i) parts[i] = static_cast<float>((seed >> (16 * i)) & 0xffffULL);
  return Tensor<float>(Shape{1, 1, 1, 4}, std::move(parts));
}

bool trainable_generator(std::string_view name, const std::vector<std::string>& frozen) {
  if (in_group(name, group::kDisc)) return false;
  for (const auto& g : frozen) {
    if (in_group(name, g)) return false;
  }
  return true;
}

template <typename F>
Var<float> named(const char* component, F&& f) {
  try {
    return f();
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(component, std::string(component) + ": " + e.what());
  }
}

}  // namespace

TrainState TrainState::initial(const TrainConfig& config) {
  return TrainState{CtdpModel<float>::initialized(config.seed, config.model), make_lossnet(config),
                    Adam<float>(config.adam), Adam<float>(config.adam), 0, 0.0};
}

ParamSet<float> TrainState::to_checkpoint() const {
  ParamSet<float> out = model.params();
  merge_into(out, lossnet.params());
  gen_opt.export_state(out, "opt.gen.");
  disc_opt.export_state(out, "opt.disc.");
  out.add("meta.step", Tensor<float>::scalar(static_cast<float>(step)));
  out.add("meta.final_fdc", Tensor<float>::scalar(static_cast<float>(last_fdc)));
  return out;
}

TrainState TrainState::from_checkpoint(const TrainConfig& config, const ParamSet<float>& ckpt) {
  TrainState s = initial(config);
  s.model.load_params(ckpt);
  const ParamSet<float> lossnet = select_prefix(ckpt, "lossnet.");
  if (lossnet.size() > 0) {
    s.lossnet = LossNetwork<float>(LossProfile::by_name(config.loss_profile), lossnet);
  }
  s.gen_opt.import_state(ckpt, "opt.gen.");
  s.disc_opt.import_state(ckpt, "opt.disc.");
  if (ckpt.contains("meta.step")) s.step = static_cast<std::int64_t>(ckpt.get("meta.step").item());
  if (ckpt.contains("meta.final_fdc")) s.last_fdc = ckpt.get("meta.final_fdc").item();
  if (ckpt.contains("meta.seed") && !(ckpt.get("meta.seed") == encode_seed(config.seed))) {
    throw std::invalid_argument("checkpoint was trained with a different seed");
  }
  return s;
}

ReportRow train_step(TrainState& state, const Batch& batch, const TrainConfig& config) {
  const float ls = static_cast<float>(config.lambda_s);
  const float ld = static_cast<float>(config.lambda_d);
  CtdpModel<float>& model = state.model;
  const Var<float> content = constant(batch.content);
  const Var<float> style = constant(batch.style);

  Tape<float> tape;
  const Binding<float> gen = Binding<float>::on_tape(
      tape, model.params(),
      [&](std::string_view n) { return trainable_generator(n, config.frozen_groups); });
  const ForwardOutputs<float> out = model.forward_all(gen, content, ls, ld);
  const std::vector<Var<float>> fakes{out.cs_t, out.cs_f};

  // Discriminator update on detached outputs.
  double d_value = 0.0;
  {
    Tape<float> dtape;
    const Binding<float> disc = Binding<float>::on_tape(
        dtape, model.params(), [](std::string_view n) { return in_group(n, group::kDisc); });
    const Var<float> d_loss =
        named("d_loss", [&] { return discriminator_loss(model, disc, style, fakes); });
    d_value = d_loss.value().item();
    const Gradients<float> grads = dtape.backward(d_loss);
    std::vector<std::string> names;
    std::vector<Tensor<float>> g;
    for (const auto& n : model.params().names()) {
      if (!in_group(n, group::kDisc)) continue;
      names.push_back(n);
      g.push_back(grads[disc[n]]);
    }
    state.disc_opt.step(model.params(), names, g);
  }

  const Binding<float> disc_now = Binding<float>::constants(model.params());
  const LossNetwork<float>& net = state.lossnet;
  const FeatureTaps<float> content_taps = net.extract_taps(content);
  const FeatureTaps<float> style_taps = net.extract_taps(style);
  const FeatureTaps<float> tc = net.extract_taps(out.cs_c);
  const FeatureTaps<float> tt = net.extract_taps(out.cs_t);
  const FeatureTaps<float> tf = net.extract_taps(out.cs_f);

  LossComponents<float> parts;
  parts.bc = named("L_bc", [&] {
    Var<float> l = ops::add_scaled(content_loss(tc, content_taps), content_loss(tt, content_taps),
                                   1.0f, 1.0f);
    return ops::add_scaled(l, content_loss(tf, content_taps), 1.0f, 1.0f);
  });
  parts.bs = named("L_bs", [&] {
    Var<float> l = ops::add_scaled(branch_style_loss(tc, style_taps, StyleBranch::Shallow),
                                   branch_style_loss(tt, style_taps, StyleBranch::Deep), 1.0f, 1.0f);
    return ops::add_scaled(l, branch_style_loss(tf, style_taps, StyleBranch::Fusion), 1.0f, 1.0f);
  });
  parts.adv = named("L_adv", [&] { return generator_adversarial_loss(model, disc_now, fakes); });
  parts.mtv = named("L_mtv", [&] {
    return masked_tv_loss(out.cs_c,
                          smooth_region_weight(edge_mask(batch.content, config.edge_delta)));
  });
  parts.fdc = named("L_fdc", [&] {
    return fdc_loss(model.decode_fused(gen, ops::scale(out.dae_s, ls)), out.cs_c);
  });
  const Var<float> total = total_loss(parts, config.weights);

  ReportRow row;
  row.step = state.step + 1;
  row.bc = parts.bc.value().item();
  row.bs = parts.bs.value().item();
  row.adv = parts.adv.value().item();
  row.mtv = parts.mtv.value().item();
  row.fdc = parts.fdc.value().item();
  row.total = total.value().item();
  row.d_loss = d_value;

  if (total.requires_grad()) {
    const Gradients<float> grads = tape.backward(total);
    std::vector<std::string> names;
    std::vector<Tensor<float>> g;
    for (const auto& n : model.params().names()) {
      if (!trainable_generator(n, config.frozen_groups)) continue;
      names.push_back(n);
      g.push_back(grads[gen[n]]);
    }
    state.gen_opt.step(model.params(), names, g);
  }
  state.step = row.step;
  state.last_fdc = row.fdc;
  return row;
}

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (options.out_dir.empty()) throw std::invalid_argument("train: output directory required");
  std::filesystem::create_directories(options.out_dir);
  const ImagePool pool(config.content_dir, config.style_image, config.resize, config.crop);

  TrainState state = options.resume.empty()
                         ? TrainState::initial(config)
                         : TrainState::from_checkpoint(config, load_checkpoint(options.resume));

  TrainResult result;
  result.report_path = options.out_dir / "report.jsonl";
  if (!options.resume.empty() && std::filesystem::exists(result.report_path)) {
    for (const auto& r : read_report(result.report_path)) {
      if (r.step <= state.step) result.report.push_back(r);
    }
  }
  std::ofstream report(result.report_path, std::ios::trunc);
  if (!report) throw IoError("cannot write " + result.report_path.string());
  for (const auto& r : result.report) write_report_row(report, r);

  const auto save = [&](const std::filesystem::path& path) {
    ParamSet<float> ckpt = state.to_checkpoint();
    ckpt.add("meta.seed", encode_seed(config.seed));
    save_checkpoint(ckpt, path);
  };

  while (state.step < config.iterations) {
    rng::Engine engine = rng::make_engine(config.seed ^ 0x5354455053ULL,
                                          static_cast<std::uint64_t>(state.step + 1));
    const Batch batch = sample_batch(config, pool, engine);
    const ReportRow row = train_step(state, batch, config);
    write_report_row(report, row);
    report.flush();
    result.report.push_back(row);
    if (options.on_step) options.on_step(row);
    if (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0) {
      save(options.out_dir / ("step_" + std::to_string(state.step) + ".ctdp"));
    }
  }
  if (!report) throw IoError("failed writing " + result.report_path.string());
  result.checkpoint = options.out_dir / "final.ctdp";
  save(result.checkpoint);
  return result;
}

}  // namespace ctdp
