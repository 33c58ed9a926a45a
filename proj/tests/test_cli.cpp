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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ctdp/image.hpp"
#include "ctdp/random.hpp"
#include "ctdp/stylize.hpp"
#include "ctdp/checkpoint.hpp"
#include "support/helpers.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ctdp;
using ctdp::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Workspace {
  TempDir dir{"cli"};
  fs::path checkpoint;
  fs::path image;
  int runs = 0;

  Workspace() {
    ctdp::testing::write_toy_corpus(dir.path());
    image = dir.path() / "input.png";
    save_image(ctdp::testing::synthetic_content(72, 9, 0), image);
  }

  Run run(const std::string& args) {
    const fs::path out = dir.path() / ("stdout_" + std::to_string(runs));
    const fs::path err = dir.path() / ("stderr_" + std::to_string(runs++));
    const std::string cmd = std::string("\"") + CTDP_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) const { return "\"" + (dir.path() / name).string() + "\""; }

  const fs::path& trained() {
    if (checkpoint.empty()) {
      const Run r = run("train --profile toy --iters 3 --seed 4 --content-dir " + path("content") +
                        " --style " + path("style.png") + " --out " + path("run"));
      REQUIRE(r.code == 0);
      checkpoint = dir.path() / "run" / "final.ctdp";
    }
    return checkpoint;
  }

  std::string ckpt() { return "\"" + trained().string() + "\""; }
  std::string input() const { return "\"" + image.string() + "\""; }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  auto& w = ws();
  const Run missing_style = w.run("train --content-dir " + w.path("content") + " --out " + w.path("x"));
  CHECK(missing_style.code == 2);
  CHECK(missing_style.err.find("--style") != std::string::npos);
  CHECK(w.run("").code == 2);
  CHECK(w.run("frobnicate").code == 2);
  CHECK(w.run("stylize --input " + w.input() + " --checkpoint " + w.ckpt() + " --out " +
              w.path("o.png") + " --mode sketch")
            .code == 2);
  CHECK(w.run("mask --input " + w.input() + " --delta 0 --out " + w.path("m.png")).code == 2);
  CHECK(w.run("inject-noise --input " + w.input() + " --checkpoint " + w.ckpt() + " --out " +
              w.path("n.png") + " --channels 0,x --amplitude 1")
            .code == 2);
  CHECK(w.run("--help").code == 0);
}

TEST_CASE("runtime failures exit with 1 and name the path") {
  auto& w = ws();
  const Run r = w.run("param-count --checkpoint " + w.path("absent.ctdp"));
  CHECK(r.code == 1);
  CHECK(r.err.find("absent.ctdp") != std::string::npos);
  const Run s = w.run("mask --input " + w.path("absent.png") + " --out " + w.path("m.png"));
  CHECK(s.code == 1);
  CHECK(s.err.find("absent.png") != std::string::npos);
  CHECK(w.run("inject-noise --input " + w.input() + " --checkpoint " + w.ckpt() + " --out " +
              w.path("n.png") + " --channels 0,40 --amplitude 1")
            .code == 1);
}

TEST_CASE("param-count") {
  auto& w = ws();
  for (const std::string& extra : {std::string(), " --checkpoint " + w.ckpt()}) {
    const Run r = w.run("param-count" + extra);
    REQUIRE(r.code == 0);
    std::map<std::string, long long> counts;
    std::istringstream in(r.out);
    std::string key;
    long long value = 0;
    while (in >> key >> value) counts[key] = value;
    CHECK(counts["color"] == 20079);
    CHECK(counts["total"] == counts["color"] + counts["texture"] + counts["fusion"]);
    CHECK(counts.size() == 4);
  }
}

TEST_CASE("mask of a constant image is black and binary") {
  auto& w = ws();
  save_image(Tensor4({1, 3, 20, 30}, 0.6f), w.dir.path() / "flat.png");
  REQUIRE(w.run("mask --input " + w.path("flat.png") + " --out " + w.path("flat_mask.png")).code == 0);
  const auto flat = load_image(w.dir.path() / "flat_mask.png");
  CHECK(flat.shape() == Shape{1, 3, 20, 30});
  for (float v : flat.data()) REQUIRE(v == 0.0f);

  REQUIRE(w.run("mask --input " + w.input() + " --delta 0.1 --out " + w.path("mask.png")).code == 0);
  const auto m = load_image(w.dir.path() / "mask.png");
  std::set<float> values(m.data().begin(), m.data().end());
  CHECK(values == std::set<float>{0.0f, 1.0f});
}

TEST_CASE("smooth of a constant image is unchanged") {
  auto& w = ws();
  save_image(Tensor4({1, 3, 24, 24}, 100.0f / 255.0f), w.dir.path() / "flat_s.png");
  REQUIRE(w.run("smooth --input " + w.path("flat_s.png") + " --radius 4 --out " +
                w.path("flat_s_out.png"))
              .code == 0);
  CHECK(load_image(w.dir.path() / "flat_s_out.png") == load_image(w.dir.path() / "flat_s.png"));
}

TEST_CASE("dump-features") {
  auto& w = ws();
  for (const char* layer : {"conv1", "conv3"}) {
    const std::string a = std::string("dump_a_") + layer;
    const std::string b = std::string("dump_b_") + layer;
    for (const auto& d : {a, b}) {
      REQUIRE(w.run("dump-features --input " + w.input() + " --checkpoint " + w.ckpt() +
                    " --layer " + layer + " --out-dir " + w.path(d))
                  .code == 0);
    }
    int files = 0;
    for (int c = 0; c < 28; ++c) {
      char name[16];
      std::snprintf(name, sizeof name, "ch_%03d.png", c);
      const auto pa = w.dir.path() / a / name;
      REQUIRE(fs::exists(pa));
      CHECK(slurp(pa) == slurp(w.dir.path() / b / name));
      const auto img = load_image(pa);
      CHECK(img.shape() == Shape{1, 3, 72, 72});
      const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
      CHECK(*lo == 0.0f);
      CHECK((*hi == 1.0f || *hi == 0.0f));
      ++files;
    }
    CHECK(std::distance(fs::directory_iterator(w.dir.path() / a), fs::directory_iterator{}) == 28);
    CHECK(files == 28);
  }
  CHECK(w.run("dump-features --input " + w.input() + " --checkpoint " + w.ckpt() +
              " --layer conv9 --out-dir " + w.path("dump_bad"))
            .code == 2);
}

TEST_CASE("stylize modes and the intensity sweep") {
  auto& w = ws();
  std::set<std::string> contents;
  for (const char* intensity : {"0", "0.3", "0.6", "1.0"}) {
    const std::string out = std::string("sweep_") + intensity + ".png";
    REQUIRE(w.run("stylize --input " + w.input() + " --checkpoint " + w.ckpt() +
                  " --mode fused --intensity " + intensity + " --out " + w.path(out))
                .code == 0);
    const auto img = load_image(w.dir.path() / out);
    CHECK(img.shape() == Shape{1, 3, 72, 72});
    contents.insert(slurp(w.dir.path() / out));
  }
  CHECK(contents.size() == 4);

  CtdpModel<float> model;
  model.load_params(load_checkpoint(w.trained()));
  for (const char* mode : {"color", "texture"}) {
    const std::string out = std::string("mode_") + mode + ".png";
    REQUIRE(w.run("stylize --input " + w.input() + " --checkpoint " + w.ckpt() + " --mode " +
                  mode + " --out " + w.path(out))
                .code == 0);
    StylizeOptions opt;
    opt.mode = parse_stylize_mode(mode);
    save_image(stylize(model, load_image(w.image), opt), w.dir.path() / ("lib_" + out));
    CHECK(slurp(w.dir.path() / out) == slurp(w.dir.path() / ("lib_" + out)));
  }
}

TEST_CASE("stylize keeps 1024 x 1024 dimensions") {
  auto& w = ws();
  auto e = rng::make_engine(2);
  save_image(ctdp::testing::random_tensor<float>({1, 3, 1024, 1024}, e, 0, 1),
             w.dir.path() / "big.png");
  for (const char* mode : {"color", "texture", "fused"}) {
    const std::string out = std::string("big_") + mode + ".png";
    REQUIRE(w.run("stylize --input " + w.path("big.png") + " --checkpoint " + w.ckpt() +
                  " --mode " + mode + " --out " + w.path(out))
                .code == 0);
    CHECK(load_image(w.dir.path() / out).shape() == Shape{1, 3, 1024, 1024});
  }
}

TEST_CASE("smoothed stylize and noise injection") {
  auto& w = ws();
  const std::string base = "--input " + w.input() + " --checkpoint " + w.ckpt();
  REQUIRE(w.run("stylize " + base + " --out " + w.path("plain.png")).code == 0);
  REQUIRE(w.run("stylize " + base + " --smooth-input --out " + w.path("smoothed.png")).code == 0);
  CHECK(slurp(w.dir.path() / "plain.png") != slurp(w.dir.path() / "smoothed.png"));

  REQUIRE(w.run("inject-noise " + base + " --channels 0,7 --amplitude 0 --out " + w.path("n0.png"))
              .code == 0);
  CHECK(slurp(w.dir.path() / "n0.png") == slurp(w.dir.path() / "plain.png"));
  for (const char* out : {"n1.png", "n2.png"}) {
    REQUIRE(w.run("inject-noise " + base + " --channels 0,7 --amplitude 2 --seed 3 --out " +
                  w.path(out))
                .code == 0);
  }
  CHECK(slurp(w.dir.path() / "n1.png") == slurp(w.dir.path() / "n2.png"));
  CHECK(slurp(w.dir.path() / "n1.png") != slurp(w.dir.path() / "plain.png"));
  REQUIRE(w.run("inject-noise " + base + " --channels all --amplitude 2 --seed 3 --out " +
                w.path("nall.png"))
              .code == 0);
  CHECK(slurp(w.dir.path() / "nall.png") != slurp(w.dir.path() / "n1.png"));
}

TEST_CASE("train writes artifacts and is reproducible") {
  auto& w = ws();
  w.trained();
  const std::string args = "train --profile toy --iters 3 --content-dir " + w.path("content") +
                           " --style " + w.path("style.png") + " --out ";
  const Run again = w.run(args + w.path("run2") + " --seed 4");
  REQUIRE(again.code == 0);
  CHECK(again.out.find("final.ctdp") != std::string::npos);
  const auto a = w.dir.path() / "run" / "report.jsonl";
  const auto b = w.dir.path() / "run2" / "report.jsonl";
  REQUIRE(fs::exists(a));
  CHECK(slurp(a) == slurp(b));
  const std::string report = slurp(a);
  CHECK(std::count(report.begin(), report.end(), '\n') == 3);
  CHECK(slurp(w.dir.path() / "run" / "final.ctdp") == slurp(w.dir.path() / "run2" / "final.ctdp"));

  REQUIRE(w.run(args + w.path("run3") + " --seed 5").code == 0);
  CHECK(slurp(a) != slurp(w.dir.path() / "run3" / "report.jsonl"));
}
