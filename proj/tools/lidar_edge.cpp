/**
 * Copyright 2026 The lidar_edge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// lidar_edge: gen-data, train, detect, compare, gradcheck.
// Values come from the built-in defaults, then --config, then flags.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lidar_edge/pipeline.hpp"

namespace le = lidar_edge;

namespace {

template <typename T>
std::string show(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string show(bool v) { return v ? "true" : "false"; }

std::string show(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

/// Overrides staged from the command line and applied after --config.
struct Overrides {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::vector<std::function<void(le::Config&)>> apply;
};

template <typename T, typename Setter>
void add_override(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& help,
                  const T& default_value, Setter set) {
  auto slot = std::make_shared<std::optional<T>>();
  app->add_option_function<T>(flag, [slot](const T& v) { *slot = v; }, help)
      ->default_str(show(default_value));
  ov.apply.push_back([slot, set](le::Config& c) {
    if (*slot) set(c, **slot);
  });
}

void add_common(CLI::App* app, Overrides& ov, const le::Config& d) {
  app->add_option("--config", ov.config_path, "JSON config file (config_version 1)");
  app->add_option_function<std::string>(
         "--out", [&ov](const std::string& v) { ov.out_dir = v; }, "output directory")
      ->default_str(d.paths.out_dir);
}

le::Config resolve(const Overrides& ov) {
  le::Config c = ov.config_path.empty() ? le::Config{} : le::load_config(ov.config_path);
  if (ov.out_dir) c.paths.out_dir = *ov.out_dir;
  for (const auto& f : ov.apply) f(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const le::Config d;
  CLI::App app{"Edge detection on LiDAR range images"};
  app.require_subcommand(1);

  Overrides gen_ov, train_ov, detect_ov, compare_ov;

  auto* gen = app.add_subcommand("gen-data", "render the synthetic dataset and split it");
  add_common(gen, gen_ov, d);
  add_override(gen, gen_ov, "--n", "number of samples", d.dataset.n,
               [](le::Config& c, std::size_t v) { c.dataset.n = v; });
  add_override(gen, gen_ov, "--seed", "dataset seed", d.dataset.seed,
               [](le::Config& c, std::uint64_t v) { c.dataset.seed = v; });
  add_override(gen, gen_ov, "--delta", "range jump (m) labelled as an edge", d.dataset.delta,
               [](le::Config& c, double v) { c.dataset.delta = v; });
  add_override(gen, gen_ov, "--height", "beam rows", d.lidar.height,
               [](le::Config& c, std::size_t v) { c.lidar.height = v; });
  add_override(gen, gen_ov, "--width", "beam columns", d.lidar.width,
               [](le::Config& c, std::size_t v) { c.lidar.width = v; });
  add_override(gen, gen_ov, "--noise-sigma", "range noise sigma (m)", d.lidar.noise_sigma,
               [](le::Config& c, double v) { c.lidar.noise_sigma = v; });
  add_override(gen, gen_ov, "--dropout-prob", "per-beam dropout probability",
               d.lidar.dropout_prob, [](le::Config& c, double v) { c.lidar.dropout_prob = v; });

  auto* train = app.add_subcommand("train", "train the configured model variant");
  add_common(train, train_ov, d);
  add_override(train, train_ov, "--variant", "nested or patch", std::string("nested"),
               [](le::Config& c, const std::string& v) { c.model.variant = le::parse_variant(v); });
  add_override(train, train_ov, "--epochs", "maximum epochs", d.train.epochs,
               [](le::Config& c, std::size_t v) { c.train.epochs = v; });
  add_override(train, train_ov, "--batch-size", "minibatch size", d.train.batch_size,
               [](le::Config& c, std::size_t v) { c.train.batch_size = v; });
  add_override(train, train_ov, "--optimizer", "sgd, adam or rmsprop", std::string("adam"),
               [](le::Config& c, const std::string& v) {
                 c.train.optimizer.kind = le::nn::parse_optimizer(v);
               });
  add_override(train, train_ov, "--lr", "learning rate", d.train.optimizer.learning_rate,
               [](le::Config& c, double v) { c.train.optimizer.learning_rate = v; });
  add_override(train, train_ov, "--loss", "bce or mse", std::string("bce"),
               [](le::Config& c, const std::string& v) { c.train.loss.kind = le::parse_loss(v); });
  add_override(train, train_ov, "--class-balance", "class-balanced BCE (true/false)",
               d.train.loss.class_balance,
               [](le::Config& c, bool v) { c.train.loss.class_balance = v; });
  add_override(train, train_ov, "--patience", "early-stop patience (epochs)", d.train.patience,
               [](le::Config& c, std::size_t v) { c.train.patience = v; });
  add_override(train, train_ov, "--seed", "training seed", d.train.seed,
               [](le::Config& c, std::uint64_t v) { c.train.seed = v; });
  add_override(train, train_ov, "--threads", "worker threads (0 = all cores)", d.train.threads,
               [](le::Config& c, std::size_t v) { c.train.threads = v; });

  le::DetectOptions det;
  std::string det_input, det_output;
  auto* detect = app.add_subcommand("detect", "run one detector on a PGM or LRI1 image");
  add_common(detect, detect_ov, d);
  detect->add_option("--input", det_input, "input image (P5 PGM or LRI1)")->required();
  detect->add_option("--algorithm", det.algorithm, "canny, sobel, roberts, cnn or patchcnn")
      ->capture_default_str();
  detect->add_option("--output", det_output, "edge map path")
      ->default_str("<out>/detect/<stem>_<algorithm>.pgm");
  detect->add_option("--threshold", det.threshold, "cnn/patchcnn binarization threshold")
      ->capture_default_str();
  detect->add_option("--denoise", det.denoise, "input filter: none, gaussian or median")
      ->capture_default_str();
  detect->add_option("--denoise-sigma", det.denoise_sigma, "Gaussian denoise sigma")
      ->capture_default_str();
  detect->add_option("--median-radius", det.median_radius, "median denoise radius")
      ->capture_default_str();
  add_override(detect, detect_ov, "--canny-sigma", "Canny Gaussian sigma", d.classical.canny.sigma,
               [](le::Config& c, double v) { c.classical.canny.sigma = v; });
  add_override(detect, detect_ov, "--canny-low", "Canny low threshold (fraction of max)",
               d.classical.canny.low, [](le::Config& c, double v) { c.classical.canny.low = v; });
  add_override(detect, detect_ov, "--canny-high", "Canny high threshold (fraction of max)",
               d.classical.canny.high,
               [](le::Config& c, double v) { c.classical.canny.high = v; });
  add_override(detect, detect_ov, "--sobel-threshold", "Sobel threshold (fraction of max)",
               d.classical.sobel_threshold,
               [](le::Config& c, double v) { c.classical.sobel_threshold = v; });
  add_override(detect, detect_ov, "--roberts-threshold", "Roberts threshold (fraction of max)",
               d.classical.roberts_threshold,
               [](le::Config& c, double v) { c.classical.roberts_threshold = v; });

  auto* compare = app.add_subcommand("compare", "score detectors on the test split");
  add_common(compare, compare_ov, d);
  add_override(compare, compare_ov, "--detectors", "detectors to compare", d.eval.detectors,
               [](le::Config& c, const std::vector<std::string>& v) { c.eval.detectors = v; });
  add_override(compare, compare_ov, "--tolerance", "match tolerance in pixels", d.eval.tolerance,
               [](le::Config& c, int v) { c.eval.tolerance = v; });
  add_override(compare, compare_ov, "--n-thresholds", "ROC / tuning grid size",
               d.eval.n_thresholds, [](le::Config& c, std::size_t v) { c.eval.n_thresholds = v; });
  add_override(compare, compare_ov, "--tune", "tune thresholds on val (true/false)",
               d.classical.tune_on_val,
               [](le::Config& c, bool v) { c.classical.tune_on_val = v; });
  add_override(compare, compare_ov, "--threads", "worker threads (0 = all cores)",
               d.train.threads, [](le::Config& c, std::size_t v) { c.train.threads = v; });

  le::GradCheckOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of both models");
  grad->add_option("--tolerance", gc.tolerance, "max relative error")->capture_default_str();
  grad->add_option("--seed", gc.seed, "instance seed")->capture_default_str();
  grad->add_flag("--mutate", gc.mutate, "negate the pooling-path gradient (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? le::kExitOk : le::kExitUsage;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*gen) return le::run_command(err, [&] { return le::cmd_gen_data(resolve(gen_ov), out); });
  if (*train) return le::run_command(err, [&] { return le::cmd_train(resolve(train_ov), out); });
  if (*detect) {
    return le::run_command(err, [&] {
      const auto cfg = resolve(detect_ov);
      det.input = det_input;
      det.output = det_output;
      return le::cmd_detect(cfg, det, out);
    });
  }
  if (*compare) return le::run_command(err, [&] { return le::cmd_compare(resolve(compare_ov), out); });
  return le::run_command(err, [&] { return le::cmd_gradcheck(gc, out); });
}
