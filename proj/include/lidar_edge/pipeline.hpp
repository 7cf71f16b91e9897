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

#ifndef LIDAR_EDGE_PIPELINE_HPP_
#define LIDAR_EDGE_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lidar_edge/compare.hpp"
#include "lidar_edge/config.hpp"
#include "lidar_edge/dataset.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/eval.hpp"
#include "lidar_edge/gradcheck.hpp"
#include "lidar_edge/imaging.hpp"
#include "lidar_edge/model_io.hpp"
#include "lidar_edge/pgm.hpp"
#include "lidar_edge/trainer.hpp"

namespace lidar_edge {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitMissing = 4,
  kExitDivergence = 5,
};

/// A file an earlier pipeline step should have produced is absent.
class MissingPrerequisiteError : public Error {
 public:
  using Error::Error;
};

/// Runs `body`, mapping library exceptions to exit codes and printing the
/// message to `err`.
inline int run_command(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const MissingPrerequisiteError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

inline void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::exists(p)) {
    throw MissingPrerequisiteError(what + " not found: " + p.string());
  }
}

inline Json dataset_summary(const DatasetManifest& m, const Config& cfg) {
  Json j;
  j["n"] = m.entries.size();
  j["seed"] = m.seed;
  j["generator_version"] = m.generator_version;
  j["height"] = cfg.lidar.height;
  j["width"] = cfg.lidar.width;
  j["train"] = m.count(Split::kTrain);
  j["val"] = m.count(Split::kVal);
  j["test"] = m.count(Split::kTest);
  return j;
}

/**
 * Renders the synthetic dataset under <out>/dataset, tags splits, and writes
 * <out>/dataset_summary.json.
 */
inline int cmd_gen_data(const Config& cfg, std::ostream& out) {
  cfg.validate();
  const auto root = cfg.paths.dataset();
  const auto raw = generate_dataset(cfg.dataset.n, cfg.lidar, cfg.dataset.policy,
                                    cfg.dataset.delta, cfg.dataset.seed, root);
  const auto split = split_dataset(raw, cfg.dataset.ratios, cfg.dataset.seed);
  write_manifest(cfg.paths.manifest(), split);
  const auto summary = dataset_summary(split, cfg);
  io::write_text(cfg.paths.out() / "dataset_summary.json", summary.dump(2) + "\n");
  out << "generated " << split.entries.size() << " samples in " << root.string() << " (train "
      << split.count(Split::kTrain) << ", val " << split.count(Split::kVal) << ", test "
      << split.count(Split::kTest) << ")\n";
  return kExitOk;
}

struct LoadedSplits {
  std::vector<Sample> train, val, test;
};

inline LoadedSplits load_splits(const Config& cfg, bool train, bool val, bool test) {
  require_file(cfg.paths.manifest(), "dataset manifest");
  const auto m = read_manifest(cfg.paths.manifest());
  const auto root = cfg.paths.dataset();
  LoadedSplits s;
  if (train) s.train = load_samples(m.subset(Split::kTrain), root);
  if (val) s.val = load_samples(m.subset(Split::kVal), root);
  if (test) s.test = load_samples(m.subset(Split::kTest), root);
  return s;
}

inline std::string epoch_line(const nn::EpochRecord& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "epoch %3zu  loss %.6f  val P %.4f R %.4f F1 %.4f  best F1 %.4f @ %.2f  %.1fs",
                r.epoch, r.train_loss, r.val_precision, r.val_recall, r.val_f1, r.val_best_f1,
                r.val_best_threshold, r.seconds);
  return buf;
}

inline void write_runlog(const std::filesystem::path& dir, const std::string& prefix,
                         const nn::RunLog& log) {
  io::write_text(dir / (prefix + "runlog.csv"), nn::runlog_csv(log));
  io::write_text(dir / (prefix + "runlog_timing.csv"), nn::runlog_timing_csv(log));
}

/**
 * Trains the configured variant. Nested: <out>/<model>, runlog.csv,
 * runlog_timing.csv. Patch: <out>/<patch_model>, patch_runlog.csv,
 * patch_runlog_timing.csv.
 */
inline int cmd_train(const Config& cfg, std::ostream& out) {
  cfg.validate();
  const auto data = load_splits(cfg, true, true, false);
  if (data.train.empty() || data.val.empty()) {
    throw MissingPrerequisiteError("dataset has an empty train or val split: " +
                                   cfg.paths.manifest().string());
  }
  if (cfg.model.variant == ModelVariant::kNested) {
    const auto res = nn::train_nested(
        data.train, data.val, cfg.nested_arch(), cfg.train,
        [&](const nn::EpochRecord& r, const nn::NestedNetParams&) { out << epoch_line(r) << "\n"; });
    nn::save_model(res.params, cfg.paths.model_path());
    write_runlog(cfg.paths.out(), "", res.log);
    out << "saved " << cfg.paths.model_path().string() << "\n";
    out << "final validation F1 " << format_fixed(res.log.best().val_f1) << " (epoch "
        << res.log.best_epoch << ", threshold 0.5)\n";
    return kExitOk;
  }
  const auto res = nn::train_patch(data.train, data.val, cfg.model.patch, cfg.train);
  for (const auto& r : res.log.records) out << epoch_line(r) << "\n";
  nn::save_model(res.params, cfg.paths.patch_model_path());
  write_runlog(cfg.paths.out(), "patch_", res.log);
  out << "saved " << cfg.paths.patch_model_path().string() << "\n";
  out << "final validation F1 " << format_fixed(res.log.best().val_f1) << " (epoch "
      << res.log.best_epoch << ", balanced val patches, threshold 0.5)\n";
  return kExitOk;
}

/// Detector input from a PGM (P5) or LRI1 file, chosen by magic bytes.
inline GrayImage read_detector_input(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 4 && std::string(bytes.data(), 4) == "LRI1") {
    return range_to_intensity(read_lri(path));
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return read_pgm(path);
  throw FormatError(path.string() + ": neither a P5 PGM nor an LRI1 file");
}

template <typename Params>
Params load_required_model(const std::filesystem::path& path) {
  require_file(path, "model file");
  return nn::load_model_as<Params>(path);
}

struct DetectOptions {
  std::filesystem::path input;
  std::string algorithm = "sobel";
  std::filesystem::path output;  // empty: <out>/detect/<stem>_<algorithm>.pgm
  double threshold = 0.5;        // cnn and patchcnn binarization
  std::string denoise = "none";  // none, gaussian or median, applied to the input
  double denoise_sigma = 1.0;
  int median_radius = 1;
};

/**
 * Writes the edge map as PGM. The cnn detector also writes <stem>_prob.pgm and
 * one <stem>_sideN.pgm per side output; patchcnn writes <stem>_prob.pgm.
 */
inline int cmd_detect(const Config& cfg, const DetectOptions& opt, std::ostream& out) {
  const Detector d = parse_detector(opt.algorithm);
  if (!(opt.threshold >= 0.0 && opt.threshold <= 1.0)) {
    throw ConfigError("--threshold must be in [0,1]");
  }
  if (opt.denoise != "none" && opt.denoise != "gaussian" && opt.denoise != "median") {
    throw ConfigError("unknown --denoise '" + opt.denoise + "' (expected none, gaussian or median)");
  }
  if (opt.denoise == "gaussian" && !(opt.denoise_sigma > 0.0 && std::isfinite(opt.denoise_sigma))) {
    throw ConfigError("--denoise-sigma must be > 0");
  }
  if (opt.denoise == "median" && opt.median_radius < 1) {
    throw ConfigError("--median-radius must be >= 1");
  }
  auto output = opt.output;
  if (output.empty()) {
    output = cfg.paths.out() / "detect" /
             (opt.input.stem().string() + "_" + to_string(d) + ".pgm");
  }
  const auto sibling = [&](const std::string& suffix) {
    return output.parent_path() / (output.stem().string() + suffix + ".pgm");
  };
  // Load the model before the input so a missing model reports exit 4 first.
  std::optional<nn::NestedNetParams> nested;
  std::optional<nn::PatchNetParams> patch;
  if (d == Detector::kCnn) nested = load_required_model<nn::NestedNetParams>(cfg.paths.model_path());
  if (d == Detector::kPatchCnn) {
    patch = load_required_model<nn::PatchNetParams>(cfg.paths.patch_model_path());
  }
  require_file(opt.input, "input image");
  GrayImage img = read_detector_input(opt.input);
  if (opt.denoise == "gaussian") img = gaussian_filter(img, opt.denoise_sigma);
  if (opt.denoise == "median") img = median_filter(img, opt.median_radius);

  EdgeMap edges;
  switch (d) {
    case Detector::kCanny: edges = canny(img, cfg.classical.canny); break;
    case Detector::kSobel:
      edges = threshold_magnitude(sobel(img), cfg.classical.sobel_threshold);
      break;
    case Detector::kRoberts:
      edges = threshold_magnitude(roberts(img), cfg.classical.roberts_threshold);
      break;
    case Detector::kCnn: {
      const auto trace = nn::predict_nested(*nested, img);
      edges = binarize(trace.fused, opt.threshold);
      write_pgm(sibling("_prob"), trace.fused);
      for (std::size_t s = 0; s < trace.sides.size(); ++s) {
        write_pgm(sibling("_side" + std::to_string(s + 1)), trace.sides[s]);
      }
      break;
    }
    case Detector::kPatchCnn: {
      const auto prob = nn::predict_patch(*patch, img);
      edges = binarize(prob, opt.threshold);
      write_pgm(sibling("_prob"), prob);
      break;
    }
  }
  write_pgm(output, edges);
  out << "wrote " << output.string() << " (" << count_edges(edges) << " edge pixels)\n";
  return kExitOk;
}

/// Comparison over the test split: comparison.csv, roc_<detector>.csv, table.
inline int cmd_compare(const Config& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.eval.detectors.empty()) throw ConfigError("eval.detectors is empty");
  std::vector<Detector> dets;
  for (const auto& s : cfg.eval.detectors) dets.push_back(parse_detector(s));
  std::optional<nn::NestedNetParams> nested;
  std::optional<nn::PatchNetParams> patch;
  DetectorModels models;
  for (Detector d : dets) {
    if (d == Detector::kCnn && !nested) {
      nested = load_required_model<nn::NestedNetParams>(cfg.paths.model_path());
      models.nested = &*nested;
    }
    if (d == Detector::kPatchCnn && !patch) {
      patch = load_required_model<nn::PatchNetParams>(cfg.paths.patch_model_path());
      models.patch = &*patch;
    }
  }
  const auto data = load_splits(cfg, false, cfg.classical.tune_on_val, true);
  if (data.test.empty()) {
    throw MissingPrerequisiteError("dataset has an empty test split: " +
                                   cfg.paths.manifest().string());
  }
  CompareSettings settings{cfg.classical, cfg.eval.tolerance, cfg.eval.n_thresholds,
                           cfg.train.threads};
  const auto cmp = compare_detectors(data.test, data.val, dets, settings, models);
  io::write_text(cfg.paths.out() / "comparison.csv", comparison_csv(cmp.rows));
  for (const auto& r : cmp.rocs) {
    io::write_text(cfg.paths.out() / ("roc_" + r.algorithm + ".csv"), roc_csv(r.points));
  }
  out << comparison_table(cmp.rows);
  return kExitOk;
}

struct GradCheckOptions {
  double tolerance = nn::kGradCheckTolerance;
  std::uint64_t seed = 1;
  bool mutate = false;  // negate the gradient through the first max-pool
};

inline void print_report(const nn::GradCheckReport& rep, std::ostream& out) {
  char buf[200];
  for (const auto& t : rep.tensors) {
    std::snprintf(buf, sizeof buf, "%-7s %-22s %6zu  max_rel_error %.3e  %s\n",
                  rep.model.c_str(), t.name.c_str(), t.size, t.max_rel_error,
                  t.pass ? "PASS" : "FAIL");
    out << buf;
  }
}

/// Checks both variants on tiny random instances; exit 1 on any failure.
inline int cmd_gradcheck(const GradCheckOptions& opt, std::ostream& out) {
  if (!(opt.tolerance > 0.0)) throw ConfigError("--tolerance must be > 0");
  const auto nested = nn::grad_check_nested(nn::tiny_nested_arch(), opt.seed, opt.tolerance,
                                            nn::BackwardHooks{opt.mutate});
  const auto patch = nn::grad_check_patch(nn::tiny_patch_arch(), opt.seed, opt.tolerance,
                                          nn::PatchBackwardHooks{opt.mutate});
  print_report(nested, out);
  print_report(patch, out);
  const bool ok = nested.pass() && patch.pass();
  char buf[160];
  std::snprintf(buf, sizeof buf, "max relative error %.3e (tolerance %.1e): %s\n",
                std::max(nested.max_rel_error(), patch.max_rel_error()), opt.tolerance,
                ok ? "PASS" : "FAIL");
  out << buf;
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_PIPELINE_HPP_
