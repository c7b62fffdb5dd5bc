// Command-line front end: gen-data, train, eval, viz.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iterdet/checkpoint.hpp"
#include "iterdet/iterdet.hpp"
#include "iterdet/metrics.hpp"
#include "iterdet/png_io.hpp"
#include "iterdet/svg.hpp"
#include "iterdet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iterdet;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool log_enabled() {
  const char* v = std::getenv("ITERDET_LOG");
  return v && *v && std::string(v) != "0" && std::string(v) != "off";
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << "[iterdet] " << msg << "\n";
}

struct DataConfig {
  int train_scenes = 2000;
  int val_scenes = 200;
};

struct RunConfig {
  SceneSpec scene;
  DetectorConfig detector;
  IterConfig iter;
  TrainConfig train;
  DataConfig data;
};

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) {
      throw ConfigError("unknown config key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

Shape shape_from_string(const std::string& s) {
  if (s == "disk") return Shape::Disk;
  if (s == "square") return Shape::Square;
  if (s == "triangle") return Shape::Triangle;
  throw ConfigError("unknown shape \"" + s + "\"");
}

RunConfig parse_config(const json& doc) {
  reject_unknown(doc, {"version", "scene", "detector", "iter", "train", "data"},
                 "config root");
  if (!doc.contains("version") || doc.at("version").get<int>() != 1) {
    throw ConfigError("config must declare \"version\": 1");
  }
  RunConfig config;
  if (doc.contains("scene")) {
    const json& s = doc.at("scene");
    reject_unknown(s,
                   {"image_size", "objects_min", "objects_max",
                    "object_size_min", "object_size_max", "overlap_boost",
                    "noise_sigma", "shapes"},
                   "scene");
    get_if(s, "image_size", config.scene.image_size);
    get_if(s, "objects_min", config.scene.objects_min);
    get_if(s, "objects_max", config.scene.objects_max);
    get_if(s, "object_size_min", config.scene.object_size_min);
    get_if(s, "object_size_max", config.scene.object_size_max);
    get_if(s, "overlap_boost", config.scene.overlap_boost);
    get_if(s, "noise_sigma", config.scene.noise_sigma);
    if (s.contains("shapes")) {
      config.scene.shape_set.clear();
      for (const json& name : s.at("shapes")) {
        config.scene.shape_set.push_back(
            shape_from_string(name.get<std::string>()));
      }
    }
  }
  if (doc.contains("detector")) {
    const json& d = doc.at("detector");
    reject_unknown(d,
                   {"stem_channels", "trunk_depth", "stem_kernel",
                    "stem_stride", "history_kernel", "history_stride",
                    "head_stride", "score_threshold", "nms_iou", "focal_alpha",
                    "focal_gamma", "l1_weight"},
                   "detector");
    get_if(d, "stem_channels", config.detector.stem_channels);
    get_if(d, "trunk_depth", config.detector.trunk_depth);
    get_if(d, "stem_kernel", config.detector.stem_kernel);
    get_if(d, "stem_stride", config.detector.stem_stride);
    get_if(d, "history_kernel", config.detector.history_kernel);
    get_if(d, "history_stride", config.detector.history_stride);
    get_if(d, "head_stride", config.detector.head_stride);
    get_if(d, "score_threshold", config.detector.score_threshold);
    get_if(d, "nms_iou", config.detector.nms_iou);
    get_if(d, "focal_alpha", config.detector.focal_alpha);
    get_if(d, "focal_gamma", config.detector.focal_gamma);
    get_if(d, "l1_weight", config.detector.l1_weight);
  }
  if (doc.contains("iter")) {
    const json& i = doc.at("iter");
    reject_unknown(i, {"max_iterations", "stop_score", "mode", "max_total"},
                   "iter");
    get_if(i, "max_iterations", config.iter.max_iterations);
    get_if(i, "stop_score", config.iter.stop_score);
    get_if(i, "max_total", config.iter.max_total);
    if (i.contains("mode")) {
      const std::string mode = i.at("mode").get<std::string>();
      if (mode == "standard") {
        config.iter.mode = IterMode::Standard;
      } else if (mode == "one-per-iter") {
        config.iter.mode = IterMode::OnePerIteration;
      } else {
        throw ConfigError("unknown iter mode \"" + mode + "\"");
      }
    }
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    reject_unknown(t, {"epochs", "batch_size", "lr", "seed"}, "train");
    get_if(t, "epochs", config.train.epochs);
    get_if(t, "batch_size", config.train.batch_size);
    get_if(t, "lr", config.train.lr);
    get_if(t, "seed", config.train.seed);
  }
  if (doc.contains("data")) {
    const json& d = doc.at("data");
    reject_unknown(d, {"train_scenes", "val_scenes"}, "data");
    get_if(d, "train_scenes", config.data.train_scenes);
    get_if(d, "val_scenes", config.data.val_scenes);
  }
  try {
    validate_spec(config.scene);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return parse_config(json{{"version", 1}});
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<SceneSample> load_split(const std::string& dir) {
  try {
    return load_dataset(dir);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

Tensor image_from_png(const std::string& path) {
  Image8 image;
  try {
    image = read_png(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  Tensor out({3, image.height, image.width});
  std::size_t idx = 0;
  for (int py = 0; py < image.height; ++py) {
    for (int px = 0; px < image.width; ++px) {
      for (int c = 0; c < 3; ++c) out.at3(c, py, px) = image.rgb[idx++] / 255.0;
    }
  }
  return out;
}

std::vector<EvalSample> evaluate_split(const std::vector<SceneSample>& scenes,
                                       const DetectorParams& params,
                                       const DetectorConfig& det_config,
                                       const IterConfig& iter_config) {
  std::vector<EvalSample> samples;
  samples.reserve(scenes.size());
  for (const SceneSample& scene : scenes) {
    IterResult result =
        run_inference(scene.image, params, det_config, iter_config);
    EvalSample sample;
    sample.detections = result.boxes;
    sample.ground_truth = scene.boxes;
    sample.width = scene.image.shape[2];
    sample.height = scene.image.shape[1];
    samples.push_back(std::move(sample));
  }
  return samples;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

int cmd_gen_data(const RunConfig& config, const std::string& out_dir) {
  SceneSpec spec = config.scene;
  log_line("generating " + std::to_string(config.data.train_scenes) +
           " train + " + std::to_string(config.data.val_scenes) +
           " val scenes");
  auto train = generate_dataset(spec, config.data.train_scenes, spec.seed);
  // Val scenes come from a disjoint seed stream.
  auto val = generate_dataset(spec, config.data.val_scenes,
                              mix_seed(spec.seed, 0x7A1ULL));
  try {
    save_dataset(train, (fs::path(out_dir) / "train").string());
    save_dataset(val, (fs::path(out_dir) / "val").string());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  std::cout << "train split (" << train.size() << " scenes)\n"
            << crowding_stats_text(crowding_stats(train)) << "\nval split ("
            << val.size() << " scenes)\n"
            << crowding_stats_text(crowding_stats(val));
  return 0;
}

int cmd_train(const RunConfig& config, const std::string& data_dir,
              const std::string& out_ckpt, const std::string& resume) {
  auto dataset = load_split((fs::path(data_dir) / "train").string());
  std::ostringstream csv;
  csv << "epoch,loss\n";
  Checkpoint start;
  const DetectorParams* initial = nullptr;
  if (!resume.empty()) {
    start = load_checkpoint(resume);
    if (!(start.config == config.detector)) {
      throw ConfigError("resume checkpoint config does not match run config");
    }
    initial = &start.params;
  }
  TrainResult result = train_detector(
      dataset, config.detector, config.train,
      [&](int epoch, double loss) {
        csv << epoch << "," << loss << "\n";
        log_line("epoch " + std::to_string(epoch) + " loss " +
                 std::to_string(loss));
      },
      initial);
  save_checkpoint(out_ckpt, {config.detector, result.params});
  write_file(out_ckpt + ".loss.csv", csv.str());
  std::cout << "trained " << config.train.epochs << " epochs, final loss "
            << result.epoch_loss.back() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& config, const std::string& ckpt_path,
             const std::string& data_dir, const std::string& out_dir,
             int iterations_lo, int iterations_hi) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  auto scenes = load_split((fs::path(data_dir) / "val").string());
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  std::ostringstream ap_csv;
  ap_csv << "iterations,recall,ap,mmr\n";
  std::string report_json, report_text, pr_csv;
  for (int m = iterations_lo; m <= iterations_hi; ++m) {
    IterConfig iter = config.iter;
    iter.max_iterations = m;
    auto samples = evaluate_split(scenes, ckpt.params, ckpt.config, iter);
    MetricsReport report = compute_report(samples);
    ap_csv << m << "," << report.recall_at_005 << "," << report.ap << ","
           << report.mmr << "\n";
    if (m == iterations_hi) {
      report_json = report_to_json_string(report);
      report_text = report_to_text(report);
      pr_csv = pr_curve_csv(samples);
    }
    log_line("m=" + std::to_string(m) + " done");
  }
  write_file((fs::path(out_dir) / "report.json").string(), report_json);
  write_file((fs::path(out_dir) / "report.txt").string(), report_text);
  write_file((fs::path(out_dir) / "pr_curve.csv").string(), pr_csv);
  if (iterations_hi > iterations_lo) {
    write_file((fs::path(out_dir) / "ap_vs_iterations.csv").string(),
               ap_csv.str());
  }
  std::cout << report_text;
  return 0;
}

int cmd_viz(const RunConfig& config, const std::string& ckpt_path,
            const std::string& image_path, const std::string& out_svg) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Tensor image = image_from_png(image_path);
  IterResult result =
      run_inference(image, ckpt.params, ckpt.config, config.iter);
  write_svg(out_svg, render_svg(image, result.boxes, 0.1));
  std::cout << "wrote " << out_svg << " (" << result.boxes.size()
            << " boxes, " << result.iterations_run << " iterations)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative crowded-scene object detection toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_dir, ckpt_path, image_path, resume;
  std::string iterations_arg, mode_arg;
  long seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--seed", seed, "override the configured seed");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen);
  gen->add_option("--out", out_path, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train the detector");
  add_common(train);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_path, "output checkpoint path")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", out_path, "report output directory")->required();
  eval->add_option("--iterations", iterations_arg,
                   "iteration count, or a range like 1-3");
  eval->add_option("--mode", mode_arg, "standard | one-per-iter");

  CLI::App* viz = app.add_subcommand("viz", "render detections to SVG");
  add_common(viz);
  viz->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  viz->add_option("--image", image_path, "input PNG image")->required();
  viz->add_option("--out", out_path, "output SVG path")->required();
  viz->add_option("--iterations", iterations_arg, "iteration count");
  viz->add_option("--mode", mode_arg, "standard | one-per-iter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = load_config(config_path);
    if (seed >= 0) {
      config.scene.seed = static_cast<std::uint64_t>(seed);
      config.train.seed = static_cast<std::uint64_t>(seed);
    }
    if (!mode_arg.empty()) {
      if (mode_arg == "standard") {
        config.iter.mode = IterMode::Standard;
      } else if (mode_arg == "one-per-iter") {
        config.iter.mode = IterMode::OnePerIteration;
      } else {
        throw ConfigError("unknown mode \"" + mode_arg + "\"");
      }
    }
    int iter_lo = config.iter.max_iterations;
    int iter_hi = config.iter.max_iterations;
    if (!iterations_arg.empty()) {
      const auto dash = iterations_arg.find('-');
      try {
        if (dash == std::string::npos) {
          iter_lo = iter_hi = std::stoi(iterations_arg);
        } else {
          iter_lo = std::stoi(iterations_arg.substr(0, dash));
          iter_hi = std::stoi(iterations_arg.substr(dash + 1));
        }
      } catch (const std::exception&) {
        throw ConfigError("bad --iterations value \"" + iterations_arg + "\"");
      }
      if (iter_lo < 1 || iter_hi < iter_lo) {
        throw ConfigError("bad --iterations range");
      }
      config.iter.max_iterations = iter_hi;
    }

    if (gen->parsed()) return cmd_gen_data(config, out_path);
    if (train->parsed()) return cmd_train(config, data_dir, out_path, resume);
    if (eval->parsed()) {
      return cmd_eval(config, ckpt_path, data_dir, out_path, iter_lo, iter_hi);
    }
    if (viz->parsed()) {
      return cmd_viz(config, ckpt_path, image_path, out_path);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    if (msg.find("non-finite") != std::string::npos) {
      std::cerr << "numeric failure: " << msg << "\n";
      return 4;
    }
    std::cerr << "data error: " << msg << "\n";
    return 3;
  }
}
