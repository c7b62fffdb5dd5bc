#include "iterdet/checkpoint.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace iterdet {

namespace {

DetectorParams make_skeleton(const DetectorConfig& config) {
  const int c = config.stem_channels;
  DetectorParams params;
  params.image_stem = make_zero_conv(c, 3, config.stem_kernel,
                                     config.stem_stride,
                                     (config.stem_kernel - 1) / 2);
  params.history_stem =
      make_zero_conv(c, 1, config.history_kernel, config.history_stride,
                     (config.history_kernel - 1) / 2);
  for (int i = 0; i < config.trunk_depth; ++i) {
    params.trunk.push_back(make_zero_conv(c, c, 3, i == 0 ? 2 : 1, 1));
  }
  params.score_head = make_zero_conv(1, c, 3, 1, 1);
  params.box_head = make_zero_conv(4, c, 3, 1, 1);
  return params;
}

json config_to_json(const DetectorConfig& c) {
  return {{"stem_channels", c.stem_channels},
          {"trunk_depth", c.trunk_depth},
          {"stem_kernel", c.stem_kernel},
          {"stem_stride", c.stem_stride},
          {"history_kernel", c.history_kernel},
          {"history_stride", c.history_stride},
          {"head_stride", c.head_stride},
          {"score_threshold", c.score_threshold},
          {"nms_iou", c.nms_iou},
          {"focal_alpha", c.focal_alpha},
          {"focal_gamma", c.focal_gamma},
          {"l1_weight", c.l1_weight}};
}

DetectorConfig config_from_json(const json& j) {
  DetectorConfig c;
  c.stem_channels = j.at("stem_channels").get<int>();
  c.trunk_depth = j.at("trunk_depth").get<int>();
  c.stem_kernel = j.at("stem_kernel").get<int>();
  c.stem_stride = j.at("stem_stride").get<int>();
  c.history_kernel = j.at("history_kernel").get<int>();
  c.history_stride = j.at("history_stride").get<int>();
  c.head_stride = j.at("head_stride").get<int>();
  c.score_threshold = j.at("score_threshold").get<double>();
  c.nms_iou = j.at("nms_iou").get<double>();
  c.focal_alpha = j.at("focal_alpha").get<double>();
  c.focal_gamma = j.at("focal_gamma").get<double>();
  c.l1_weight = j.at("l1_weight").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json params = json::array();
  ckpt.params.for_each_param([&](const std::string& name, const Tensor& t) {
    params.push_back({{"name", name}, {"shape", t.shape}, {"data", t.data}});
  });
  json doc = {{"magic", kCheckpointMagic},
              {"config", config_to_json(ckpt.config)},
              {"params", params}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
  out << doc.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: corrupt JSON in " + path +
                             ": " + e.what());
  }
  if (!doc.contains("magic") || doc["magic"] != kCheckpointMagic) {
    throw std::runtime_error("load_checkpoint: " + path +
                             " is not an ITERDET-CKPT-1 checkpoint");
  }
  Checkpoint ckpt;
  ckpt.config = config_from_json(doc.at("config"));
  ckpt.params = make_skeleton(ckpt.config);

  std::map<std::string, const json*> by_name;
  for (const json& entry : doc.at("params")) {
    by_name[entry.at("name").get<std::string>()] = &entry;
  }
  ckpt.params.for_each_param([&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("load_checkpoint: missing parameter " + name +
                               " in " + path);
    }
    const json& entry = *it->second;
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != t.shape) {
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    }
    t.data = entry.at("data").get<std::vector<double>>();
    if (t.data.size() != t.numel_of(t.shape)) {
      throw std::runtime_error("load_checkpoint: bad data length for " + name);
    }
  });
  return ckpt;
}

}  // namespace iterdet
