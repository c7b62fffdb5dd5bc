#include "iterdet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "iterdet/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iterdet {

void validate_spec(const SceneSpec& spec) {
  if (spec.image_size <= 0) {
    throw std::invalid_argument("SceneSpec: image_size must be positive");
  }
  if (spec.objects_max < spec.objects_min || spec.objects_min < 0) {
    throw std::invalid_argument("SceneSpec: invalid object count range");
  }
  if (spec.object_size_max < spec.object_size_min ||
      spec.object_size_min <= 0.0 ||
      spec.object_size_max >= spec.image_size) {
    throw std::invalid_argument("SceneSpec: invalid object size range");
  }
  if (spec.overlap_boost < 0.0 || spec.overlap_boost > 1.0) {
    throw std::invalid_argument("SceneSpec: overlap_boost must be in [0,1]");
  }
  if (spec.shape_set.empty()) {
    throw std::invalid_argument("SceneSpec: shape_set must not be empty");
  }
  if (spec.noise_sigma < 0.0) {
    throw std::invalid_argument("SceneSpec: noise_sigma must be >= 0");
  }
}

namespace {

struct PlacedObject {
  Shape shape;
  double cx, cy, size;
  std::array<double, 3> color;
  BBox box;
};

// Pixel-center coverage test for a shape of the given size at (cx, cy).
bool covers(Shape shape, double cx, double cy, double size, int px, int py) {
  const double dx = px + 0.5 - cx;
  const double dy = py + 0.5 - cy;
  const double half = size / 2.0;
  switch (shape) {
    case Shape::Disk:
      return dx * dx + dy * dy <= half * half;
    case Shape::Square:
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case Shape::Triangle: {
      // Up-pointing isoceles triangle inscribed in the size x size square.
      const double t = (dy + half) / size;  // 0 at apex row, 1 at base
      return t >= 0.0 && t <= 1.0 && std::abs(dx) <= half * t;
    }
  }
  return false;
}

// Tight bound of the pre-occlusion pixel mask, allowing pixels outside
// the image frame. Returns false if the mask is empty.
bool tight_box(Shape shape, double cx, double cy, double size, BBox* out) {
  const int x_lo = static_cast<int>(std::floor(cx - size / 2.0)) - 1;
  const int x_hi = static_cast<int>(std::ceil(cx + size / 2.0)) + 1;
  const int y_lo = static_cast<int>(std::floor(cy - size / 2.0)) - 1;
  const int y_hi = static_cast<int>(std::ceil(cy + size / 2.0)) + 1;
  int min_x = x_hi + 1, max_x = x_lo - 1, min_y = y_hi + 1, max_y = y_lo - 1;
  for (int py = y_lo; py <= y_hi; ++py) {
    for (int px = x_lo; px <= x_hi; ++px) {
      if (!covers(shape, cx, cy, size, px, py)) continue;
      min_x = std::min(min_x, px);
      max_x = std::max(max_x, px);
      min_y = std::min(min_y, py);
      max_y = std::max(max_y, py);
    }
  }
  if (max_x < min_x || max_y < min_y) return false;
  *out = BBox{static_cast<double>(min_x), static_cast<double>(min_y),
              static_cast<double>(max_x - min_x + 1),
              static_cast<double>(max_y - min_y + 1)};
  return true;
}

std::array<double, 3> draw_color(Rng& rng,
                                 const std::vector<std::array<double, 3>>& used,
                                 const std::array<double, 3>& background) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    std::array<double, 3> c = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0),
                               rng.uniform(0.3, 1.0)};
    auto l1 = [&](const std::array<double, 3>& other) {
      return std::abs(c[0] - other[0]) + std::abs(c[1] - other[1]) +
             std::abs(c[2] - other[2]);
    };
    bool distinct = l1(background) >= 0.3;
    for (const auto& other : used) distinct = distinct && l1(other) >= 0.3;
    if (distinct) return c;
  }
  return {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
}

std::vector<int> count_pairs(const std::vector<BBox>& boxes) {
  const double thresholds[4] = {0.3, 0.4, 0.5, 0.6};
  std::vector<int> counts(4, 0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      const double o = iou(boxes[i], boxes[j]);
      for (int t = 0; t < 4; ++t) {
        if (o > thresholds[t]) ++counts[t];
      }
    }
  }
  return counts;
}

}  // namespace

SceneSample generate_scene(const SceneSpec& spec, Rng& rng) {
  validate_spec(spec);
  const int size = spec.image_size;
  const std::array<double, 3> background = {rng.uniform(0.0, 0.2),
                                            rng.uniform(0.0, 0.2),
                                            rng.uniform(0.0, 0.2)};
  const int n = rng.uniform_int(spec.objects_min, spec.objects_max);

  std::vector<PlacedObject> objects;
  std::vector<std::array<double, 3>> colors;
  for (int k = 0; k < n; ++k) {
    PlacedObject obj;
    obj.shape = spec.shape_set[rng.uniform_int(
        0, static_cast<int>(spec.shape_set.size()) - 1)];
    obj.size = rng.uniform(spec.object_size_min, spec.object_size_max);
    const double margin = obj.size / 4.0;

    bool placed = false;
    if (!objects.empty() && rng.bernoulli(spec.overlap_boost)) {
      // Rejection-sample a center near an existing object until the pair
      // overlaps with IoU in [0.3, 0.7].
      const PlacedObject& anchor =
          objects[rng.uniform_int(0, static_cast<int>(objects.size()) - 1)];
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        const double cx = anchor.cx + rng.uniform(-obj.size, obj.size);
        const double cy = anchor.cy + rng.uniform(-obj.size, obj.size);
        BBox candidate;
        if (!tight_box(obj.shape, cx, cy, obj.size, &candidate)) continue;
        const double o = iou(candidate, anchor.box);
        if (o >= 0.3 && o <= 0.7) {
          obj.cx = cx;
          obj.cy = cy;
          obj.box = candidate;
          placed = true;
        }
      }
    }
    if (!placed) {
      obj.cx = rng.uniform(margin, size - margin);
      obj.cy = rng.uniform(margin, size - margin);
      if (!tight_box(obj.shape, obj.cx, obj.cy, obj.size, &obj.box)) continue;
    }
    obj.color = draw_color(rng, colors, background);
    colors.push_back(obj.color);
    objects.push_back(obj);
  }

  SceneSample sample;
  sample.image = Tensor({3, size, size});
  for (int c = 0; c < 3; ++c) {
    for (int py = 0; py < size; ++py) {
      for (int px = 0; px < size; ++px) {
        sample.image.at3(c, py, px) = background[c];
      }
    }
  }
  // Later objects occlude earlier ones.
  for (const PlacedObject& obj : objects) {
    const int x0 = std::max(0, static_cast<int>(std::floor(obj.box.x)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(obj.box.x2())));
    const int y0 = std::max(0, static_cast<int>(std::floor(obj.box.y)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(obj.box.y2())));
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        if (!covers(obj.shape, obj.cx, obj.cy, obj.size, px, py)) continue;
        for (int c = 0; c < 3; ++c) {
          sample.image.at3(c, py, px) = obj.color[c];
        }
      }
    }
    sample.boxes.push_back(obj.box);
  }
  if (spec.noise_sigma > 0.0) {
    for (double& v : sample.image.data) {
      v = std::clamp(v + rng.normal() * spec.noise_sigma, 0.0, 1.0);
    }
  }
  sample.pair_counts = count_pairs(sample.boxes);
  return sample;
}

std::vector<SceneSample> generate_dataset(const SceneSpec& spec, int n_scenes,
                                          std::uint64_t seed) {
  if (n_scenes < 0) {
    throw std::invalid_argument("generate_dataset: n_scenes must be >= 0");
  }
  std::vector<SceneSample> samples;
  samples.reserve(n_scenes);
  for (int i = 0; i < n_scenes; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    samples.push_back(generate_scene(spec, rng));
  }
  return samples;
}

namespace {

Image8 quantize(const Tensor& image) {
  Image8 out;
  out.height = image.shape[1];
  out.width = image.shape[2];
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  std::size_t idx = 0;
  for (int py = 0; py < out.height; ++py) {
    for (int px = 0; px < out.width; ++px) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at3(c, py, px), 0.0, 1.0);
        out.rgb[idx++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

Tensor dequantize(const Image8& image) {
  Tensor out({3, image.height, image.width});
  std::size_t idx = 0;
  for (int py = 0; py < image.height; ++py) {
    for (int px = 0; px < image.width; ++px) {
      for (int c = 0; c < 3; ++c) {
        out.at3(c, py, px) = image.rgb[idx++] / 255.0;
      }
    }
  }
  return out;
}

}  // namespace

void save_dataset(const std::vector<SceneSample>& samples,
                  const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  if (ec) {
    throw std::runtime_error("save_dataset: cannot create directory " + dir);
  }
  json images = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.png", i);
    const std::string rel = std::string("images/") + name;
    write_png((fs::path(dir) / rel).string(), quantize(samples[i].image));
    json boxes = json::array();
    for (const BBox& b : samples[i].boxes) {
      boxes.push_back(json::array({b.x, b.y, b.w, b.h}));
    }
    images.push_back({{"file", rel},
                      {"width", samples[i].image.shape[2]},
                      {"height", samples[i].image.shape[1]},
                      {"boxes", boxes}});
  }
  json doc = {{"version", "toy-crowd-1"}, {"images", images}};
  const std::string path = (fs::path(dir) / "annotations.json").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::vector<SceneSample> load_dataset(const std::string& dir) {
  const std::string path = (fs::path(dir) / "annotations.json").string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: missing file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_dataset: corrupt JSON in " + path + ": " +
                             e.what());
  }
  if (!doc.contains("version") || doc["version"] != "toy-crowd-1") {
    throw std::runtime_error("load_dataset: unsupported schema version in " +
                             path);
  }
  std::vector<SceneSample> samples;
  for (const json& entry : doc.at("images")) {
    SceneSample sample;
    const std::string file = entry.at("file").get<std::string>();
    Image8 image = read_png((fs::path(dir) / file).string());
    if (image.width != entry.at("width").get<int>() ||
        image.height != entry.at("height").get<int>()) {
      throw std::runtime_error("load_dataset: image size mismatch for " + file);
    }
    sample.image = dequantize(image);
    for (const json& b : entry.at("boxes")) {
      sample.boxes.push_back(
          BBox{b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()});
    }
    sample.pair_counts = count_pairs(sample.boxes);
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace iterdet
