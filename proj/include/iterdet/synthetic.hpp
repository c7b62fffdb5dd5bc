#pragma once

#include <string>
#include <vector>

#include "iterdet/geometry.hpp"
#include "iterdet/random.hpp"
#include "iterdet/tensor.hpp"

namespace iterdet {

enum class Shape { Disk, Square, Triangle };

struct SceneSpec {
  int image_size = 64;
  int objects_min = 6;
  int objects_max = 16;
  double object_size_min = 8.0;
  double object_size_max = 20.0;
  // Probability that a new object is placed to overlap an existing one
  // with target IoU in [0.3, 0.7].
  double overlap_boost = 0.0;
  std::vector<Shape> shape_set = {Shape::Disk, Shape::Square, Shape::Triangle};
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
};

void validate_spec(const SceneSpec& spec);

struct SceneSample {
  Tensor image;             // [3, H, W], values in [0, 1]
  std::vector<BBox> boxes;  // tight pre-occlusion bounds
  std::vector<int> pair_counts;  // GT pairs with IoU > {0.3, 0.4, 0.5, 0.6}
};

// Renders one crowded scene of colored shapes. Later objects occlude
// earlier ones; boxes bound each shape's full pre-occlusion extent.
SceneSample generate_scene(const SceneSpec& spec, Rng& rng);

// Independent scenes from per-index derived seeds.
std::vector<SceneSample> generate_dataset(const SceneSpec& spec, int n_scenes,
                                          std::uint64_t seed);

// PNG images plus one annotations.json per directory, schema version
// "toy-crowd-1". Images are quantized to 8 bits on save.
void save_dataset(const std::vector<SceneSample>& samples,
                  const std::string& dir);
std::vector<SceneSample> load_dataset(const std::string& dir);

}  // namespace iterdet
