#pragma once

#include <string>
#include <vector>

#include "iterdet/geometry.hpp"
#include "iterdet/tensor.hpp"

namespace iterdet {

// SVG overlay of iteration-tagged detections on the image: iteration-1
// boxes green, iteration-2 yellow, later iterations distinct hues. Boxes
// below min_score are omitted. Each box becomes a <rect> with class
// "iter-N".
std::string render_svg(const Tensor& image,
                       const std::vector<ScoredBox>& detections,
                       double min_score = 0.1);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace iterdet
