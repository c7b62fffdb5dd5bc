#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace iterdet {

// Axis-aligned box: top-left corner (x, y), width w, height h.
// Coordinates are continuous; boxes may extend beyond the image bounds.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }
};

inline void validate_box(const BBox& b) {
  if (!(b.w > 0.0) || !(b.h > 0.0) || !std::isfinite(b.x) ||
      !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
    throw std::invalid_argument("BBox requires finite coordinates and w, h > 0");
  }
}

// Detection with confidence and the inference iteration that produced it
// (1-based; 0 for boxes that did not come from the iterative loop).
struct ScoredBox {
  BBox box;
  double score = 0.0;
  int iteration = 0;
};

// Per-pixel count of already-detected boxes covering that pixel.
// A pixel (px, py) is covered by box k iff
//   x_k <= px <= x_k + w_k  and  y_k <= py <= y_k + h_k
// with inclusive bounds on both sides.
class HistoryMap {
 public:
  HistoryMap() = default;
  HistoryMap(int width, int height)
      : width_(width), height_(height),
        counts_(static_cast<std::size_t>(width) * height, 0) {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("HistoryMap dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  int at(int px, int py) const {
    return counts_[static_cast<std::size_t>(py) * width_ + px];
  }
  int& at(int px, int py) {
    return counts_[static_cast<std::size_t>(py) * width_ + px];
  }

  const std::vector<int>& counts() const { return counts_; }

  bool operator==(const HistoryMap& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> counts_;
};

// Intersection over union. Returns 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

// Count, per pixel, how many boxes cover it (inclusive bounds).
// Contributions outside the grid are clipped silently.
HistoryMap rasterize_history(const std::vector<BBox>& boxes, int width,
                             int height);

// Intersection of b with the [0,width]x[0,height] rectangle.
// Empty (nullopt) when the intersection has zero area.
std::optional<BBox> clip_box(const BBox& b, int width, int height);

}  // namespace iterdet
