#include "iterdet/geometry.hpp"

namespace iterdet {

double iou(const BBox& a, const BBox& b) {
  validate_box(a);
  validate_box(b);
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

HistoryMap rasterize_history(const std::vector<BBox>& boxes, int width,
                             int height) {
  HistoryMap map(width, height);
  for (const BBox& b : boxes) {
    validate_box(b);
    // Inclusive integer pixel range covered by the box, clipped to the grid.
    const int x0 = std::max(0, static_cast<int>(std::ceil(b.x)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(b.x2())));
    const int y0 = std::max(0, static_cast<int>(std::ceil(b.y)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(b.y2())));
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        ++map.at(px, py);
      }
    }
  }
  return map;
}

std::optional<BBox> clip_box(const BBox& b, int width, int height) {
  validate_box(b);
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("clip_box: image dimensions must be positive");
  }
  const double x0 = std::max(b.x, 0.0);
  const double y0 = std::max(b.y, 0.0);
  const double x1 = std::min(b.x2(), static_cast<double>(width));
  const double y1 = std::min(b.y2(), static_cast<double>(height));
  if (x1 - x0 <= 0.0 || y1 - y0 <= 0.0) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace iterdet
