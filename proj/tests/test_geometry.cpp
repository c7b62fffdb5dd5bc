#include <doctest.h>

#include <cmath>

#include "iterdet/geometry.hpp"
#include "iterdet/random.hpp"

using namespace iterdet;

namespace {

// Naive per-pixel, per-box double loop: the independent oracle for
// rasterize_history.
HistoryMap rasterize_reference(const std::vector<BBox>& boxes, int width,
                               int height) {
  HistoryMap map(width, height);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      for (const BBox& b : boxes) {
        if (b.x <= px && px <= b.x + b.w && b.y <= py && py <= b.y + b.h) {
          ++map.at(px, py);
        }
      }
    }
  }
  return map;
}

BBox random_box(Rng& rng, double extent) {
  return BBox{rng.uniform(-10.0, extent), rng.uniform(-10.0, extent),
              rng.uniform(0.5, extent / 2.0), rng.uniform(0.5, extent / 2.0)};
}

}  // namespace

TEST_CASE("iou on hand-picked boxes") {
  const BBox unit{0, 0, 2, 2};
  CHECK(iou(unit, unit) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 1, 1}, {5, 5, 1, 1}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou symmetry and range on random boxes") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const BBox a = random_box(rng, 50.0);
    const BBox b = random_box(rng, 50.0);
    const double o = iou(a, b);
    CHECK(o == iou(b, a));
    CHECK(o >= 0.0);
    CHECK(o <= 1.0);
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("iou rejects degenerate boxes") {
  CHECK_THROWS_AS(iou({0, 0, 0, 1}, {0, 0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(iou({0, 0, 1, 1}, {0, 0, 1, -1}), std::invalid_argument);
}

TEST_CASE("rasterize_history: empty set gives all zeros") {
  HistoryMap map = rasterize_history({}, 4, 4);
  for (int v : map.counts()) CHECK(v == 0);
}

TEST_CASE("rasterize_history: single box, inclusive bounds") {
  HistoryMap map = rasterize_history({{0, 0, 2, 2}}, 4, 4);
  for (int py = 0; py < 4; ++py) {
    for (int px = 0; px < 4; ++px) {
      const int expected = (px <= 2 && py <= 2) ? 1 : 0;
      CHECK(map.at(px, py) == expected);
    }
  }
}

TEST_CASE("rasterize_history: overlap block counts two") {
  HistoryMap map = rasterize_history({{0, 0, 2, 2}, {1, 1, 2, 2}}, 8, 8);
  CHECK(map == rasterize_reference({{0, 0, 2, 2}, {1, 1, 2, 2}}, 8, 8));
  for (int py = 1; py <= 2; ++py) {
    for (int px = 1; px <= 2; ++px) CHECK(map.at(px, py) == 2);
  }
  CHECK(map.at(0, 0) == 1);
  CHECK(map.at(3, 3) == 1);
}

TEST_CASE("rasterize_history equals brute force on random sets") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = rng.uniform_int(1, 128);
    const int h = rng.uniform_int(1, 128);
    const int n = rng.uniform_int(0, 50);
    std::vector<BBox> boxes;
    for (int i = 0; i < n; ++i) boxes.push_back(random_box(rng, 100.0));
    CHECK(rasterize_history(boxes, w, h) == rasterize_reference(boxes, w, h));
  }
}

TEST_CASE("rasterize_history additivity over box set union") {
  Rng rng(13);
  std::vector<BBox> b1, b2;
  for (int i = 0; i < 10; ++i) b1.push_back(random_box(rng, 40.0));
  for (int i = 0; i < 10; ++i) b2.push_back(random_box(rng, 40.0));
  std::vector<BBox> all = b1;
  all.insert(all.end(), b2.begin(), b2.end());
  HistoryMap sum = rasterize_history(b1, 64, 64);
  HistoryMap m2 = rasterize_history(b2, 64, 64);
  for (int py = 0; py < 64; ++py) {
    for (int px = 0; px < 64; ++px) sum.at(px, py) += m2.at(px, py);
  }
  CHECK(sum == rasterize_history(all, 64, 64));
}

TEST_CASE("clip_box") {
  auto inside = clip_box({1, 1, 2, 2}, 10, 10);
  REQUIRE(inside.has_value());
  CHECK(inside->x == 1.0);
  CHECK(inside->w == 2.0);

  auto corner = clip_box({-2, -2, 4, 4}, 10, 10);
  REQUIRE(corner.has_value());
  CHECK(corner->x == 0.0);
  CHECK(corner->y == 0.0);
  CHECK(corner->w == 2.0);
  CHECK(corner->h == 2.0);

  CHECK_FALSE(clip_box({20, 20, 2, 2}, 10, 10).has_value());
}

TEST_CASE("history boxes differing only outside the image rasterize alike") {
  // A box fully outside contributes nothing.
  HistoryMap with = rasterize_history({{2, 2, 3, 3}, {100, 100, 5, 5}}, 16, 16);
  HistoryMap without = rasterize_history({{2, 2, 3, 3}}, 16, 16);
  CHECK(with == without);
}
