#include <doctest.h>

#include <algorithm>

#include "iterdet/nms.hpp"
#include "iterdet/random.hpp"

using namespace iterdet;

namespace {

// O(n^2) reference: repeatedly scan for the global max among survivors.
std::vector<ScoredBox> greedy_reference(std::vector<ScoredBox> boxes,
                                        double threshold) {
  std::vector<char> removed(boxes.size(), 0), kept(boxes.size(), 0);
  std::vector<ScoredBox> out;
  for (;;) {
    std::size_t best = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (removed[i] || kept[i]) continue;
      if (best == boxes.size() || boxes[i].score > boxes[best].score) best = i;
    }
    if (best == boxes.size()) break;
    kept[best] = 1;
    out.push_back(boxes[best]);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (removed[i] || kept[i]) continue;
      if (iou(boxes[best].box, boxes[i].box) > threshold) removed[i] = 1;
    }
  }
  return out;
}

std::vector<ScoredBox> soft_reference(std::vector<ScoredBox> boxes,
                                      double iou_threshold,
                                      double final_threshold) {
  std::vector<char> done(boxes.size(), 0);
  std::vector<ScoredBox> out;
  for (;;) {
    std::size_t best = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (done[i]) continue;
      if (best == boxes.size() || boxes[i].score > boxes[best].score) best = i;
    }
    if (best == boxes.size()) break;
    done[best] = 1;
    out.push_back(boxes[best]);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (done[i]) continue;
      const double o = iou(boxes[best].box, boxes[i].box);
      if (o > iou_threshold) boxes[i].score *= 1.0 - o;
    }
  }
  std::erase_if(out,
                [&](const ScoredBox& b) { return b.score < final_threshold; });
  return out;
}

std::vector<ScoredBox> random_boxes(Rng& rng, int n) {
  std::vector<ScoredBox> boxes;
  for (int i = 0; i < n; ++i) {
    boxes.push_back({BBox{rng.uniform(0, 40), rng.uniform(0, 40),
                          rng.uniform(2, 20), rng.uniform(2, 20)},
                     rng.uniform(), 0});
  }
  return boxes;
}

bool same_boxes(const std::vector<ScoredBox>& a,
                const std::vector<ScoredBox>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].score != b[i].score || a[i].box.x != b[i].box.x ||
        a[i].box.y != b[i].box.y || a[i].box.w != b[i].box.w ||
        a[i].box.h != b[i].box.h) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("greedy_nms keeps the higher of two identical boxes") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 4, 4}, 0.9, 0},
                                  {BBox{0, 0, 4, 4}, 0.8, 0}};
  auto kept = greedy_nms(boxes, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);
}

TEST_CASE("greedy_nms keeps all disjoint boxes") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 2, 2}, 0.3, 0},
                                  {BBox{10, 10, 2, 2}, 0.9, 0},
                                  {BBox{20, 0, 2, 2}, 0.6, 0}};
  auto kept = greedy_nms(boxes, 0.5);
  CHECK(kept.size() == 3);
  // sorted by descending score
  CHECK(kept[0].score == 0.9);
  CHECK(kept[2].score == 0.3);
}

TEST_CASE("greedy_nms equals the O(n^2) reference on random sets") {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    auto boxes = random_boxes(rng, rng.uniform_int(0, 20));
    const double threshold = rng.uniform();
    CHECK(same_boxes(greedy_nms(boxes, threshold),
                     greedy_reference(boxes, threshold)));
  }
}

TEST_CASE("greedy_nms output properties") {
  Rng rng(22);
  auto boxes = random_boxes(rng, 30);
  const double threshold = 0.4;
  auto kept = greedy_nms(boxes, threshold);
  // subset with unchanged coordinates and scores
  for (const ScoredBox& k : kept) {
    bool found = false;
    for (const ScoredBox& b : boxes) found = found || same_boxes({k}, {b});
    CHECK(found);
  }
  // pairwise IoU constraint
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      CHECK(iou(kept[i].box, kept[j].box) <= threshold);
    }
  }
}

TEST_CASE("greedy_nms threshold boundaries") {
  Rng rng(23);
  auto boxes = random_boxes(rng, 15);
  // threshold 1.0: IoU can never be strictly greater, everything survives
  CHECK(greedy_nms(boxes, 1.0).size() == boxes.size());
  // threshold 0.0: survivors are pairwise disjoint
  auto kept = greedy_nms(boxes, 0.0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      CHECK(iou(kept[i].box, kept[j].box) == 0.0);
    }
  }
}

TEST_CASE("greedy_nms score ties break toward the lower input index") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 4, 4}, 0.5, 1},
                                  {BBox{0.1, 0, 4, 4}, 0.5, 2}};
  auto kept = greedy_nms(boxes, 0.3);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].iteration == 1);
}

TEST_CASE("soft_nms_linear leaves non-overlapping boxes unchanged") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 2, 2}, 0.9, 0},
                                  {BBox{10, 10, 2, 2}, 0.8, 0}};
  auto out = soft_nms_linear(boxes, 0.3, 0.0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].score == 0.9);
  CHECK(out[1].score == 0.8);
}

TEST_CASE("soft_nms_linear rescores by 1 - IoU") {
  // Two boxes overlapping at exactly IoU 0.5.
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 6, 4}, 0.9, 0},
                                  {BBox{2, 0, 6, 4}, 0.8, 0}};
  REQUIRE(iou(boxes[0].box, boxes[1].box) == doctest::Approx(0.5));
  auto out = soft_nms_linear(boxes, 0.3, 0.0);
  REQUIRE(out.size() == 2);
  CHECK(out[1].score == doctest::Approx(0.8 * 0.5));
}

TEST_CASE("soft_nms_linear equals the reference loop on random sets") {
  Rng rng(24);
  for (int trial = 0; trial < 500; ++trial) {
    auto boxes = random_boxes(rng, rng.uniform_int(0, 20));
    const double iou_t = rng.uniform();
    const double final_t = rng.uniform(0.0, 0.3);
    auto got = soft_nms_linear(boxes, iou_t, final_t);
    auto want = soft_reference(boxes, iou_t, final_t);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("soft_nms_linear never increases a score") {
  Rng rng(25);
  auto boxes = random_boxes(rng, 25);
  auto out = soft_nms_linear(boxes, 0.2, 0.0);
  REQUIRE(out.size() == boxes.size());
  double max_in = 0.0, max_out = 0.0;
  double sum_in = 0.0, sum_out = 0.0;
  for (const auto& b : boxes) {
    max_in = std::max(max_in, b.score);
    sum_in += b.score;
  }
  for (const auto& b : out) {
    max_out = std::max(max_out, b.score);
    sum_out += b.score;
  }
  CHECK(max_out <= max_in);
  CHECK(sum_out <= sum_in);
}

TEST_CASE("nms threshold validation") {
  CHECK_THROWS_AS(greedy_nms({}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(soft_nms_linear({}, 0.5, -0.1), std::invalid_argument);
}
