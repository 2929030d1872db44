#include <doctest.h>

#include "hoidet/geometry.hpp"
#include "oracles.hpp"

using namespace hoidet;

TEST_SUITE("geometry") {

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou agrees with the pixel-set oracle on integer boxes") {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto a = oracle::random_int_box(rng, 0, 12, 10);
    const auto b = oracle::random_int_box(rng, 0, 12, 10);
    CHECK(iou(a, b) == doctest::Approx(oracle::pixel_iou(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("attention window examples") {
  CHECK(attention_window({0, 0, 4, 8}, {4, 0, 8, 8}) == BBox{0, 0, 8, 8});
  CHECK(attention_window({1, 2, 3, 4}, {1, 2, 3, 4}) == BBox{1, 2, 3, 4});
  CHECK(attention_window({0, 0, 2, 2}, {10, 10, 12, 12}) == BBox{0, 0, 12, 12});
}

TEST_CASE("clip to image") {
  CHECK(clip_to_image({-5, -5, 50, 10}, 40, 30) == BBox{0, 0, 40, 10});
  CHECK_FALSE(clip_to_image({45, 0, 50, 10}, 40, 30).is_valid());
}

}  // TEST_SUITE
