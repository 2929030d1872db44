#include <doctest.h>

#include "hoidet/errors.hpp"
#include "hoidet/interaction_pattern.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hoidet;

namespace {

std::vector<int> ones_in_row(const InteractionPattern& ip, int c, int row) {
  std::vector<int> cols;
  for (int x = 0; x < ip.size; ++x) {
    if (ip.at(c, row, x)) cols.push_back(x);
  }
  return cols;
}

}  // namespace

TEST_SUITE("ip") {

TEST_CASE("abutting halves, IP0") {
  const auto ip = encode_ip({0, 0, 4, 8}, {4, 0, 8, 8}, 8, false);
  CHECK(ip.window == BBox{0, 0, 8, 8});
  for (int r = 0; r < 8; ++r) {
    CHECK(ones_in_row(ip, 0, r) == std::vector<int>{0, 1, 2, 3});
    CHECK(ones_in_row(ip, 1, r) == std::vector<int>{4, 5, 6, 7});
  }
}

TEST_CASE("wide window, IP1 pads top and bottom") {
  const auto ip = encode_ip({0, 0, 8, 4}, {0, 0, 8, 4}, 8, true);
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 8; ++r) {
      CHECK(ones_in_row(ip, c, r).size() == (r >= 2 && r <= 5 ? 8u : 0u));
    }
  }
}

TEST_CASE("odd padding goes to the low side") {
  // 8 wide, 5 tall at S=8: 5 content rows, 3 padding rows, 2 of them on top.
  const auto ip = encode_ip({0, 0, 8, 5}, {0, 0, 8, 5}, 8, true);
  CHECK(ones_in_row(ip, 0, 1).empty());
  CHECK(ones_in_row(ip, 0, 2).size() == 8);
  CHECK(ones_in_row(ip, 0, 6).size() == 8);
  CHECK(ones_in_row(ip, 0, 7).empty());
}

TEST_CASE("extra boxes add channels") {
  const std::vector<BBox> extra{{2, 2, 3, 3}};
  const auto ip = encode_ip({0, 0, 4, 4}, {4, 4, 8, 8}, 8, false, extra);
  CHECK(ip.channels == 3);
  CHECK(ip.cells == oracle::raster_ip({{0, 0, 4, 4}, {4, 4, 8, 8}, {2, 2, 3, 3}}, 8, false));
}

TEST_CASE("matches the raster oracle cell for cell") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto h = oracle::random_int_box(rng, 0, 30, 25);
    const auto o = oracle::random_int_box(rng, 0, 30, 25);
    const int s = rng.uniform_int(2, 20);
    for (bool padded : {false, true}) {
      CHECK(encode_ip(h, o, s, padded).cells == oracle::raster_ip({h, o}, s, padded));
    }
  }
}

TEST_CASE("translation invariance and channel swap") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const auto h = oracle::random_real_box(rng, 0, 100, 60);
    const auto o = oracle::random_real_box(rng, 0, 100, 60);
    const double dx = rng.uniform(-200, 200), dy = rng.uniform(-200, 200);
    for (bool padded : {false, true}) {
      const auto a = encode_ip(h, o, 16, padded);
      const auto b = encode_ip(h.translated(dx, dy), o.translated(dx, dy), 16, padded);
      CHECK(a.cells == b.cells);
      const auto sw = encode_ip(o, h, 16, padded);
      CHECK(std::equal(a.channel(0).begin(), a.channel(0).end(), sw.channel(1).begin()));
      CHECK(std::equal(a.channel(1).begin(), a.channel(1).end(), sw.channel(0).begin()));
    }
  }
  const auto ref = encode_ip({0, 0, 4, 8}, {4, 0, 8, 8}, 8, true);
  CHECK(encode_ip({17.3, -5.9, 21.3, 2.1}, {21.3, -5.9, 25.3, 2.1}, 8, true).cells == ref.cells);
}

TEST_CASE("each channel is one rectangle and IP1 keeps the aspect ratio") {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const auto h = oracle::random_real_box(rng, 0, 50, 40);
    const auto o = oracle::random_real_box(rng, 0, 50, 40);
    const int s = 16;
    const auto ip = encode_ip(h, o, s, true);
    int r0 = s, r1 = -1, c0 = s, c1 = -1;
    for (int c = 0; c < 2; ++c) {
      int n = 0, cr0 = s, cr1 = -1, cc0 = s, cc1 = -1;
      for (int r = 0; r < s; ++r) {
        for (int x = 0; x < s; ++x) {
          if (!ip.at(c, r, x)) continue;
          ++n;
          cr0 = std::min(cr0, r), cr1 = std::max(cr1, r), cc0 = std::min(cc0, x), cc1 = std::max(cc1, x);
        }
      }
      if (n == 0) continue;
      CHECK(n == (cr1 - cr0 + 1) * (cc1 - cc0 + 1));
      r0 = std::min(r0, cr0), r1 = std::max(r1, cr1), c0 = std::min(c0, cc0), c1 = std::max(c1, cc1);
    }
    const auto w = ip.window;
    const double longer = std::max(w.width(), w.height());
    // A box thinner than two cells may miss the window edge it touches.
    const double cell = longer / s;
    if (std::min({h.width(), h.height(), o.width(), o.height()}) < 2 * cell) continue;
    const int rows = r1 - r0 + 1, cols = c1 - c0 + 1;
    CHECK(std::max(rows, cols) >= s - 1);
    CHECK(std::abs(cols - s * w.width() / longer) <= 1.0);
    CHECK(std::abs(rows - s * w.height() / longer) <= 1.0);
    // Centered within one cell.
    CHECK(std::abs(r0 - (s - 1 - r1)) <= 1);
    CHECK(std::abs(c0 - (s - 1 - c1)) <= 1);
  }
}

TEST_CASE("preconditions") {
  CHECK_THROWS_AS((void)encode_ip({0, 0, 1, 1}, {0, 0, 1, 1}, 1, false), PreconditionError);
  CHECK_THROWS_AS((void)encode_ip({0, 0, 0, 1}, {0, 0, 1, 1}, 8, false), PreconditionError);
}

TEST_CASE("vector features") {
  const auto v0 = encode_vec({0, 0, 4, 8}, {4, 0, 8, 8}, false);
  CHECK(v0[0] == 0.5);
  CHECK(v0[1] == 0.0);
  const auto v1 = encode_vec({0, 0, 2, 2}, {6, 0, 8, 2}, true);
  CHECK(v1[0] == 0.75);
  CHECK(v1[1] == 0.0);
  const auto same = encode_vec({1, 1, 3, 3}, {1, 1, 3, 3}, true);
  CHECK(same[0] == 0.0);
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const auto h = oracle::random_real_box(rng, 0, 50, 40);
    const auto o = oracle::random_real_box(rng, 0, 50, 40);
    for (bool p : {false, true}) {
      const auto v = encode_vec(h, o, p);
      CHECK(std::abs(v[0]) <= 1.0);
      CHECK(std::abs(v[1]) <= 1.0);
    }
  }
}

TEST_CASE("average patterns") {
  const HOIInstance a{"x", 0, {0, 0, 4, 8}, {4, 0, 8, 8}};
  const HOIInstance b{"x", 0, {4, 0, 8, 8}, {0, 0, 4, 8}};
  const std::vector<HOIInstance> one{a};
  const auto single = average_ip(one, 0, 8, false);
  const auto ip = encode_ip(a.human_box, a.object_box, 8, false);
  for (int i = 0; i < 64; ++i) CHECK(single.human[i] == ip.channel(0)[i]);
  const std::vector<HOIInstance> two{a, b};
  const auto avg = average_ip(two, 0, 8, false);
  for (double v : avg.human) CHECK(v == 0.5);
  CHECK_THROWS_AS((void)average_ip(two, 1, 8, false), EmptyClassError);
}

TEST_CASE("average pattern PNG") {
  testutil::TempDir dir;
  const std::vector<double> grid{0.0, 0.5, 1.0, 0.25};
  write_average_png(grid, 2, 3, dir / "g.png");
  CHECK(std::filesystem::file_size(dir / "g.png") > 0);
}

}  // TEST_SUITE
