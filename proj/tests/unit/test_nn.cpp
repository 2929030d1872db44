#include <doctest.h>

#include <cmath>

#include "hoidet/errors.hpp"
#include "hoidet/nn/loss.hpp"
#include "hoidet/nn/network.hpp"
#include "oracles.hpp"

using namespace hoidet;
using nn::LayerSpec;
using nn::Network;
using nn::Shape;

namespace {

constexpr double kTol = 1e-4;

void expect_gradients(Shape in, std::vector<LayerSpec> layers, std::uint64_t seed) {
  Network<double> net(in, std::move(layers));
  net.init(seed);
  // Nonzero biases so ReLU and pooling see varied inputs.
  Rng rng(seed ^ 0xB1A5);
  for (auto& p : net.params()) p += rng.uniform(-0.05, 0.05);
  const auto r = oracle::check_network(net, seed + 1);
  CHECK(r.param_error < kTol);
  CHECK(r.input_error < kTol);
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("shapes and parameter counts") {
  const std::vector<LayerSpec> layers{LayerSpec::conv(5, 16), LayerSpec::relu(), LayerSpec::maxpool(),
                                      LayerSpec::flatten(), LayerSpec::fc(10)};
  Network<float> net({2, 8, 8}, layers);
  CHECK(net.shape_after(0) == Shape{16, 8, 8});
  CHECK(net.shape_after(2) == Shape{16, 4, 4});
  CHECK(net.output_shape() == Shape{10, 1, 1});
  CHECK(net.param_count() == (5 * 5 * 2 * 16 + 16) + (16 * 4 * 4 * 10 + 10));
  CHECK(nn::count_params({2, 8, 8}, layers) == net.param_count());
  CHECK_THROWS_AS(Network<float>({1, 5, 5}, {LayerSpec::maxpool()}), PreconditionError);
  CHECK_THROWS_AS(Network<float>({1, 4, 4}, {LayerSpec::conv(4, 2)}), PreconditionError);
}

TEST_CASE("init is seeded") {
  Network<float> a({1, 4, 4}, {LayerSpec::flatten(), LayerSpec::fc(3)});
  Network<float> b({1, 4, 4}, {LayerSpec::flatten(), LayerSpec::fc(3)});
  a.init(9);
  b.init(9);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  b.init(10);
  CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
}

TEST_CASE("gradient check: conv") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const Shape in{rng.uniform_int(1, 3), rng.uniform_int(1, 6), rng.uniform_int(1, 6)};
    const int k = 2 * rng.uniform_int(0, 2) + 1;
    expect_gradients(in, {LayerSpec::conv(k, rng.uniform_int(1, 4))}, 100 + i);
  }
}

TEST_CASE("gradient check: maxpool") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const Shape in{rng.uniform_int(1, 3), 2 * rng.uniform_int(1, 4), 2 * rng.uniform_int(1, 4)};
    expect_gradients(in, {LayerSpec::maxpool()}, 200 + i);
  }
}

TEST_CASE("gradient check: fully connected") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const Shape in{rng.uniform_int(1, 12), 1, 1};
    expect_gradients(in, {LayerSpec::fc(rng.uniform_int(1, 8))}, 300 + i);
  }
}

TEST_CASE("gradient check: relu") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const Shape in{rng.uniform_int(1, 12), 1, 1};
    expect_gradients(in, {LayerSpec::fc(rng.uniform_int(2, 8)), LayerSpec::relu()}, 400 + i);
  }
}

TEST_CASE("gradient check: flatten") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(i);
    const Shape in{rng.uniform_int(1, 3), rng.uniform_int(1, 4), rng.uniform_int(1, 4)};
    expect_gradients(in, {LayerSpec::flatten(), LayerSpec::fc(rng.uniform_int(1, 4))}, 500 + i);
  }
}

TEST_CASE("gradient check: full pairwise-like stack") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    expect_gradients({2, 8, 8},
                     {LayerSpec::conv(5, 3), LayerSpec::relu(), LayerSpec::maxpool(), LayerSpec::conv(3, 4),
                      LayerSpec::relu(), LayerSpec::maxpool(), LayerSpec::flatten(), LayerSpec::fc(6),
                      LayerSpec::relu(), LayerSpec::fc(3)},
                     600 + i);
  }
}

TEST_CASE("multilabel loss values") {
  const std::vector<double> s(4, 0.0), y(4, 0.0);
  std::vector<double> g(4);
  CHECK(nn::multilabel_loss<double>(s, y, g) == doctest::Approx(4.0 * std::log(2.0)));
  for (double v : g) CHECK(v == 0.5);
  const std::vector<double> big{50.0, -50.0};
  const std::vector<double> yb{1.0, 0.0};
  std::vector<double> gb(2);
  const double l = nn::multilabel_loss<double>(big, yb, gb);
  CHECK(std::isfinite(l));
  CHECK(l < 1e-20);
  const std::vector<double> wrong{1.0, 0.0};
  CHECK(nn::multilabel_loss<double>(big, std::vector<double>{0.0, 1.0}, {}) == doctest::Approx(100.0));
  (void)wrong;
  CHECK(nn::sigmoid(-800.0) == 0.0);
  CHECK(nn::sigmoid(800.0) == 1.0);
}

TEST_CASE("multilabel loss gradient matches finite differences") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(700 + i);
    const int k = rng.uniform_int(1, 10);
    std::vector<double> s(k), y(k), g(k), num(k);
    for (int j = 0; j < k; ++j) {
      s[j] = rng.uniform(-6, 6);
      y[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    (void)nn::multilabel_loss<double>(s, y, g);
    for (int j = 0; j < k; ++j) {
      auto up = s, down = s;
      up[j] += 1e-6;
      down[j] -= 1e-6;
      num[j] = (nn::multilabel_loss<double>(up, y, {}) - nn::multilabel_loss<double>(down, y, {})) / 2e-6;
    }
    CHECK(oracle::relative_error(g, num) < 1e-6);
  }
}

}  // TEST_SUITE
