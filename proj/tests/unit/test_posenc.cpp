#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dsvr/posenc/posenc.hpp"

using namespace dsvr;
using namespace dsvr::posenc;

TEST_CASE("exact multiples of pi") {
  PosEncConfig cfg{2.0, 1, 0};
  const auto v = encode(core::FrameIndexNorm(1.0), cfg);
  REQUIRE(v.values.size() == 4);
  const double expect[] = {0, -1, 0, 1};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(v.values[i] - expect[i]) <= 1e-9);
}

TEST_CASE("default config lengths") {
  PosEncConfig cfg;
  CHECK(cfg.encoded_length() == 62);
  CHECK(cfg.low_length() == 22);
  CHECK(cfg.high_length() == 40);
  const auto v = encode(core::FrameIndexNorm(0.5), cfg);
  CHECK(v.values.size() == 62);
  CHECK(std::abs(v.values[0] - 1.0) < 1e-12);
  CHECK(std::abs(v.values[1]) < 1e-12);
}

TEST_CASE("encode matches direct evaluation and the Pythagorean identity") {
  PosEncConfig cfg;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double t = 1.0 - u(gen);  // (0, 1]
    const auto v = encode(core::FrameIndexNorm(t), cfg);
    for (int x = 0; x <= cfg.n; ++x) {
      const double f = std::pow(cfg.base, x) * std::numbers::pi * t;
      CHECK(std::abs(v.values[2 * x] - std::sin(f)) <= 1e-9);
      CHECK(std::abs(v.values[2 * x + 1] - std::cos(f)) <= 1e-9);
      const double r = v.values[2 * x] * v.values[2 * x] + v.values[2 * x + 1] * v.values[2 * x + 1];
      CHECK(std::abs(r - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("split partitions the vector at m") {
  PosEncConfig cfg;
  const auto v = encode(normalize_index(3, 16), cfg);
  auto [lo, hi] = split(v, cfg);
  CHECK(lo.size() == 22);
  CHECK(hi.size() == 40);
  std::vector<double> cat = lo;
  cat.insert(cat.end(), hi.begin(), hi.end());
  CHECK(cat == v.values);

  PosEncConfig small{1.25, 2, 1};
  const auto w = encode(core::FrameIndexNorm(0.3), small);
  auto [l2, h2] = split(w, small);
  CHECK(l2 == std::vector<double>(w.values.begin(), w.values.begin() + 4));
  CHECK(h2 == std::vector<double>(w.values.begin() + 4, w.values.end()));

  GammaVector bad{{1.0, 2.0}};
  CHECK_THROWS(split(bad, cfg));
}

TEST_CASE("low exponents move less between adjacent frames than high exponents") {
  PosEncConfig cfg;
  for (int i = 0; i + 1 < 100; ++i) {
    const auto a = encode(normalize_index(i, 100), cfg);
    const auto b = encode(normalize_index(i + 1, 100), cfg);
    auto pair_change = [&](int x) {
      return std::hypot(a.values[2 * x] - b.values[2 * x], a.values[2 * x + 1] - b.values[2 * x + 1]);
    };
    CHECK(pair_change(0) < pair_change(30));
  }
}

TEST_CASE("splitting the input halves the first-layer weight count") {
  PosEncConfig cfg{1.25, 30, 15};
  const int h = 64;
  const long long whole = input_weight_count(cfg.encoded_length(), h);
  const long long halves = input_weight_count(cfg.low_length(), h / 2) + input_weight_count(cfg.high_length(), h / 2);
  CHECK(whole == 62 * 64);
  CHECK(halves * 2 == whole);
}

TEST_CASE("invalid configs") {
  CHECK_THROWS(PosEncConfig{1.0, 30, 10}.validate());
  CHECK_THROWS(PosEncConfig{1.25, 0, 0}.validate());
  CHECK_THROWS(PosEncConfig{1.25, 30, 30}.validate());
  CHECK_THROWS(PosEncConfig{1.25, 30, 0}.validate());
}
