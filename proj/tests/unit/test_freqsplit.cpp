#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dsvr/freqsplit/freqsplit.hpp"
#include "helpers.hpp"

using namespace dsvr;
using namespace dsvr::freq;

TEST_CASE("10x10 mask at keep 0.2 by direct enumeration") {
  const auto m = build_mask(10, 10, 0.2);
  // Nearest odd extent to 8 (ties to the smaller) is 7: signed bins -3..3.
  CHECK(m.low_height() == 7);
  CHECK(m.low_width() == 7);
  std::size_t low = 0;
  for (int ky = 0; ky < 10; ++ky) {
    for (int kx = 0; kx < 10; ++kx) {
      const bool expect = std::abs(signed_frequency(ky, 10)) <= 3 && std::abs(signed_frequency(kx, 10)) <= 3;
      CHECK(m.low_bin(ky, kx) == expect);
      low += expect;
    }
  }
  CHECK(low == 49);
  CHECK(m.low_count() == 49);
  CHECK(m.high_count() == 51);
}

TEST_CASE("masks are conjugate symmetric and complementary") {
  for (auto shape : {MaskShape::Rectangular, MaskShape::Radial}) {
    for (auto [h, w] : {std::pair{10, 10}, {64, 128}, {9, 15}, {4, 4}, {33, 20}}) {
      for (double keep : {0.05, 0.2, 0.5, 0.9}) {
        const auto m = build_mask(h, w, keep, shape);
        CHECK(m.low_bin(0, 0));
        std::size_t low = 0;
        for (int ky = 0; ky < h; ++ky) {
          for (int kx = 0; kx < w; ++kx) {
            CHECK(m.low_bin(ky, kx) == m.low_bin((h - ky) % h, (w - kx) % w));
            low += m.low_bin(ky, kx);
          }
        }
        CHECK(low == m.low_count());
        CHECK(m.low_count() + m.high_count() == static_cast<std::size_t>(h) * w);
      }
    }
  }
}

TEST_CASE("build_mask preconditions") {
  CHECK_THROWS_AS(build_mask(10, 10, 0.0), ConfigError);
  CHECK_THROWS_AS(build_mask(10, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(build_mask(10, 10, -0.1), ConfigError);
  CHECK_THROWS_AS(build_mask(3, 10, 0.2), ShapeError);
}

TEST_CASE("split agrees with a naive DFT oracle") {
  for (auto [h, w] : {std::pair{10, 10}, {12, 20}, {9, 14}}) {
    const auto f = testutil::random_frame(3, h, w, 11 + h);
    const auto m = build_mask(h, w, 0.2);
    const auto s = split(f, m);
    CHECK(s.max_imag_residue <= 1e-5);
    for (int c = 0; c < 3; ++c) {
      auto spec = testutil::plane_spectrum(f, c);
      for (int ky = 0; ky < h; ++ky) {
        for (int kx = 0; kx < w; ++kx) {
          if (m.low_bin(ky, kx)) spec[ky * w + kx] = 0;
        }
      }
      const auto hp = testutil::naive_dft2(spec, h, w, +1);
      for (int i = 0; i < h * w; ++i) {
        CHECK(std::abs(hp[i].imag()) < 1e-9);
        CHECK(std::abs(s.high.data[c * h * w + i] - hp[i].real()) <= 1e-5);
      }
    }
  }
}

TEST_CASE("constant frame: high-pass is zero, low-pass is the identity") {
  const Frame f(3, 16, 32, 0.37f);
  const auto m = build_mask(16, 32, 0.2);
  const auto hp = high_pass(f, m);
  const auto lp = low_pass(f, m);
  for (float v : hp.data) CHECK(std::abs(v) <= 1e-5);
  CHECK(testutil::max_abs_diff(lp, f) <= 1e-5);
}

TEST_CASE("a tone inside the high band passes unchanged") {
  // Bin (ky, kx) = (13, 27) on 32x64: outside the 25x51 low rectangle.
  const int h = 32, w = 64;
  const auto m = build_mask(h, w, 0.2);
  REQUIRE_FALSE(m.low_bin(13, 27));
  REQUIRE_FALSE(m.low_bin(h - 13, w - 27));
  Frame f(3, h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        f.at(c, y, x) = static_cast<float>(0.3 * std::cos(2 * std::numbers::pi * (13.0 * y / h + 27.0 * x / w) + c));
      }
    }
  }
  CHECK(testutil::max_abs_diff(high_pass(f, m), f) <= 1e-4);
}

TEST_CASE("period-2 checkerboard is removed by the low-pass") {
  Frame f(3, 64, 64);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) f.at(c, y, x) = ((x + y) % 2) ? 0.5f : -0.5f;
    }
  }
  const auto lp = low_pass(f, build_mask(64, 64, 0.2));
  CHECK(energy(lp) <= 0.01 * energy(f));
}

TEST_CASE("complementarity, idempotence, linearity and Parseval") {
  const auto m = build_mask(64, 128, 0.2);
  for (int k = 0; k < 5; ++k) {
    const auto f = testutil::random_frame(3, 64, 128, 500 + k);
    const auto s = split(f, m);
    Frame sum = s.high;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += s.low.data[i];
    CHECK(testutil::max_abs_diff(sum, f) <= 1e-5);
    CHECK(s.max_imag_residue <= 1e-5);
    CHECK(testutil::max_abs_diff(high_pass(s.high, m), s.high) <= 1e-5);
    const double e = energy(f);
    CHECK(std::abs(energy(s.high) + energy(s.low) - e) <= 1e-4 * e);
    Frame scaled = f;
    for (auto& v : scaled.data) v *= 2.5f;
    const auto lps = low_pass(scaled, m);
    Frame expect = s.low;
    for (auto& v : expect.data) v *= 2.5f;
    CHECK(testutil::max_abs_diff(lps, expect) <= 1e-5);
  }
}

TEST_CASE("complementarity at 640x1280") {
  const auto m = build_mask(640, 1280, 0.2);
  const auto f = testutil::random_frame(3, 640, 1280, 77);
  const auto s = split(f, m);
  double worst = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    worst = std::max(worst, std::abs(double(s.high.data[i]) + s.low.data[i] - f.data[i]));
  }
  CHECK(worst <= 1e-5);
  CHECK(s.max_imag_residue <= 1e-5);
}

TEST_CASE("dimension mismatch is rejected") {
  const auto m = build_mask(16, 16, 0.2);
  CHECK_THROWS_AS(high_pass(Frame(3, 16, 32), m), ShapeError);
}
