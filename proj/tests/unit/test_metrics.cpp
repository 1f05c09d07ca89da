#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "dsvr/metrics/metrics.hpp"
#include "dsvr/metrics/rd.hpp"
#include "helpers.hpp"

using namespace dsvr;
using namespace dsvr::metrics;

namespace {

// Brute-force single-scale SSIM terms: explicit Gaussian window at every
// valid position.
SsimTerms reference_ssim(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
  const int win = std::min({11, h, w});
  std::vector<double> g(win);
  double gs = 0;
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    g[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
    gs += g[i];
  }
  for (auto& v : g) v /= gs;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double ssim = 0, cs = 0;
  int n = 0;
  for (int y = 0; y + win <= h; ++y) {
    for (int x = 0; x + win <= w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double wt = g[i] * g[j];
          const double va = a[(y + i) * w + x + j], vb = b[(y + i) * w + x + j];
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      const double c = (2 * cov + c2) / (va + vb + c2);
      cs += c;
      ssim += c * (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      ++n;
    }
  }
  return {ssim / n, cs / n};
}

}  // namespace

TEST_CASE("psnr examples") {
  const auto a = testutil::random_frame(3, 8, 8, 1, 0.2f, 0.8f);
  CHECK(psnr(a, a) == 100.0);
  Frame b = a;
  for (auto& v : b.data) v += 1.0f / 255.0f;
  CHECK(psnr(a, b) == doctest::Approx(20 * std::log10(255.0)).epsilon(1e-5));
  Frame c = a;
  for (auto& v : c.data) v -= 0.1f;
  CHECK(psnr(a, c) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(a, c) == psnr(c, a));
  CHECK_THROWS_AS(psnr(a, Frame(3, 8, 9)), ShapeError);
}

TEST_CASE("psnr strictly decreases with noise amplitude") {
  const auto a = testutil::random_frame(3, 16, 16, 2, 0.3f, 0.7f);
  const auto noise = testutil::random_frame(3, 16, 16, 3, -1.0f, 1.0f);
  double prev = 1e9;
  for (double amp : {0.001, 0.01, 0.05, 0.1, 0.2}) {
    Frame b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b.data[i] += static_cast<float>(amp * noise.data[i]);
    const double p = psnr(a, b);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("scale count rule") {
  CHECK(ms_ssim_scales(160, 160) == 5);
  CHECK(ms_ssim_scales(159, 400) == 4);
  CHECK(ms_ssim_scales(64, 128) == 3);
  CHECK(ms_ssim_scales(10, 10) == 1);
  CHECK(ms_ssim_scales(9, 100) == 0);
  CHECK(ms_ssim_scales(640, 1280) == 5);
  CHECK_THROWS(ms_ssim(Frame(3, 8, 8), Frame(3, 8, 8)));
}

TEST_CASE("single-scale terms agree with a brute-force window sum") {
  for (auto [h, w] : {std::pair{24, 30}, {16, 16}, {10, 12}}) {
    const auto fa = testutil::random_frame(1, h, w, 10 + h);
    const auto fb = testutil::random_frame(1, h, w, 20 + h);
    std::vector<double> a(fa.data.begin(), fa.data.end()), b(fb.data.begin(), fb.data.end());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = 0.6 * a[i] + 0.4 * b[i];
    const auto got = ssim_terms(a, b, h, w);
    const auto ref = reference_ssim(a, b, h, w);
    CHECK(got.ssim == doctest::Approx(ref.ssim).epsilon(1e-9));
    CHECK(got.cs == doctest::Approx(ref.cs).epsilon(1e-9));
  }
}

TEST_CASE("ms-ssim identity, symmetry, range and inversion") {
  const auto a = testutil::random_frame(3, 64, 128, 5);
  CHECK(ms_ssim(a, a) == 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto b = testutil::random_frame(3, 64, 128, 50 + k);
    Frame c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] = 0.7f * a.data[i] + 0.3f * b.data[i];
    const double ab = ms_ssim(a, c), ba = ms_ssim(c, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= -1.0);
    CHECK(ab < 1.0);
  }
  Frame inv = a;
  for (auto& v : inv.data) v = 1.0f - v;
  CHECK(ms_ssim(a, inv) < 0.5);
}

TEST_CASE("ms-ssim weights the scales like a direct product") {
  // 40x40 uses three scales: terms at 40, 20 and 10 pixels.
  const auto a = testutil::random_frame(1, 40, 40, 61);
  auto b = testutil::random_frame(1, 40, 40, 62);
  for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = 0.5f * a.data[i] + 0.5f * b.data[i];
  Frame a3(3, 40, 40), b3(3, 40, 40);
  for (int c = 0; c < 3; ++c) {
    std::copy(a.data.begin(), a.data.end(), a3.data.begin() + c * 1600);
    std::copy(b.data.begin(), b.data.end(), b3.data.begin() + c * 1600);
  }
  std::vector<double> pa(a.data.begin(), a.data.end()), pb(b.data.begin(), b.data.end());
  int h = 40, w = 40;
  const double wts[3] = {0.0448, 0.2856, 0.3001};
  const double wsum = wts[0] + wts[1] + wts[2];
  double expect = 1.0;
  for (int s = 0; s < 3; ++s) {
    const auto t = reference_ssim(pa, pb, h, w);
    const double term = s == 2 ? t.ssim : t.cs;
    expect *= std::pow(std::max(term, 0.0), wts[s] / wsum);
    if (s == 2) break;
    std::vector<double> da((h / 2) * (w / 2)), db(da.size());
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        auto avg = [&](const std::vector<double>& p) {
          return (p[2 * y * w + 2 * x] + p[2 * y * w + 2 * x + 1] + p[(2 * y + 1) * w + 2 * x] +
                  p[(2 * y + 1) * w + 2 * x + 1]) / 4.0;
        };
        da[y * (w / 2) + x] = avg(pa);
        db[y * (w / 2) + x] = avg(pb);
      }
    }
    pa = da;
    pb = db;
    h /= 2;
    w /= 2;
  }
  CHECK(ms_ssim(a3, b3) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("perceptual metric slot") {
  CHECK_FALSE(find_perceptual_metric("lpips").has_value());
  register_perceptual_metric("l1", [](const Frame& a, const Frame& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / a.size();
  });
  auto m = find_perceptual_metric("l1");
  REQUIRE(m.has_value());
  CHECK((*m)(Frame(3, 2, 2, 0.0f), Frame(3, 2, 2, 0.5f)) == 0.5);
}

TEST_CASE("aggregate_rd sorts, flags inversions and collapses duplicates") {
  CHECK_THROWS_AS(aggregate_rd({}), DataError);
  CHECK_THROWS_AS(aggregate_rd({{1, 0.1, 30, 0.9}}), DataError);
  const auto two = aggregate_rd({{2, 0.2, 32, 0.95}, {1, 0.1, 30, 0.9}});
  REQUIRE(two.points.size() == 2);
  CHECK(two.points[0].bpp == 0.1);
  CHECK(two.inversions.empty());

  const auto inv = aggregate_rd({{1, 0.1, 30, 0.9}, {2, 0.2, 29, 0.9}, {3, 0.3, 33, 0.9}});
  CHECK(inv.inversions == std::vector<std::size_t>{1});
  CHECK(inv.summary().find("inversion") != std::string::npos);

  const auto dup = aggregate_rd({{1, 0.1, 30, 0.9}, {2, 0.1, 31, 0.9}, {3, 0.3, 33, 0.9}});
  CHECK(dup.points.size() == 2);
  CHECK(dup.points[0].psnr == 31);
  CHECK(dup.warnings.size() == 1);

  CHECK_THROWS_AS(aggregate_rd({{1, 0.1, NAN, 0.9}, {2, 0.2, 30, 0.9}}), DataError);
}

TEST_CASE("rd csv round trip and svg output") {
  const auto dir = testutil::scratch("rd");
  const auto curve = aggregate_rd({{300000, 0.1, 30, 0.9}, {500000, 0.2, 32, 0.95}});
  curve.write_csv(dir / "rd.csv");
  const auto back = read_rd_csv(dir / "rd.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].model_size == 500000);
  CHECK(back[1].psnr == 32);
  write_rd_svg(back, dir / "rd.svg", "t");
  write_rd_svg({back[0]}, dir / "one.svg", "single");
  std::ifstream is(dir / "one.svg");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("<circle") != std::string::npos);
}
