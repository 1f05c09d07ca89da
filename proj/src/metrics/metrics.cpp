#include "dsvr/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace dsvr::metrics {

double mse(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw ShapeError("mse of empty frames");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
  if (m < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double psnr(const Frame& a, const Frame& b) { return psnr_from_mse(mse(a, b)); }

double psnr(const core::VideoTensor& a, const core::VideoTensor& b) {
  if (a.frames() != b.frames() || a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("psnr: video shapes differ");
  }
  const auto da = a.data();
  const auto db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(da.size()));
}

int ms_ssim_scales(int height, int width) {
  const int m = std::min(height, width);
  int k = 0;
  while (k < 5 && m >= 10 * (1 << k)) ++k;
  return k;
}

namespace {

std::vector<double> gaussian(int size, double sigma) {
  std::vector<double> g(size);
  const double centre = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - centre) * (i - centre) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Valid-mode separable filter: rows with gy, columns with gx.
std::vector<double> filter_valid(std::span<const double> src, int h, int w,
                                 const std::vector<double>& gy, const std::vector<double>& gx) {
  const int ky = static_cast<int>(gy.size());
  const int kx = static_cast<int>(gx.size());
  const int ow = w - kx + 1;
  const int oh = h - ky + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kx; ++i) acc += gx[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int i = 0; i < ky; ++i) {
      const double g = gy[i];
      const double* row = &tmp[static_cast<std::size_t>(y + i) * ow];
      double* dst = &out[static_cast<std::size_t>(y) * ow];
      for (int x = 0; x < ow; ++x) dst[x] += g * row[x];
    }
  }
  return out;
}

std::vector<double> downsample(std::span<const double> src, int h, int w) {
  const int oh = h / 2;
  const int ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const std::size_t i = static_cast<std::size_t>(2 * y) * w + 2 * x;
      out[static_cast<std::size_t>(y) * ow + x] = 0.25 * (src[i] + src[i + 1] + src[i + w] + src[i + w + 1]);
    }
  }
  return out;
}

}  // namespace

SsimTerms ssim_terms(std::span<const double> a, std::span<const double> b, int height, int width,
                     const MsSsimOptions& opt) {
  // Square window, shrunk to the smaller side at coarse scales.
  const auto g = gaussian(std::min({opt.window, height, width}), opt.sigma);
  const auto& gy = g;
  const auto& gx = g;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, height, width, gy, gx);
  const auto mu_b = filter_valid(b, height, width, gy, gx);
  const auto e_aa = filter_valid(aa, height, width, gy, gx);
  const auto e_bb = filter_valid(bb, height, width, gy, gx);
  const auto e_ab = filter_valid(ab, height, width, gy, gx);
  const double c1 = opt.k1 * opt.k1;
  const double c2 = opt.k2 * opt.k2;
  double ssim_sum = 0.0;
  double cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double lum = (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
    cs_sum += cs;
    ssim_sum += lum * cs;
  }
  const double count = static_cast<double>(mu_a.size());
  return {ssim_sum / count, cs_sum / count};
}

double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt) {
  require_same_shape(a, b, "ms_ssim");
  const int scales = ms_ssim_scales(a.h, a.w);
  if (scales == 0) throw ShapeError("ms_ssim: frame " + a.shape_string() + " is too small for one scale");
  double weight_sum = 0.0;
  for (int j = 0; j < scales; ++j) weight_sum += opt.weights[j];

  std::vector<double> cs_mean(scales, 0.0);
  double ssim_last = 0.0;
  for (int c = 0; c < a.c; ++c) {
    std::vector<double> pa(a.plane(c).begin(), a.plane(c).end());
    std::vector<double> pb(b.plane(c).begin(), b.plane(c).end());
    int h = a.h;
    int w = a.w;
    for (int j = 0; j < scales; ++j) {
      const SsimTerms t = ssim_terms(pa, pb, h, w, opt);
      cs_mean[j] += t.cs;
      if (j == scales - 1) {
        ssim_last += t.ssim;
      } else {
        pa = downsample(pa, h, w);
        pb = downsample(pb, h, w);
        h /= 2;
        w /= 2;
      }
    }
  }
  double result = 1.0;
  for (int j = 0; j < scales; ++j) {
    const double term = (j == scales - 1 ? ssim_last : cs_mean[j]) / a.c;
    result *= std::pow(std::max(term, 0.0), opt.weights[j] / weight_sum);
  }
  return result;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, PerceptualMetric>& registry() {
  static std::map<std::string, PerceptualMetric> r;
  return r;
}

}  // namespace

void register_perceptual_metric(const std::string& name, PerceptualMetric fn) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(fn);
}

std::optional<PerceptualMetric> find_perceptual_metric(const std::string& name) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(name);
  if (it == registry().end()) return std::nullopt;
  return it->second;
}

}  // namespace dsvr::metrics
