#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dsvr/tensor.hpp"

namespace testutil {

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dsvr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline dsvr::Frame random_frame(int c, int h, int w, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  dsvr::Frame f(c, h, w);
  for (auto& v : f.data) v = u(gen);
  return f;
}

inline double max_abs_diff(const dsvr::Frame& a, const dsvr::Frame& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.data[i]) - b.data[i]));
  return m;
}

}  // namespace testutil

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace testutil {

using Spectrum = std::vector<std::complex<double>>;

// Direct separable 2-D DFT (sign -1 forward, +1 inverse, inverse scaled by
// 1/(H*W)). Independent of the library's FFT backend.
inline Spectrum naive_dft2(const Spectrum& in, int h, int w, int sign) {
  auto twiddles = [&](int n) {
    std::vector<std::complex<double>> t(n);
    for (int k = 0; k < n; ++k) t[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / n);
    return t;
  };
  const auto tw = twiddles(w), th = twiddles(h);
  Spectrum rows(in.size()), out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int k = 0; k < w; ++k) {
      std::complex<double> acc = 0;
      for (int x = 0; x < w; ++x) acc += in[y * w + x] * tw[(static_cast<long>(k) * x) % w];
      rows[y * w + k] = acc;
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int k = 0; k < h; ++k) {
      std::complex<double> acc = 0;
      for (int y = 0; y < h; ++y) acc += rows[y * w + x] * th[(static_cast<long>(k) * y) % h];
      out[k * w + x] = acc;
    }
  }
  if (sign > 0) {
    for (auto& v : out) v /= static_cast<double>(h) * w;
  }
  return out;
}

inline Spectrum plane_spectrum(const dsvr::Frame& f, int c) {
  Spectrum s(f.plane_size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = f.data[c * f.plane_size() + i];
  return naive_dft2(s, f.h, f.w, -1);
}

}  // namespace testutil
