#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsvr/core/video.hpp"

namespace dsvr::metrics {

inline constexpr double kPsnrCap = 100.0;

double mse(const Frame& a, const Frame& b);
// 10 log10(1 / mse) for signals in [0, 1]; 100 dB when mse < 1e-10.
double psnr_from_mse(double mse);
double psnr(const Frame& a, const Frame& b);
// Over all frames at once.
double psnr(const core::VideoTensor& a, const core::VideoTensor& b);

struct MsSsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  std::array<double, 5> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

// Number of scales used for an H x W input: the largest k <= 5 with
// min(H, W) >= 10 * 2^(k-1). Zero means the input is too small.
int ms_ssim_scales(int height, int width);

// Mean SSIM and mean contrast-structure term of one plane pair at one scale,
// Gaussian window, valid region only.
struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;
};
SsimTerms ssim_terms(std::span<const double> a, std::span<const double> b, int height, int width,
                     const MsSsimOptions& opt = {});

// Multi-scale SSIM with channel-averaged SSIM maps; negative terms are
// clamped to zero before exponentiation, so the result lies in [0, 1].
double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt = {});

// Optional perceptual metric slot (e.g. LPIPS). Nothing is registered by
// default.
using PerceptualMetric = std::function<double(const Frame&, const Frame&)>;
void register_perceptual_metric(const std::string& name, PerceptualMetric fn);
std::optional<PerceptualMetric> find_perceptual_metric(const std::string& name);

}  // namespace dsvr::metrics
