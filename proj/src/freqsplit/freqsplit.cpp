#include "dsvr/freqsplit/freqsplit.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace dsvr::freq {

namespace {

// Nearest odd integer to v, ties resolved toward the smaller value.
int nearest_odd(double v) {
  const int lower = 2 * static_cast<int>(std::floor((v - 1.0) / 2.0)) + 1;
  // Slack so products like 0.8 * 10 count as exact ties.
  return (v - lower <= lower + 2 - v + 1e-9) ? lower : lower + 2;
}

int low_extent(int n, double fraction) {
  const int largest_symmetric = (n % 2 == 0) ? n - 1 : n;
  return std::clamp(nearest_odd(fraction * n), 1, largest_symmetric);
}

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// Planning is not thread-safe in FFTW; execution with the new-array API is.
Plans plans_for(int h, int w) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({h, w});
  if (it != cache.end()) return it->second;
  auto* a = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
  auto* b = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
  Plans p;
  p.forward = fftw_plan_dft_2d(h, w, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_2d(h, w, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_free(a);
  fftw_free(b);
  cache.emplace(std::make_pair(h, w), p);
  return p;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

}  // namespace

bool SpectralMask::low_bin(int ky, int kx) const {
  const int y = (ky + h_ / 2) % h_;
  const int x = (kx + w_ / 2) % w_;
  return low_centered(y, x);
}

std::size_t SpectralMask::low_count() const {
  return static_cast<std::size_t>(std::count(low_.begin(), low_.end(), std::uint8_t{1}));
}

SpectralMask build_mask(int height, int width, double keep_ratio, MaskShape shape) {
  if (!(keep_ratio > 0.0 && keep_ratio < 1.0)) throw ConfigError("keep_ratio must lie in (0, 1)");
  if (height < 4 || width < 4) throw ShapeError("spectral mask needs H, W >= 4");
  SpectralMask m;
  m.h_ = height;
  m.w_ = width;
  m.keep_ratio_ = keep_ratio;
  m.shape_ = shape;
  m.low_h_ = low_extent(height, 1.0 - keep_ratio);
  m.low_w_ = low_extent(width, 1.0 - keep_ratio);
  m.low_.assign(static_cast<std::size_t>(height) * width, 0);
  const int half_h = (m.low_h_ - 1) / 2;
  const int half_w = (m.low_w_ - 1) / 2;
  for (int y = 0; y < height; ++y) {
    const int ky = y - height / 2;
    for (int x = 0; x < width; ++x) {
      const int kx = x - width / 2;
      bool low;
      if (shape == MaskShape::Rectangular) {
        low = std::abs(ky) <= half_h && std::abs(kx) <= half_w;
      } else {
        const double ry = static_cast<double>(ky) / (height / 2.0);
        const double rx = static_cast<double>(kx) / (width / 2.0);
        const double r = 1.0 - keep_ratio;
        // The Nyquist row/column (|k| = N/2 for even N) has no conjugate
        // partner inside the grid, so it is always assigned to the high band.
        const bool nyquist = (height % 2 == 0 && ky == -height / 2) ||
                             (width % 2 == 0 && kx == -width / 2);
        low = !nyquist && ry * ry + rx * rx <= r * r;
      }
      m.low_[static_cast<std::size_t>(y) * width + x] = low ? 1 : 0;
    }
  }
  return m;
}

FrequencySplit split(const Frame& frame, const SpectralMask& mask) {
  if (frame.h != mask.height() || frame.w != mask.width()) {
    throw ShapeError("frame " + frame.shape_string() + " does not match mask " +
                     std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
  }
  const int h = frame.h;
  const int w = frame.w;
  const std::size_t n = frame.plane_size();
  const Plans plans = plans_for(h, w);
  FftwBuffer in(n), spectrum(n), masked(n), out(n);

  std::vector<std::uint8_t> low(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) low[static_cast<std::size_t>(y) * w + x] = mask.low_bin(y, x);
  }

  FrequencySplit result{Frame(frame.c, h, w), Frame(frame.c, h, w), 0.0};
  const double norm = 1.0 / static_cast<double>(n);
  for (int c = 0; c < frame.c; ++c) {
    auto plane = frame.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      in.ptr[i][0] = plane[i];
      in.ptr[i][1] = 0.0;
    }
    fftw_execute_dft(plans.forward, in.ptr, spectrum.ptr);

    for (int pass = 0; pass < 2; ++pass) {
      const bool want_low = pass == 1;
      for (std::size_t i = 0; i < n; ++i) {
        const bool keep = (low[i] != 0) == want_low;
        masked.ptr[i][0] = keep ? spectrum.ptr[i][0] : 0.0;
        masked.ptr[i][1] = keep ? spectrum.ptr[i][1] : 0.0;
      }
      fftw_execute_dft(plans.inverse, masked.ptr, out.ptr);
      auto dst = (want_low ? result.low : result.high).plane(c);
      for (std::size_t i = 0; i < n; ++i) {
        dst[i] = static_cast<float>(out.ptr[i][0] * norm);
        result.max_imag_residue = std::max(result.max_imag_residue, std::abs(out.ptr[i][1] * norm));
      }
    }
  }
  return result;
}

Frame high_pass(const Frame& frame, const SpectralMask& mask) { return split(frame, mask).high; }

Frame low_pass(const Frame& frame, const SpectralMask& mask) { return split(frame, mask).low; }

double energy(const Frame& frame) {
  double e = 0.0;
  for (float v : frame.data) e += static_cast<double>(v) * v;
  return e;
}

}  // namespace dsvr::freq
