#pragma once

#include <cstdint>
#include <vector>

#include "dsvr/tensor.hpp"

namespace dsvr::freq {

enum class MaskShape { Rectangular, Radial };

// Binary low/high partition of the centred (fftshifted) 2-D spectrum.
// The low region always contains DC and is closed under k -> -k, so both
// filtered outputs of a real frame are real.
class SpectralMask {
 public:
  int height() const { return h_; }
  int width() const { return w_; }
  double keep_ratio() const { return keep_ratio_; }
  MaskShape shape() const { return shape_; }

  // Extent of the rectangular low region (odd, centred on DC). For radial
  // masks these are the axis-aligned bounding extents.
  int low_height() const { return low_h_; }
  int low_width() const { return low_w_; }

  // Centred grid: index (H/2, W/2) is DC.
  bool low_centered(int y, int x) const { return low_[static_cast<std::size_t>(y) * w_ + x] != 0; }
  bool high_centered(int y, int x) const { return !low_centered(y, x); }
  // Unshifted FFT bin order as produced by a forward DFT.
  bool low_bin(int ky, int kx) const;

  std::size_t low_count() const;
  std::size_t high_count() const { return static_cast<std::size_t>(h_) * w_ - low_count(); }

 private:
  friend SpectralMask build_mask(int, int, double, MaskShape);
  int h_ = 0;
  int w_ = 0;
  double keep_ratio_ = 0.0;
  MaskShape shape_ = MaskShape::Rectangular;
  int low_h_ = 0;
  int low_w_ = 0;
  std::vector<std::uint8_t> low_;
};

// keep_ratio is the fraction of each axis left to the high band; the low
// region spans the nearest odd count to (1 - keep_ratio) * N bins per axis.
SpectralMask build_mask(int height, int width, double keep_ratio,
                        MaskShape shape = MaskShape::Rectangular);

// Signed frequency of unshifted DFT bin `i` for a length-n transform.
inline int signed_frequency(int i, int n) { return i <= (n - 1) / 2 ? i : i - n; }

struct FrequencySplit {
  Frame high;
  Frame low;
  // Largest |imag| seen in either inverse transform before it was dropped.
  double max_imag_residue = 0.0;
};

// Per-channel FFT, mask, inverse FFT, real part. Outputs are not clipped.
FrequencySplit split(const Frame& frame, const SpectralMask& mask);
Frame high_pass(const Frame& frame, const SpectralMask& mask);
Frame low_pass(const Frame& frame, const SpectralMask& mask);

double energy(const Frame& frame);

}  // namespace dsvr::freq
