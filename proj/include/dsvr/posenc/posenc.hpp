#pragma once

#include <utility>
#include <vector>

#include "dsvr/core/video.hpp"

namespace dsvr::posenc {

// Frequencies b^x * pi for x = 0..n; the split at m feeds the two
// low-frequency decoders.
struct PosEncConfig {
  double base = 1.25;
  int n = 30;
  int m = 10;

  void validate() const;
  int encoded_length() const { return 2 * (n + 1); }
  int low_length() const { return 2 * (m + 1); }
  int high_length() const { return 2 * (n - m); }
};

// (sin(b^0 pi t), cos(b^0 pi t), ..., sin(b^n pi t), cos(b^n pi t)),
// evaluated in double precision.
struct GammaVector {
  std::vector<double> values;
};

core::FrameIndexNorm normalize_index(int i, int frames);

GammaVector encode(core::FrameIndexNorm t, const PosEncConfig& cfg);

// Exponents 0..m and m+1..n.
std::pair<std::vector<double>, std::vector<double>> split(const GammaVector& v,
                                                          const PosEncConfig& cfg);

// Input-layer weight count of an MLP whose first hidden layer has `hidden`
// units, excluding biases.
inline long long input_weight_count(int input_dim, int hidden) {
  return static_cast<long long>(input_dim) * hidden;
}

}  // namespace dsvr::posenc
