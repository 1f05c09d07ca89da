#include "dsvr/posenc/posenc.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dsvr::posenc {

void PosEncConfig::validate() const {
  if (!(base > 1.0) || !std::isfinite(base)) throw ConfigError("posenc: b must be > 1");
  if (n < 1) throw ConfigError("posenc: n must be >= 1");
  if (m <= 0 || m >= n) throw ConfigError("posenc: m must satisfy 0 < m < n");
}

core::FrameIndexNorm normalize_index(int i, int frames) {
  if (frames <= 0) throw DataError("frame count must be positive");
  if (i < 0 || i >= frames) {
    throw DataError("frame index " + std::to_string(i) + " outside [0, " + std::to_string(frames) + ")");
  }
  return core::FrameIndexNorm(static_cast<double>(i + 1) / frames);
}

GammaVector encode(core::FrameIndexNorm t, const PosEncConfig& cfg) {
  // The split point only matters to split(); encode accepts any m.
  if (!(cfg.base > 1.0) || !std::isfinite(cfg.base)) throw ConfigError("posenc: b must be > 1");
  if (cfg.n < 1) throw ConfigError("posenc: n must be >= 1");
  GammaVector g;
  g.values.resize(cfg.encoded_length());
  for (int x = 0; x <= cfg.n; ++x) {
    const double phase = std::pow(cfg.base, x) * std::numbers::pi * t.value();
    g.values[2 * x] = std::sin(phase);
    g.values[2 * x + 1] = std::cos(phase);
  }
  return g;
}

std::pair<std::vector<double>, std::vector<double>> split(const GammaVector& v,
                                                          const PosEncConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(v.values.size()) != cfg.encoded_length()) {
    throw ShapeError("gamma vector has length " + std::to_string(v.values.size()) + ", expected " +
                     std::to_string(cfg.encoded_length()));
  }
  const auto cut = v.values.begin() + cfg.low_length();
  return {std::vector<double>(v.values.begin(), cut), std::vector<double>(cut, v.values.end())};
}

}  // namespace dsvr::posenc
