#include "dsvr/codec/quant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsvr/error.hpp"

namespace dsvr::codec {

QuantTensor quantize(std::span<const float> values, std::vector<int> shape, int bits) {
  if (bits < 1 || bits > 16) throw ConfigError("quantisation bits must be in [1, 16], got " + std::to_string(bits));
  const long long n = std::accumulate(shape.begin(), shape.end(), 1LL, std::multiplies<>());
  if (n != static_cast<long long>(values.size())) throw ShapeError("quantize: shape does not match value count");
  QuantTensor q;
  q.shape = std::move(shape);
  q.bits = bits;
  q.codes.assign(values.size(), 0);
  if (values.empty()) return q;
  float lo = values[0], hi = values[0];
  for (float v : values) {
    if (!std::isfinite(v)) throw DataError("quantize: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  q.min_val = lo;
  if (hi == lo) return q;
  const double levels = static_cast<double>(q.max_code());
  q.scale = static_cast<float>((static_cast<double>(hi) - lo) / levels);
  if (q.scale == 0.0f) return q;  // range below float resolution
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double c = std::nearbyint((static_cast<double>(values[i]) - q.min_val) / q.scale);
    q.codes[i] = static_cast<std::uint32_t>(std::clamp(c, 0.0, levels));
  }
  return q;
}

std::vector<float> dequantize(const QuantTensor& q) {
  std::vector<float> out(q.codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(q.min_val) + static_cast<double>(q.codes[i]) * q.scale);
  }
  return out;
}

void fake_quantize(std::span<float> values, int bits) {
  const auto q = quantize(values, {static_cast<int>(values.size())}, bits);
  const auto d = dequantize(q);
  std::copy(d.begin(), d.end(), values.begin());
}

}  // namespace dsvr::codec
