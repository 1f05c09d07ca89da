#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dsvr::codec {

// Per-tensor affine quantisation: value = min_val + code * scale.
struct QuantTensor {
  std::vector<int> shape;
  int bits = 8;
  float min_val = 0.0f;
  float scale = 0.0f;
  std::vector<std::uint32_t> codes;

  std::size_t size() const { return codes.size(); }
  std::uint32_t max_code() const { return (1u << bits) - 1u; }
};

// bits in [1, 16]; throws DataError on non-finite input.
QuantTensor quantize(std::span<const float> values, std::vector<int> shape, int bits);
std::vector<float> dequantize(const QuantTensor& q);

// In-place round trip, i.e. dequantize(quantize(values)).
void fake_quantize(std::span<float> values, int bits);

}  // namespace dsvr::codec
