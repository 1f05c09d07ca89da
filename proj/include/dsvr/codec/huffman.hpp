#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dsvr::codec {

// Canonical code: only the per-symbol lengths are stored (0 = unused).
struct HuffmanTable {
  int alphabet_bits = 8;
  std::vector<std::uint8_t> lengths;  // 2^alphabet_bits entries

  int max_length() const;
  // Throws ContainerError unless sum 2^-len <= 1 and at least one symbol is used.
  void check_kraft() const;
  // Kraft sum in units of 2^-32.
  std::uint64_t kraft_sum() const;
};

struct HuffmanCode {
  HuffmanTable table;
  std::vector<std::uint8_t> payload;
  std::uint64_t payload_bits = 0;
};

// Optimal lengths for the given counts. A single used symbol gets length 1.
// Lengths are capped at max_length via package-merge when the plain Huffman
// tree is deeper.
std::vector<std::uint8_t> huffman_lengths(std::span<const std::uint64_t> counts, int max_length);

// Codes assigned by (length, symbol) rank.
std::vector<std::uint32_t> canonical_codes(std::span<const std::uint8_t> lengths);

// Symbols must lie in [0, 2^alphabet_bits). Lengths are capped at 2 * alphabet_bits.
HuffmanCode huffman_encode(std::span<const std::uint32_t> symbols, int alphabet_bits);

std::vector<std::uint32_t> huffman_decode(const HuffmanTable& table, std::span<const std::uint8_t> payload,
                                          std::uint64_t payload_bits, std::size_t count);

}  // namespace dsvr::codec
