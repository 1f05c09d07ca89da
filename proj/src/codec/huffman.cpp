#include "dsvr/codec/huffman.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

#include "dsvr/codec/bitio.hpp"
#include "dsvr/error.hpp"

namespace dsvr::codec {

int HuffmanTable::max_length() const {
  int m = 0;
  for (auto l : lengths) m = std::max<int>(m, l);
  return m;
}

std::uint64_t HuffmanTable::kraft_sum() const {
  std::uint64_t sum = 0;
  for (auto l : lengths) {
    if (l > 32) return ~0ull;
    if (l) sum += 1ull << (32 - l);
  }
  return sum;
}

void HuffmanTable::check_kraft() const {
  if (lengths.size() != (1ull << alphabet_bits)) throw ContainerError("Huffman table has the wrong size");
  if (max_length() == 0) throw ContainerError("Huffman table has no symbols");
  if (max_length() > 32) throw ContainerError("Huffman code length above 32");
  if (kraft_sum() > (1ull << 32)) throw ContainerError("Huffman table violates the Kraft inequality");
}

namespace {

// Plain Huffman tree. Ties are broken by node id: leaves use their symbol,
// internal nodes alphabet + creation order.
std::vector<std::uint8_t> tree_lengths(std::span<const std::uint64_t> counts) {
  using Node = std::pair<std::uint64_t, std::size_t>;  // (weight, id)
  std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
  const std::size_t n = counts.size();
  std::vector<std::size_t> parent(2 * n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (counts[s]) heap.emplace(counts[s], s);
  }
  std::size_t next = n;
  while (heap.size() > 1) {
    const auto a = heap.top();
    heap.pop();
    const auto b = heap.top();
    heap.pop();
    parent[a.second] = next;
    parent[b.second] = next;
    heap.emplace(a.first + b.first, next);
    ++next;
  }
  const std::size_t root = next - 1;
  std::vector<int> depth(2 * n, 0);
  for (std::size_t id = root; id-- > n;) depth[id] = depth[parent[id]] + 1;
  std::vector<std::uint8_t> lengths(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (counts[s]) lengths[s] = static_cast<std::uint8_t>(std::min(255, depth[parent[s]] + 1));
  }
  return lengths;
}

// Length-limited optimum via package-merge.
std::vector<std::uint8_t> package_merge(std::span<const std::uint64_t> counts, int max_length) {
  struct Item {
    std::uint64_t weight;
    int leaf;         // symbol, or -1 for a package
    std::size_t child;  // packages: first of two adjacent items one level deeper
  };
  std::vector<std::pair<std::uint64_t, int>> leaves;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (counts[s]) leaves.emplace_back(counts[s], static_cast<int>(s));
  }
  std::sort(leaves.begin(), leaves.end());
  const std::size_t n = leaves.size();
  if ((n - 1) >> max_length) throw ConfigError("too many symbols for the Huffman length cap");

  std::vector<std::vector<Item>> levels(max_length);
  for (auto& [w, s] : leaves) levels[max_length - 1].push_back({w, s, 0});
  for (int l = max_length - 2; l >= 0; --l) {
    const auto& deeper = levels[l + 1];
    auto& cur = levels[l];
    std::size_t li = 0, pi = 0;
    const std::size_t packages = deeper.size() / 2;
    while (li < n || pi < packages) {
      const bool take_leaf =
          pi >= packages || (li < n && leaves[li].first <= deeper[2 * pi].weight + deeper[2 * pi + 1].weight);
      if (take_leaf) {
        cur.push_back({leaves[li].first, leaves[li].second, 0});
        ++li;
      } else {
        cur.push_back({deeper[2 * pi].weight + deeper[2 * pi + 1].weight, -1, 2 * pi});
        ++pi;
      }
    }
  }
  std::vector<std::uint8_t> lengths(counts.size(), 0);
  std::vector<std::pair<int, std::size_t>> stack;
  for (std::size_t i = 0; i < 2 * n - 2; ++i) stack.emplace_back(0, i);
  while (!stack.empty()) {
    auto [l, i] = stack.back();
    stack.pop_back();
    const Item& it = levels[l][i];
    if (it.leaf >= 0) {
      ++lengths[it.leaf];
    } else {
      stack.emplace_back(l + 1, it.child);
      stack.emplace_back(l + 1, it.child + 1);
    }
  }
  return lengths;
}

}  // namespace

std::vector<std::uint8_t> huffman_lengths(std::span<const std::uint64_t> counts, int max_length) {
  const auto used = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  if (used == 0) throw DataError("Huffman coding of an empty input");
  if (max_length < 1 || max_length > 32) throw ConfigError("Huffman length cap must be in [1, 32]");
  if (used == 1) {
    std::vector<std::uint8_t> lengths(counts.size(), 0);
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s]) lengths[s] = 1;
    }
    return lengths;
  }
  auto lengths = tree_lengths(counts);
  if (*std::max_element(lengths.begin(), lengths.end()) > max_length) lengths = package_merge(counts, max_length);
  return lengths;
}

std::vector<std::uint32_t> canonical_codes(std::span<const std::uint8_t> lengths) {
  std::vector<std::uint32_t> order;
  for (std::uint32_t s = 0; s < lengths.size(); ++s) {
    if (lengths[s]) order.push_back(s);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lengths[a] < lengths[b]; });
  std::vector<std::uint32_t> codes(lengths.size(), 0);
  std::uint64_t code = 0;
  int prev = 0;
  for (auto s : order) {
    code <<= (lengths[s] - prev);
    prev = lengths[s];
    codes[s] = static_cast<std::uint32_t>(code);
    ++code;
  }
  return codes;
}

HuffmanCode huffman_encode(std::span<const std::uint32_t> symbols, int alphabet_bits) {
  if (alphabet_bits < 1 || alphabet_bits > 16) throw ConfigError("Huffman alphabet bits must be in [1, 16]");
  if (symbols.empty()) throw DataError("Huffman coding of an empty input");
  const std::size_t alphabet = std::size_t{1} << alphabet_bits;
  std::vector<std::uint64_t> counts(alphabet, 0);
  for (auto s : symbols) {
    if (s >= alphabet) throw DataError("symbol " + std::to_string(s) + " outside the alphabet");
    ++counts[s];
  }
  HuffmanCode out;
  out.table.alphabet_bits = alphabet_bits;
  out.table.lengths = huffman_lengths(counts, 2 * alphabet_bits);
  const auto codes = canonical_codes(out.table.lengths);
  BitWriter w;
  for (auto s : symbols) w.put(codes[s], out.table.lengths[s]);
  out.payload = w.bytes();
  out.payload_bits = w.bit_count();
  return out;
}

std::vector<std::uint32_t> huffman_decode(const HuffmanTable& table, std::span<const std::uint8_t> payload,
                                          std::uint64_t payload_bits, std::size_t count) {
  table.check_kraft();
  const int max_len = table.max_length();
  // Canonical decoding tables: first code and symbol offset per length.
  std::vector<std::uint32_t> sorted;
  std::vector<std::uint64_t> per_len(max_len + 1, 0);
  for (std::uint32_t s = 0; s < table.lengths.size(); ++s) {
    if (table.lengths[s]) ++per_len[table.lengths[s]];
  }
  for (int l = 1; l <= max_len; ++l) {
    for (std::uint32_t s = 0; s < table.lengths.size(); ++s) {
      if (table.lengths[s] == l) sorted.push_back(s);
    }
  }
  std::vector<std::uint64_t> first(max_len + 1, 0), offset(max_len + 1, 0);
  std::uint64_t code = 0, index = 0;
  for (int l = 1; l <= max_len; ++l) {
    code <<= 1;
    first[l] = code;
    offset[l] = index;
    code += per_len[l];
    index += per_len[l];
  }

  BitReader r(payload, payload_bits);
  std::vector<std::uint32_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t c = 0;
    int l = 0;
    for (;;) {
      c = (c << 1) | r.bit();
      ++l;
      if (l > max_len) throw ContainerError("invalid Huffman codeword");
      if (c - first[l] < per_len[l] && c >= first[l]) {
        out.push_back(sorted[offset[l] + (c - first[l])]);
        break;
      }
    }
  }
  return out;
}

}  // namespace dsvr::codec
