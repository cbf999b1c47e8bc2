#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace oegd {

// Records live in {0,1}^d, packed LSB-first into 64-bit words: bit i of the
// record is word i/64, bit i%64.

inline constexpr uint32_t words_for(uint32_t dim) { return (dim + 63) / 64; }

struct BitRow {
  std::vector<uint64_t> w;
  uint32_t dim = 0;

  BitRow() = default;
  explicit BitRow(uint32_t d) : w(words_for(d), 0), dim(d) {}

  bool get(uint32_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void set(uint32_t i) { w[i >> 6] |= uint64_t(1) << (i & 63); }
  void reset(uint32_t i) { w[i >> 6] &= ~(uint64_t(1) << (i & 63)); }

  uint32_t popcount() const {
    uint32_t c = 0;
    for (uint64_t x : w) c += static_cast<uint32_t>(std::popcount(x));
    return c;
  }

  bool operator==(const BitRow& o) const { return dim == o.dim && w == o.w; }
};

// Lexicographic order on the bit string b_0 b_1 ... b_{d-1} ('0' < '1').
// The first differing position is the lowest set bit of the first differing word.
inline bool lex_less(std::span<const uint64_t> a, std::span<const uint64_t> b) {
  size_t n = a.size() < b.size() ? a.size() : b.size();
  for (size_t k = 0; k < n; ++k) {
    uint64_t x = a[k] ^ b[k];
    if (x) {
      int i = std::countr_zero(x);
      return ((a[k] >> i) & 1) == 0;
    }
  }
  return a.size() < b.size();
}

inline bool lex_less(const BitRow& a, const BitRow& b) {
  return lex_less(std::span<const uint64_t>(a.w), std::span<const uint64_t>(b.w));
}

// popcount(row & mask) for equally sized word spans.
inline uint32_t and_popcount(const uint64_t* row, const uint64_t* mask, uint32_t words) {
  uint32_t c = 0;
  for (uint32_t k = 0; k < words; ++k) c += static_cast<uint32_t>(std::popcount(row[k] & mask[k]));
  return c;
}

// <x, v> for a record x given as packed words, iterating set bits in ascending
// order.  Every objective evaluation in the repo uses this helper so that
// floating-point accumulation order is identical everywhere.
inline double one_hot_dot(const uint64_t* row, uint32_t words, std::span<const double> v) {
  double acc = 0.0;
  for (uint32_t k = 0; k < words; ++k) {
    uint64_t x = row[k];
    while (x) {
      int i = std::countr_zero(x);
      acc += v[k * 64 + static_cast<uint32_t>(i)];
      x &= x - 1;
    }
  }
  return acc;
}

// Dense row-major collection of packed records with a shared dimension.
struct BitMatrix {
  uint32_t dim = 0;
  uint32_t words = 0;
  size_t n = 0;
  std::vector<uint64_t> data;

  BitMatrix() = default;
  explicit BitMatrix(uint32_t d) : dim(d), words(words_for(d)) {}

  const uint64_t* row(size_t i) const { return data.data() + i * words; }

  void append(const BitRow& r) {
    data.insert(data.end(), r.w.begin(), r.w.end());
    ++n;
  }

  BitRow row_bits(size_t i) const {
    BitRow r(dim);
    std::memcpy(r.w.data(), row(i), words * sizeof(uint64_t));
    return r;
  }

  void reserve_rows(size_t rows) { data.reserve(rows * words); }
};

}  // namespace oegd
