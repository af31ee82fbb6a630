#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palmsim/errors.hpp"
#include "palmsim/vec.hpp"

namespace palmsim {

/// Fraction in [0,1) represented by an explicit bit string (bit j has value
/// 2^-(j+1)). Trailing zeros do not change the value, and comparisons treat
/// the string as zero-padded, so numeric order is plain word order.
class BitFraction {
 public:
  void push_bit(bool b) {
    const size_t word = nbits_ / 64;
    if (word >= words_.size()) words_.push_back(0);
    if (b) words_[word] |= (1ULL << (63 - nbits_ % 64));
    ++nbits_;
  }

  /// Bit j, zero beyond the stored length.
  bool bit(size_t j) const {
    if (j >= nbits_) return false;
    return (words_[j / 64] >> (63 - j % 64)) & 1ULL;
  }

  size_t size() const { return nbits_; }

  double to_double() const {
    double x = 0;
    const size_t n = std::min<size_t>(words_.size(), 2);  // 128 bits is plenty
    for (size_t w = 0; w < n; ++w)
      x += static_cast<double>(words_[w]) * std::pow(0x1.0p-64, static_cast<double>(w + 1));
    return x;
  }

  static BitFraction from_double(double x, int nbits) {
    BitFraction f;
    for (int j = 0; j < nbits; ++j) {
      x *= 2;
      int b = static_cast<int>(x);
      f.push_bit(b != 0);
      x -= b;
    }
    return f;
  }

  bool operator==(const BitFraction& o) const { return compare(o) == 0; }
  bool operator<(const BitFraction& o) const { return compare(o) < 0; }
  bool operator<=(const BitFraction& o) const { return compare(o) <= 0; }

  int compare(const BitFraction& o) const {
    const size_t nw = std::max(words_.size(), o.words_.size());
    for (size_t w = 0; w < nw; ++w) {
      uint64_t a = w < words_.size() ? words_[w] : 0;
      uint64_t b = w < o.words_.size() ? o.words_[w] : 0;
      if (a != b) return a < b ? -1 : 1;
    }
    return 0;
  }

  std::string to_string() const {
    std::string s = "0.";
    for (size_t j = 0; j < nbits_; ++j) s += bit(j) ? '1' : '0';
    return s;
  }

 private:
  std::vector<uint64_t> words_;
  size_t nbits_ = 0;
};

/// Point of [0,n)^d with every coordinate a B-bit fraction of n: coordinate
/// k equals n * frac[k] / 2^B.
struct BitPoint {
  int dim = 0;
  int bits = 0;
  std::array<uint64_t, kMaxDim> frac{};

  /// Truncate a real point to the B-bit grid (the terminating expansion is
  /// the truncation itself for dyadic coordinates).
  static BitPoint quantize(const Vec& s, double n, int B) {
    BitPoint p;
    p.dim = s.dim;
    p.bits = B;
    for (int k = 0; k < s.dim; ++k) {
      double u = s[k] / n;
      // scaling by a power of two is exact; floor truncates to B bits
      double scaled = std::floor(std::ldexp(u, B));
      if (scaled < 0) scaled = 0;
      double cap = std::ldexp(1.0, B) - 1;
      if (scaled > cap) scaled = cap;
      p.frac[k] = static_cast<uint64_t>(scaled);
    }
    return p;
  }

  Vec to_point(double n) const {
    Vec s(dim);
    for (int k = 0; k < dim; ++k)
      s[k] = n * std::ldexp(static_cast<double>(frac[k]), -bits);
    return s;
  }
};

/// The run-interleaving bijection. Each coordinate stream (B bits followed
/// by implicit zeros) splits into blocks "1...10": a maximal run of ones
/// closed by a single zero. Blocks are emitted round-robin across the
/// coordinates until every stream has consumed at least its B stored bits.
/// Dropped later blocks are all-zero, so the emitted prefix carries the
/// exact value of the infinite interleaving.
inline BitFraction phi_encode(const BitPoint& p) {
  BitFraction out;
  const int d = p.dim;
  const int B = p.bits;
  std::array<int, kMaxDim> pos{};  // bits consumed per stream
  auto stream_bit = [&](int k, int j) -> bool {
    if (j >= B) return false;
    return (p.frac[k] >> (B - 1 - j)) & 1ULL;
  };
  bool done = false;
  while (!done) {
    for (int k = 0; k < d; ++k) {
      // one block of stream k: run of ones, then the terminating zero
      while (stream_bit(k, pos[k])) {
        out.push_bit(true);
        ++pos[k];
      }
      out.push_bit(false);
      ++pos[k];
    }
    done = true;
    for (int k = 0; k < d; ++k)
      if (pos[k] < B) done = false;
  }
  return out;
}

inline BitFraction phi_encode(const Vec& s, double n, int B) {
  return phi_encode(BitPoint::quantize(s, n, B));
}

struct PhiDecodeResult {
  BitPoint point;
  bool zero_padded = false;  // a run of ones was cut by the end of the input
};

/// Inverse of phi_encode by block parsing; input bits beyond the stored
/// length read as zero. The result is flagged when the stored string ends
/// inside a run of ones, i.e. the first padded zero acted as a terminator.
inline PhiDecodeResult phi_decode_bits(const BitFraction& x, int dim, int B) {
  PhiDecodeResult res;
  res.point.dim = dim;
  res.point.bits = B;
  std::array<std::vector<bool>, kMaxDim> bits;
  size_t cursor = 0;
  bool done = false;
  while (!done) {
    for (int k = 0; k < dim; ++k) {
      // one block of stream k: run of ones, then the terminating zero
      while (x.bit(cursor)) {
        bits[k].push_back(true);
        ++cursor;
      }
      bits[k].push_back(false);
      ++cursor;
    }
    done = true;
    for (int k = 0; k < dim; ++k)
      if (bits[k].size() < static_cast<size_t>(B)) done = false;
  }
  if (cursor > x.size() && x.size() > 0 && x.bit(x.size() - 1))
    res.zero_padded = true;
  for (int k = 0; k < dim; ++k) {
    uint64_t v = 0;
    for (int j = 0; j < B; ++j) {
      v <<= 1;
      if (j < static_cast<int>(bits[k].size()) && bits[k][j]) v |= 1;
    }
    res.point.frac[k] = v;
  }
  return res;
}

inline Vec phi_decode(const BitFraction& x, int dim, double n, int B) {
  return phi_decode_bits(x, dim, B).point.to_point(n);
}

}  // namespace palmsim
