#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>

namespace palmsim {

// Everything lives on a d-dimensional torus [0,W)^d with d small.
inline constexpr int kMaxDim = 5;

/// Point / displacement in R^d, d <= kMaxDim.
struct Vec {
  int dim = 0;
  std::array<double, kMaxDim> c{};

  Vec() = default;
  explicit Vec(int d) : dim(d) { c.fill(0.0); }
  Vec(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size())) {
    assert(dim <= kMaxDim);
    int k = 0;
    for (double x : xs) c[k++] = x;
  }

  double& operator[](int k) { return c[k]; }
  double operator[](int k) const { return c[k]; }

  Vec operator+(const Vec& o) const {
    Vec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = c[k] + o.c[k];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = c[k] - o.c[k];
    return r;
  }
  Vec operator-() const {
    Vec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = -c[k];
    return r;
  }
  Vec operator*(double s) const {
    Vec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = c[k] * s;
    return r;
  }

  bool operator==(const Vec& o) const {
    if (dim != o.dim) return false;
    for (int k = 0; k < dim; ++k)
      if (c[k] != o.c[k]) return false;
    return true;
  }

  double norm2() const {
    double s = 0;
    for (int k = 0; k < dim; ++k) s += c[k] * c[k];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  bool finite() const {
    for (int k = 0; k < dim; ++k)
      if (!std::isfinite(c[k])) return false;
    return true;
  }
};

inline double wrap_coord(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  if (r >= period) r = 0.0;  // fmod can return period after the += above
  return r;
}

/// Wrap every coordinate into [0, period).
inline Vec wrap(const Vec& v, double period) {
  Vec r(v.dim);
  for (int k = 0; k < v.dim; ++k) r.c[k] = wrap_coord(v.c[k], period);
  return r;
}

/// Lattice site / integer displacement.
struct IVec {
  int dim = 0;
  std::array<int64_t, kMaxDim> c{};

  IVec() = default;
  explicit IVec(int d) : dim(d) { c.fill(0); }
  IVec(std::initializer_list<int64_t> xs) : dim(static_cast<int>(xs.size())) {
    assert(dim <= kMaxDim);
    int k = 0;
    for (int64_t x : xs) c[k++] = x;
  }

  int64_t& operator[](int k) { return c[k]; }
  int64_t operator[](int k) const { return c[k]; }

  IVec operator+(const IVec& o) const {
    IVec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = c[k] + o.c[k];
    return r;
  }
  IVec operator-(const IVec& o) const {
    IVec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = c[k] - o.c[k];
    return r;
  }
  IVec operator-() const {
    IVec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = -c[k];
    return r;
  }

  bool operator==(const IVec& o) const {
    if (dim != o.dim) return false;
    for (int k = 0; k < dim; ++k)
      if (c[k] != o.c[k]) return false;
    return true;
  }
  bool operator<(const IVec& o) const {  // lexicographic
    for (int k = 0; k < dim; ++k) {
      if (c[k] != o.c[k]) return c[k] < o.c[k];
    }
    return false;
  }

  Vec to_vec() const {
    Vec r(dim);
    for (int k = 0; k < dim; ++k) r.c[k] = static_cast<double>(c[k]);
    return r;
  }
};

inline int64_t mod_floor(int64_t a, int64_t m) {
  int64_t r = a % m;
  return r < 0 ? r + m : r;
}

/// Wrap every coordinate into {0,...,W-1}.
inline IVec wrap(const IVec& v, int64_t W) {
  IVec r(v.dim);
  for (int k = 0; k < v.dim; ++k) r.c[k] = mod_floor(v.c[k], W);
  return r;
}

/// Centered representative: each coordinate in [-W/2, W/2). For even W and an
/// antipodal coordinate the negative representative is chosen, which makes
/// the full vector lexicographically lowest among minimal-norm candidates.
inline IVec wrap_centered(const IVec& v, int64_t W) {
  IVec r(v.dim);
  for (int k = 0; k < v.dim; ++k) {
    int64_t x = mod_floor(v.c[k] + W / 2, W) - W / 2;
    r.c[k] = x;
  }
  return r;
}

/// Squared torus distance between two sites.
inline int64_t torus_dist2(const IVec& a, const IVec& b, int64_t W) {
  int64_t s = 0;
  for (int k = 0; k < a.dim; ++k) {
    int64_t d = mod_floor(a.c[k] - b.c[k], W);
    d = std::min(d, W - d);
    s += d * d;
  }
  return s;
}

/// Axis-aligned half-open box given by lower corner and side lengths.
/// On the torus a box may wrap around the edge; membership and overlap
/// computations are modulo the window side.
struct Box {
  Vec lo;
  Vec len;

  Box() = default;
  Box(const Vec& lo_, const Vec& len_) : lo(lo_), len(len_) {}

  /// Cube [0, side)^d.
  static Box cube(int dim, double side) {
    Box b;
    b.lo = Vec(dim);
    b.len = Vec(dim);
    for (int k = 0; k < dim; ++k) b.len[k] = side;
    return b;
  }
  /// Cube centered at the origin with half-width r (wraps on the torus).
  static Box centered_cube(int dim, double r) {
    Box b;
    b.lo = Vec(dim);
    b.len = Vec(dim);
    for (int k = 0; k < dim; ++k) {
      b.lo[k] = -r;
      b.len[k] = 2 * r;
    }
    return b;
  }

  int dim() const { return lo.dim; }

  double volume() const {
    double v = 1;
    for (int k = 0; k < lo.dim; ++k) v *= len[k];
    return v;
  }

  bool contains_torus(const Vec& x, double W) const {
    for (int k = 0; k < lo.dim; ++k) {
      double rel = wrap_coord(x[k] - lo[k], W);
      if (!(rel < len[k])) return false;
    }
    return true;
  }

  Box shifted(const Vec& t) const { return Box(lo + t, len); }
};

inline std::ostream& operator<<(std::ostream& os, const Vec& v) {
  os << '(';
  for (int k = 0; k < v.dim; ++k) os << (k ? "," : "") << v[k];
  return os << ')';
}
inline std::ostream& operator<<(std::ostream& os, const IVec& v) {
  os << '(';
  for (int k = 0; k < v.dim; ++k) os << (k ? "," : "") << v[k];
  return os << ')';
}

struct IVecHash {
  size_t operator()(const IVec& v) const {
    size_t h = std::hash<int>()(v.dim);
    for (int k = 0; k < v.dim; ++k) {
      h ^= std::hash<int64_t>()(v.c[k]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace palmsim
