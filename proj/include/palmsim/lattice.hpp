#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "palmsim/measure.hpp"

namespace palmsim {

// ---------------------------------------------------------------------------
// Lattice sites
// ---------------------------------------------------------------------------

inline int64_t site_count(int dim, int W) {
  int64_t n = 1;
  for (int k = 0; k < dim; ++k) n *= W;
  return n;
}

inline int64_t site_flatten(const IVec& s, int W) {
  int64_t f = 0;
  for (int k = 0; k < s.dim; ++k) f = f * W + mod_floor(s[k], W);
  return f;
}

inline IVec site_unflatten(int64_t f, int dim, int W) {
  IVec s(dim);
  for (int k = dim - 1; k >= 0; --k) {
    s[k] = f % W;
    f /= W;
  }
  return s;
}

/// Unit box i + [0,1)^d of a lattice site.
inline Box site_box(const IVec& i) {
  Box b;
  b.lo = i.to_vec();
  b.len = Vec(i.dim);
  for (int k = 0; k < i.dim; ++k) b.len[k] = 1.0;
  return b;
}

// ---------------------------------------------------------------------------
// Lattice point process N and its Voronoi partition
// ---------------------------------------------------------------------------

/// Sites i with xi(i + [0,1)^d) > 0, in lexicographic order.
inline std::vector<IVec> build_lattice_points(const MeasureWindow& m) {
  std::vector<IVec> pts;
  const int64_t n = site_count(m.dim, m.window);
  for (int64_t f = 0; f < n; ++f) {
    IVec s = site_unflatten(f, m.dim, m.window);
    if (mass(m, site_box(s)) > 0.0) pts.push_back(s);
  }
  if (pts.empty()) throw EmptyMeasure("build_lattice_points: no unit box carries mass");
  return pts;
}

/// Total map from every lattice site to the owning point of N.
struct Assignment {
  int dim = 0;
  int window = 0;
  std::vector<int32_t> owner;  // flat site index -> flat owner site index

  IVec owner_of(const IVec& s) const {
    return site_unflatten(owner[site_flatten(s, window)], dim, window);
  }
};

/// Nearest-point assignment under torus Euclidean distance. Ties go to the
/// point with the lowest lexicographic order of its representative
/// coordinates in {0,...,W-1}^d.
inline Assignment voronoi_assign(const std::vector<IVec>& points, int W, int dim) {
  if (points.empty()) throw EmptyMeasure("voronoi_assign: empty point set");
  Assignment a;
  a.dim = dim;
  a.window = W;
  std::vector<IVec> pts = points;
  std::sort(pts.begin(), pts.end());
  const int64_t n = site_count(dim, W);
  a.owner.assign(n, -1);
  for (int64_t f = 0; f < n; ++f) {
    IVec s = site_unflatten(f, dim, W);
    int64_t best = -1;
    int32_t best_idx = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
      int64_t d2 = torus_dist2(s, pts[i], W);
      if (best_idx < 0 || d2 < best) {  // scan order is lexicographic, so
        best = d2;                      // the first minimum is the tie winner
        best_idx = static_cast<int32_t>(i);
      }
    }
    a.owner[f] = static_cast<int32_t>(site_flatten(pts[best_idx], W));
  }
  return a;
}

/// Cell data seen from the origin: D = cell of site 0, S = vector from the
/// owning N-point to 0 (torus-minimal integer representative), D* = S + D.
struct CellDecomposition {
  std::vector<IVec> lattice_points;
  Assignment assignment;
  std::vector<IVec> cell_D;       // sites sharing the owner of 0
  IVec shift_S;                   // centered representative
  std::vector<IVec> cell_D_star;  // wrapped into {0,...,W-1}^d
  IVec owner0;

  int64_t cell_size() const { return static_cast<int64_t>(cell_D.size()); }

  bool in_D_star(const IVec& i) const {
    IVec w = wrap(i, assignment.window);
    for (const IVec& x : cell_D_star)
      if (x == w) return true;
    return false;
  }
};

inline void fill_cell_at_origin(CellDecomposition& dec) {
  const int dim = dec.assignment.dim;
  const int W = dec.assignment.window;
  const int64_t n = site_count(dim, W);
  const int32_t o0 = dec.assignment.owner[site_flatten(IVec(dim), W)];
  dec.owner0 = site_unflatten(o0, dim, W);
  dec.cell_D.clear();
  for (int64_t f = 0; f < n; ++f)
    if (dec.assignment.owner[f] == o0) dec.cell_D.push_back(site_unflatten(f, dim, W));
  dec.shift_S = wrap_centered(-dec.owner0, W);
  dec.cell_D_star.clear();
  for (const IVec& i : dec.cell_D) dec.cell_D_star.push_back(wrap(i + dec.shift_S, W));
}

/// (D, S, D*) from a precomputed assignment.
inline CellDecomposition cell_at_origin(const Assignment& a,
                                        std::vector<IVec> points = {}) {
  CellDecomposition dec;
  dec.assignment = a;
  dec.lattice_points = std::move(points);
  fill_cell_at_origin(dec);
  return dec;
}

// ---------------------------------------------------------------------------
// Shift-covariant decomposition
// ---------------------------------------------------------------------------

namespace detail {

/// Deterministic, shift-covariant score of the content of a unit box,
/// read relative to the box corner. Almost surely distinct across boxes for
/// measures with continuous atom positions or continuous density values, so
/// the argmax anchors an intrinsic chart.
inline double box_content_score(const MeasureWindow& m, const IVec& site) {
  double score = 0.0;
  for (const Atom& a : m.atoms) {
    bool in = true;
    double mix = 1.0;
    for (int k = 0; k < m.dim; ++k) {
      double rel = wrap_coord(a.pos[k] - static_cast<double>(site[k]), m.window);
      if (!(rel < 1.0)) {
        in = false;
        break;
      }
      mix += rel * (0.61803398874989484 + 0.13198824 * k);
    }
    if (in) score += a.mass * mix;
  }
  if (m.density) {
    const Grid& g = *m.density;
    const int G = g.resolution;
    int64_t cells = 1;
    for (int k = 0; k < m.dim; ++k) cells *= G;
    for (int64_t r = 0; r < cells; ++r) {
      IVec cell(m.dim);
      int64_t f = r;
      for (int k = m.dim - 1; k >= 0; --k) {
        cell[k] = site[k] * G + f % G;
        f /= G;
      }
      uint64_t h = static_cast<uint64_t>(r) + 1;
      double u = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
      score += g.at(cell) * (0.5 + u);
    }
  }
  return score;
}

}  // namespace detail

enum class TieChart {
  AsGiven,   // lexicographic ties in the window chart {0,...,W-1}^d
  Canonical  // lexicographic ties in a chart anchored at an intrinsic site
};

/// Full decomposition of a measure. The Canonical mode re-charts the torus
/// at the occupied site with the highest content score before applying the
/// lexicographic tie rule, which makes the partition exactly shift-covariant
/// for almost every realization; tie configurations under AsGiven depend on
/// where the window chart cuts the torus.
inline CellDecomposition decompose(const MeasureWindow& m,
                                   TieChart chart = TieChart::Canonical) {
  std::vector<IVec> pts = build_lattice_points(m);
  const int W = m.window;
  const int dim = m.dim;

  if (chart == TieChart::AsGiven) {
    Assignment a = voronoi_assign(pts, W, dim);
    return cell_at_origin(std::move(a), std::move(pts));
  }

  // anchor = argmax over occupied sites of (box mass, content score),
  // lexicographically lowest site as the last resort for exactly symmetric
  // configurations
  IVec anchor = pts.front();
  double best_mass = mass(m, site_box(anchor));
  double best_score = detail::box_content_score(m, anchor);
  for (size_t i = 1; i < pts.size(); ++i) {
    double bm = mass(m, site_box(pts[i]));
    if (bm < best_mass) continue;
    double sc = detail::box_content_score(m, pts[i]);
    if (bm > best_mass || sc > best_score) {
      anchor = pts[i];
      best_mass = bm;
      best_score = sc;
    }
  }

  // assign in the chart where the anchor sits at the origin, then map back
  std::vector<IVec> shifted;
  shifted.reserve(pts.size());
  for (const IVec& p : pts) shifted.push_back(wrap(p - anchor, W));
  Assignment in_chart = voronoi_assign(shifted, W, dim);
  Assignment a;
  a.dim = dim;
  a.window = W;
  const int64_t n = site_count(dim, W);
  a.owner.assign(n, -1);
  for (int64_t f = 0; f < n; ++f) {
    IVec s = site_unflatten(f, dim, W);
    IVec oc = in_chart.owner_of(wrap(s - anchor, W));
    a.owner[f] = static_cast<int32_t>(site_flatten(oc + anchor, W));
  }
  return cell_at_origin(a, std::move(pts));
}

}  // namespace palmsim
