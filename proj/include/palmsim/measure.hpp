#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "palmsim/errors.hpp"
#include "palmsim/rng.hpp"
#include "palmsim/vec.hpp"

namespace palmsim {

// ---------------------------------------------------------------------------
// Gridded fields
// ---------------------------------------------------------------------------

/// Piecewise-constant field on the torus [0,W)^d with G cells per unit
/// length: cell i covers [i/G,(i+1)/G) along each axis. Used both for
/// density components of a random measure and for mark fields.
struct Grid {
  int dim = 0;
  int window = 0;      // W
  int resolution = 0;  // G, cells per unit length
  std::vector<double> values;

  Grid() = default;
  Grid(int d, int W, int G, double fill = 0.0)
      : dim(d), window(W), resolution(G) {
    values.assign(cell_count(), fill);
  }

  int64_t extent() const { return static_cast<int64_t>(window) * resolution; }
  int64_t cell_count() const {
    int64_t n = 1;
    for (int k = 0; k < dim; ++k) n *= extent();
    return n;
  }
  double cell_side() const { return 1.0 / resolution; }
  double cell_volume() const { return std::pow(cell_side(), dim); }

  int64_t flatten(const IVec& idx) const {
    int64_t f = 0;
    for (int k = 0; k < dim; ++k) f = f * extent() + mod_floor(idx[k], extent());
    return f;
  }
  IVec unflatten(int64_t f) const {
    IVec idx(dim);
    for (int k = dim - 1; k >= 0; --k) {
      idx[k] = f % extent();
      f /= extent();
    }
    return idx;
  }

  IVec cell_of(const Vec& x) const {
    IVec idx(dim);
    for (int k = 0; k < dim; ++k) {
      double w = wrap_coord(x[k], window);
      idx[k] = std::min<int64_t>(static_cast<int64_t>(std::floor(w * resolution)),
                                 extent() - 1);
    }
    return idx;
  }

  Vec cell_center(const IVec& idx) const {
    Vec c(dim);
    for (int k = 0; k < dim; ++k)
      c[k] = (static_cast<double>(mod_floor(idx[k], extent())) + 0.5) * cell_side();
    return c;
  }

  double at(const IVec& idx) const { return values[flatten(idx)]; }
  double& at(const IVec& idx) { return values[flatten(idx)]; }
  double value_at(const Vec& x) const { return values[flatten(cell_of(x))]; }

  double total_integral() const {
    double s = 0;
    for (double v : values) s += v;
    return s * cell_volume();
  }

  /// Field shifted by t: result(s) = this(s + t), with t rounded to the
  /// nearest whole cell per axis.
  Grid shifted(const Vec& t) const {
    IVec r(dim);
    for (int k = 0; k < dim; ++k) r[k] = llround(t[k] * resolution);
    return shifted_cells(r);
  }

  Grid shifted_cells(const IVec& r) const {
    Grid out(dim, window, resolution);
    const int64_t n = cell_count();
    // walk output cells in flat order, looking up source cells
    IVec idx(dim);
    for (int64_t f = 0; f < n; ++f) {
      IVec src(dim);
      for (int k = 0; k < dim; ++k) src[k] = idx[k] + r[k];
      out.values[f] = values[flatten(src)];
      // odometer increment
      for (int k = dim - 1; k >= 0; --k) {
        if (++idx[k] < extent()) break;
        idx[k] = 0;
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Random-measure realizations
// ---------------------------------------------------------------------------

struct Atom {
  Vec pos;
  double mass = 0.0;
};

/// One realization of a random measure on the torus window: an atom list
/// plus an optional piecewise-constant density component.
struct MeasureWindow {
  int dim = 0;
  int window = 0;  // W; integer so unit boxes tile the torus
  std::vector<Atom> atoms;
  std::optional<Grid> density;

  MeasureWindow() = default;
  MeasureWindow(int d, int W) : dim(d), window(W) {}

  bool has_density() const { return density.has_value(); }

  double total_mass() const {
    double s = 0;
    for (const Atom& a : atoms) s += a.mass;
    if (density) s += density->total_integral();
    return s;
  }

  void check_invariants() const {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("measure: bad dimension");
    if (window < 1) throw std::invalid_argument("measure: window side must be positive");
    for (const Atom& a : atoms) {
      if (a.pos.dim != dim) throw std::invalid_argument("measure: atom dimension mismatch");
      for (int k = 0; k < dim; ++k)
        if (!(a.pos[k] >= 0.0 && a.pos[k] < window))
          throw std::invalid_argument("measure: atom outside window");
      if (!(a.mass > 0.0) || !std::isfinite(a.mass))
        throw std::invalid_argument("measure: atom mass must be positive and finite");
    }
    if (density) {
      if (density->dim != dim || density->window != window)
        throw std::invalid_argument("measure: density grid shape mismatch");
      for (double v : density->values)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw std::invalid_argument("measure: density values must be finite and >= 0");
    }
  }
};

/// Auxiliary random element X: a mark grid plus an optional list of marked
/// points; spatial shifts act on it jointly with the measure.
struct MarkField {
  int dim = 0;
  int window = 0;
  std::optional<Grid> values;
  std::vector<Atom> marked_points;  // (location, mark value)

  MarkField() = default;
  MarkField(int d, int W) : dim(d), window(W) {}
};

/// Ensemble unit: the pair (X, xi) with an importance weight carrying all
/// change-of-measure factors.
struct WeightedSample {
  MarkField marks;
  MeasureWindow measure;
  double weight = 1.0;

  int dim() const { return measure.dim; }
  int window() const { return measure.window; }
};

// ---------------------------------------------------------------------------
// Box decomposition helpers (torus wrap handled per axis)
// ---------------------------------------------------------------------------

namespace detail {

/// One contiguous overlap piece between a grid axis and a (possibly
/// wrapping) interval [start, start+len) mod W: cell index, piece offset in
/// torus coordinates and piece length.
struct AxisPiece {
  int64_t cell;
  double start;
  double len;
};

inline void axis_pieces(double start, double len, int W, int G,
                        std::vector<AxisPiece>& out) {
  out.clear();
  const double cw = 1.0 / G;
  const int64_t extent = static_cast<int64_t>(W) * G;
  double s = wrap_coord(start, W);
  // split [s, s+len) into at most two non-wrapping spans
  struct Span {
    double a, b;
  };
  Span spans[2];
  int nspan = 0;
  if (len >= static_cast<double>(W)) {
    spans[nspan++] = {0.0, static_cast<double>(W)};
  } else if (s + len <= static_cast<double>(W)) {
    spans[nspan++] = {s, s + len};
  } else {
    spans[nspan++] = {s, static_cast<double>(W)};
    spans[nspan++] = {0.0, s + len - W};
  }
  for (int i = 0; i < nspan; ++i) {
    const double a = spans[i].a, b = spans[i].b;
    if (!(b > a)) continue;
    int64_t c0 = static_cast<int64_t>(std::floor(a * G));
    int64_t c1 = static_cast<int64_t>(std::ceil(b * G)) - 1;
    c0 = std::max<int64_t>(c0, 0);
    c1 = std::min<int64_t>(c1, extent - 1);
    for (int64_t c = c0; c <= c1; ++c) {
      double lo = std::max(a, c * cw);
      double hi = std::min(b, (c + 1) * cw);
      if (hi > lo) out.push_back({c, lo, hi - lo});
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// theta_t applied to a measure: every atom at a moves to (a - t) mod W and
/// the density grid rotates by the nearest whole number of cells.
inline MeasureWindow shift(const MeasureWindow& m, const Vec& t) {
  MeasureWindow out(m.dim, m.window);
  out.atoms.reserve(m.atoms.size());
  for (const Atom& a : m.atoms)
    out.atoms.push_back({wrap(a.pos - t, m.window), a.mass});
  if (m.density) out.density = m.density->shifted(t);
  return out;
}

inline MarkField shift(const MarkField& x, const Vec& t) {
  MarkField out(x.dim, x.window);
  if (x.values) out.values = x.values->shifted(t);
  out.marked_points.reserve(x.marked_points.size());
  for (const Atom& p : x.marked_points)
    out.marked_points.push_back({wrap(p.pos - t, x.window), p.mass});
  return out;
}

/// Joint shift theta_t(X, xi); the weight is unchanged. When the sample
/// lives in an extended dimension (see product_extend) t may still be
/// full-dimensional: the mark grid there is constant along the extra axis,
/// so the trivial action comes out automatically.
inline WeightedSample shift(const WeightedSample& s, const Vec& t) {
  WeightedSample out;
  out.marks = shift(s.marks, t);
  out.measure = shift(s.measure, t);
  out.weight = s.weight;
  return out;
}

/// xi(B) for a half-open box B (which may wrap around the torus edge):
/// the sum of atom masses inside plus the density integral computed cell by
/// cell from exact overlap volumes.
inline double mass(const MeasureWindow& m, const Box& box) {
  double s = 0;
  for (const Atom& a : m.atoms)
    if (box.contains_torus(a.pos, m.window)) s += a.mass;
  if (m.density) {
    const Grid& g = *m.density;
    std::vector<detail::AxisPiece> pieces[kMaxDim];
    bool any_empty = false;
    for (int k = 0; k < m.dim; ++k) {
      detail::axis_pieces(box.lo[k], box.len[k], m.window, g.resolution, pieces[k]);
      if (pieces[k].empty()) any_empty = true;
    }
    if (!any_empty) {
      // product over per-axis pieces
      std::array<size_t, kMaxDim> it{};
      while (true) {
        IVec cell(m.dim);
        double vol = 1.0;
        for (int k = 0; k < m.dim; ++k) {
          const auto& p = pieces[k][it[k]];
          cell[k] = p.cell;
          vol *= p.len;
        }
        s += g.at(cell) * vol;
        int k = m.dim - 1;
        while (k >= 0 && ++it[k] == pieces[k].size()) it[k--] = 0;
        if (k < 0) break;
      }
    }
  }
  return s;
}

/// True iff the cube of half-width tol around the origin carries mass.
inline bool origin_in_support(const MeasureWindow& m, double tol) {
  return mass(m, Box::centered_cube(m.dim, tol)) > 0.0;
}

/// Conditional draw with provenance: whether the point came from an atom or
/// a density cell, and in the latter case the lower corner of that cell.
/// Re-rooting constructions shift by the corner for cell mass, which keeps
/// them exact for the cell-lattice shift group of gridded measures.
struct ConditionalDraw {
  Vec point;
  bool from_atom = false;
  Vec cell_corner;  // valid when !from_atom
};

inline ConditionalDraw sample_conditional_detail(const MeasureWindow& m, const Box& box,
                                                 Rng& rng) {
  struct Choice {
    double w;
    bool is_atom;
    size_t atom_idx;
    std::array<detail::AxisPiece, kMaxDim> piece;
  };
  std::vector<Choice> choices;
  double total = 0;
  for (size_t i = 0; i < m.atoms.size(); ++i) {
    if (box.contains_torus(m.atoms[i].pos, m.window)) {
      choices.push_back({m.atoms[i].mass, true, i, {}});
      total += m.atoms[i].mass;
    }
  }
  if (m.density) {
    const Grid& g = *m.density;
    std::vector<detail::AxisPiece> pieces[kMaxDim];
    bool any_empty = false;
    for (int k = 0; k < m.dim; ++k) {
      detail::axis_pieces(box.lo[k], box.len[k], m.window, g.resolution, pieces[k]);
      if (pieces[k].empty()) any_empty = true;
    }
    if (!any_empty) {
      std::array<size_t, kMaxDim> it{};
      while (true) {
        Choice ch;
        ch.is_atom = false;
        ch.atom_idx = 0;
        IVec cell(m.dim);
        double vol = 1.0;
        for (int k = 0; k < m.dim; ++k) {
          ch.piece[k] = pieces[k][it[k]];
          cell[k] = ch.piece[k].cell;
          vol *= ch.piece[k].len;
        }
        ch.w = g.at(cell) * vol;
        if (ch.w > 0) {
          choices.push_back(ch);
          total += ch.w;
        }
        int k = m.dim - 1;
        while (k >= 0 && ++it[k] == pieces[k].size()) it[k--] = 0;
        if (k < 0) break;
      }
    }
  }
  if (!(total > 0.0)) throw ZeroMassBox("sample_conditional: box carries no mass");
  double u = rng.uniform01() * total;
  size_t pick = choices.size() - 1;
  for (size_t i = 0; i < choices.size(); ++i) {
    if (u < choices[i].w) {
      pick = i;
      break;
    }
    u -= choices[i].w;
  }
  const Choice& ch = choices[pick];
  ConditionalDraw out;
  if (ch.is_atom) {
    out.from_atom = true;
    out.point = m.atoms[ch.atom_idx].pos;
    return out;
  }
  out.point = Vec(m.dim);
  out.cell_corner = Vec(m.dim);
  const double cw = m.density->cell_side();
  for (int k = 0; k < m.dim; ++k) {
    out.point[k] = ch.piece[k].start + rng.uniform01() * ch.piece[k].len;
    out.cell_corner[k] = static_cast<double>(ch.piece[k].cell) * cw;
  }
  return out;
}

/// Point drawn from xi(. | B): atoms with probability proportional to their
/// mass, density cells proportional to value times overlap volume and then
/// uniformly within the overlap piece. Returned in torus coordinates.
inline Vec sample_conditional(const MeasureWindow& m, const Box& box, Rng& rng) {
  return sample_conditional_detail(m, box, rng).point;
}

/// xi (x) lambda_1, discretized: atoms become constant-density columns along
/// the new axis (cell value = mass * G^d so that a unit slab reproduces the
/// atom's mass), density cells extend constantly, marks extend constantly.
/// Shifts along coordinate d+1 act trivially on the marks because the
/// extended mark grid is constant along that axis.
inline WeightedSample product_extend(const WeightedSample& s, int grid_resolution = 0) {
  const int d = s.dim();
  const int W = s.window();
  if (d + 1 > kMaxDim) throw std::invalid_argument("product_extend: dimension limit");
  int G = grid_resolution;
  if (G == 0) {
    if (s.measure.density)
      G = s.measure.density->resolution;
    else if (s.marks.values)
      G = s.marks.values->resolution;
    else
      G = 8;
  }

  WeightedSample out;
  out.weight = s.weight;
  out.measure = MeasureWindow(d + 1, W);
  Grid dens(d + 1, W, G);
  const int64_t ncol = dens.extent();
  // density component first (must share G with the atom columns)
  if (s.measure.density) {
    const Grid& src = *s.measure.density;
    if (src.resolution != G)
      throw std::invalid_argument("product_extend: density resolution mismatch");
    const int64_t base = src.cell_count();
    for (int64_t f = 0; f < base; ++f) {
      double v = src.values[f];
      if (v == 0.0) continue;
      for (int64_t j = 0; j < ncol; ++j) dens.values[f * ncol + j] += v;
    }
  }
  const double colval = std::pow(static_cast<double>(G), d);
  Grid ref(d, W, G);  // index helper for atom columns
  for (const Atom& a : s.measure.atoms) {
    int64_t f = ref.flatten(ref.cell_of(a.pos));
    for (int64_t j = 0; j < ncol; ++j) dens.values[f * ncol + j] += a.mass * colval;
  }
  out.measure.density = std::move(dens);

  out.marks = MarkField(d + 1, W);
  if (s.marks.values) {
    const Grid& src = *s.marks.values;
    Grid ext(d + 1, W, src.resolution);
    const int64_t mcol = ext.extent();
    const int64_t base = src.cell_count();
    for (int64_t f = 0; f < base; ++f)
      for (int64_t j = 0; j < mcol; ++j) ext.values[f * mcol + j] = src.values[f];
    out.marks.values = std::move(ext);
  }
  for (const Atom& p : s.marks.marked_points) {
    Vec q(d + 1);
    for (int k = 0; k < d; ++k) q[k] = p.pos[k];
    q[d] = 0.0;
    out.marks.marked_points.push_back({q, p.mass});
  }
  return out;
}

/// Restriction of a measure to the cell-aligned cube [0,side)^d, re-read as
/// a measure on the smaller window of side `side`.
inline MeasureWindow restrict_to_cube(const MeasureWindow& m, int side) {
  MeasureWindow out(m.dim, side);
  for (const Atom& a : m.atoms) {
    bool in = true;
    for (int k = 0; k < m.dim; ++k)
      if (!(a.pos[k] < side)) in = false;
    if (in) out.atoms.push_back(a);
  }
  if (m.density) {
    const Grid& g = *m.density;
    Grid sub(m.dim, side, g.resolution);
    const int64_t se = sub.extent();
    const int64_t n = sub.cell_count();
    IVec idx(m.dim);
    for (int64_t f = 0; f < n; ++f) {
      sub.values[f] = g.at(idx);
      for (int k = m.dim - 1; k >= 0; --k) {
        if (++idx[k] < se) break;
        idx[k] = 0;
      }
    }
    out.density = std::move(sub);
  }
  return out;
}

}  // namespace palmsim
