#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "palmsim/cdf.hpp"
#include "palmsim/measure.hpp"

namespace palmsim {

/// Stationary lattice background Y: an offset Y0 uniform on [0,n)^d fixes
/// the tile grid nZ^d - Y0, and Y_s is the vector from the lexicographically
/// lowest corner of the tile containing s, to s.
struct Background {
  int n = 1;
  Vec Y0;

  static Background draw(int dim, int n, Rng& rng) {
    Background b;
    b.n = n;
    b.Y0 = rng.uniform_vec(dim, static_cast<double>(n));
    return b;
  }

  /// Offset drawn on the cell lattice of a gridded measure: the stationary
  /// background of the discrete shift group (1/G)Z^d. Used when the measure
  /// being shifted is itself piecewise constant on that lattice.
  static Background draw_cell_aligned(int dim, int n, int resolution, Rng& rng) {
    Background b;
    b.n = n;
    b.Y0 = Vec(dim);
    const uint64_t cells = static_cast<uint64_t>(n) * resolution;
    for (int k = 0; k < dim; ++k)
      b.Y0[k] = static_cast<double>(rng.uniform_index(cells)) / resolution;
    return b;
  }

  /// Y_s = (Y0 + s) mod n, coordinatewise.
  Vec at(const Vec& s) const {
    Vec y(s.dim);
    for (int k = 0; k < s.dim; ++k) y[k] = wrap_coord(Y0[k] + s[k], n);
    return y;
  }

  /// Lowest corner of the tile containing s (torus coordinates of window W).
  Vec corner(const Vec& s, int W) const { return wrap(s - at(s), W); }

  /// The background shifted by t is the background with offset (Y0+t) mod n.
  Background shifted(const Vec& t) const {
    Background b;
    b.n = n;
    b.Y0 = at(t);
    return b;
  }
};

/// The tile measure mu = theta_{-Y0} xi (. | [0,n)^d) used by the Example 1
/// shift, re-charted onto the tile window.
inline MeasureWindow tile_measure(const MeasureWindow& xi, const Background& bg) {
  MeasureWindow shifted_measure = shift(xi, -bg.Y0);
  MeasureWindow mu = restrict_to_cube(shifted_measure, bg.n);
  if (!mu.atoms.empty()) throw AtomicInput("tile measure has atoms");
  return mu;
}

/// Example 1 preserving shift evaluated at the origin:
/// pi_r = psi_r^mu(y) - y with y the subcell-center representative of Y0.
/// Snapping to the center keeps pi_0 = 0 exact on the B-bit grid.
inline Vec pi_r(const Background& bg, const MeasureWindow& xi, double r,
                std::shared_ptr<const PhiGrid> grid) {
  StepCdf cdf = build_cdf(tile_measure(xi, bg), grid);
  const Vec y = grid->center(grid->flatten(grid->subcell_of(bg.Y0)));
  return psi_shift(cdf, r, y) - y;
}

/// Allocation rule tau_r(s) = s + pi_r(theta_s(Y, xi)). Every point stays in
/// its own tile of nZ^d - Y0; tile CDFs are built once and shared across the
/// query points of the tile.
class Example1Allocation {
 public:
  Example1Allocation(Background bg, const MeasureWindow& xi, double r,
                     std::shared_ptr<const PhiGrid> grid)
      : bg_(bg), xi_(&xi), r_(r), grid_(std::move(grid)) {}

  Vec operator()(const Vec& s) const {
    const int W = xi_->window;
    const Vec corner = bg_.corner(s, W);
    IVec key(s.dim);
    for (int k = 0; k < s.dim; ++k)
      key[k] = static_cast<int64_t>(std::floor(wrap_coord(s[k] + bg_.Y0[k], W) /
                                               static_cast<double>(bg_.n)));
    auto it = cache_.find(flat_key(key));
    if (it == cache_.end()) {
      MeasureWindow shifted_measure = shift(*xi_, corner);
      MeasureWindow mu = restrict_to_cube(shifted_measure, bg_.n);
      if (!mu.atoms.empty()) throw AtomicInput("Example1Allocation: atoms in tile");
      it = cache_.emplace(flat_key(key), build_cdf(mu, grid_)).first;
    }
    const StepCdf& cdf = it->second;
    Vec rel = bg_.at(s);
    Vec y = grid_->center(grid_->flatten(grid_->subcell_of(rel)));
    Vec moved = psi_shift(cdf, r_, y) - y;
    return wrap(s + moved, W);
  }

 private:
  int64_t flat_key(const IVec& key) const {
    int64_t f = 0;
    const int64_t tiles = xi_->window / bg_.n + 1;
    for (int k = 0; k < key.dim; ++k) f = f * tiles + key[k];
    return f;
  }

  Background bg_;
  const MeasureWindow* xi_;
  double r_;
  std::shared_ptr<const PhiGrid> grid_;
  mutable std::map<int64_t, StepCdf> cache_;
};

/// s_r(Z): the unique s with integral_0^s Z(x u) dx = r, by piecewise-linear
/// inversion of the cumulative line integral over grid cells. The ray may
/// wrap around the torus up to max_laps times.
inline double line_shift(const Grid& Z, const Vec& u_in, double r, int max_laps = 8) {
  if (!(r > 0.0)) throw std::invalid_argument("line_shift: r must be positive");
  Vec u = u_in;
  const double nrm = u.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("line_shift: zero direction");
  u = u * (1.0 / nrm);
  const int d = Z.dim;
  const double W = Z.window;
  const double cw = Z.cell_side();
  const double cap = max_laps * W * std::sqrt(static_cast<double>(d));

  double x = 0.0;     // ray parameter
  double acc = 0.0;   // cumulative integral
  Vec p(d);           // current torus position
  while (x < cap) {
    // step to the next cell boundary along any axis
    double step = cap - x;
    for (int k = 0; k < d; ++k) {
      if (u[k] == 0.0) continue;
      double pk = wrap_coord(p[k], W);
      double rel = pk / cw - std::floor(pk / cw);
      double dist = u[k] > 0 ? (1.0 - rel) * cw / u[k] : -(rel * cw) / u[k];
      if (dist <= 0.0) dist = cw / std::abs(u[k]);  // sitting on a boundary
      step = std::min(step, dist);
    }
    step = std::max(step, 1e-12 * cw);
    Vec mid = wrap(p + u * (step * 0.5), W);
    const double z = Z.value_at(mid);
    if (!(z > 0.0))
      throw NonpositiveDensity("line_shift: density not strictly positive on the ray");
    if (acc + z * step >= r) return x + (r - acc) / z;
    acc += z * step;
    x += step;
    p = wrap(p + u * step, W);
  }
  throw InsufficientMass("line_shift: ray integral below r within the lap budget");
}

inline double line_shift(const MeasureWindow& m, const Vec& u, double r,
                         int max_laps = 8) {
  if (!m.density) throw std::invalid_argument("line_shift: no density field");
  if (!m.atoms.empty()) throw AtomicInput("line_shift: measure has atoms");
  return line_shift(*m.density, u, r, max_laps);
}

/// Pushforward-mass comparison for an allocation sampled at atoms and cell
/// centers: passes when | xi(tau in B) - xi(B) | <= tol for every test box.
struct PreservationEntry {
  Box box;
  double pushforward = 0.0;
  double reference = 0.0;
  bool pass = false;
};

struct PreservationReport {
  std::vector<PreservationEntry> entries;
  double tol = 0.0;
  bool all_pass = true;
};

inline PreservationReport check_preserving(
    const std::function<Vec(const Vec&)>& allocation, const MeasureWindow& xi,
    const std::vector<Box>& boxes, double tol) {
  PreservationReport rep;
  rep.tol = tol;
  std::vector<Vec> images_atoms;
  for (const Atom& a : xi.atoms) images_atoms.push_back(allocation(a.pos));
  std::vector<Vec> images_cells;
  std::vector<double> cell_masses;
  if (xi.density) {
    const Grid& g = *xi.density;
    const int64_t n = g.cell_count();
    const double vol = g.cell_volume();
    for (int64_t f = 0; f < n; ++f) {
      double m = g.values[f] * vol;
      if (m == 0.0) continue;
      images_cells.push_back(allocation(g.cell_center(g.unflatten(f))));
      cell_masses.push_back(m);
    }
  }
  for (const Box& b : boxes) {
    PreservationEntry e;
    e.box = b;
    e.reference = mass(xi, b);
    for (size_t i = 0; i < xi.atoms.size(); ++i)
      if (b.contains_torus(images_atoms[i], xi.window)) e.pushforward += xi.atoms[i].mass;
    for (size_t i = 0; i < images_cells.size(); ++i)
      if (b.contains_torus(images_cells[i], xi.window)) e.pushforward += cell_masses[i];
    e.pass = std::abs(e.pushforward - e.reference) <= tol;
    rep.all_pass = rep.all_pass && e.pass;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace palmsim
