#pragma once

#include <functional>
#include <vector>

#include "palmsim/lattice.hpp"
#include "palmsim/measure.hpp"

namespace palmsim {

inline Box unit_cube(int dim) { return Box::cube(dim, 1.0); }

/// Result of the forward construction: the transformed pair together with
/// the realized randomization variables and the cell data they came from.
struct PalmRecord {
  WeightedSample sample;
  Vec T;
  IVec S;
  CellDecomposition decomposition;
};

/// Stationary -> mass-stationary. Computes (D, S) from the lattice cells,
/// draws T from (theta_{-S} xi)(. | [0,1)^d), shifts the pair by theta_T
/// theta_{-S} and multiplies the weight by theta_{-S}xi([0,1)^d) / |D|.
inline PalmRecord palm_forward(const WeightedSample& s, Rng& rng,
                               TieChart chart = TieChart::Canonical) {
  if (!(s.weight > 0.0)) throw DegenerateWeight("palm_forward: nonpositive weight");
  PalmRecord rec;
  rec.decomposition = decompose(s.measure, chart);
  rec.S = rec.decomposition.shift_S;
  WeightedSample shifted = shift(s, -rec.S.to_vec());
  const Box cube = unit_cube(s.dim());
  const double m0 = mass(shifted.measure, cube);
  // the owner's box carries mass by construction of N
  ConditionalDraw t = sample_conditional_detail(shifted.measure, cube, rng);
  rec.T = t.point;
  // cell mass re-roots at the cell corner (exact for the grid shift group)
  rec.sample = shift(shifted, t.from_atom ? t.point : t.cell_corner);
  rec.sample.weight = s.weight * m0 / static_cast<double>(rec.decomposition.cell_size());
  return rec;
}

struct InverseOptions {
  double support_tol = 0.0;  // 0: one density cell if gridded, else 2^-40
  TieChart chart = TieChart::Canonical;
};

/// Mass-stationary -> stationary. Draws T uniform on (0,1)^d, builds N* from
/// theta_{-T} xi* (which has a point at 0), draws S uniform on the cell D*
/// of the origin and multiplies the weight by |D*| / theta_{-T}xi*([0,1)^d).
inline WeightedSample palm_inverse(const WeightedSample& s, Rng& rng,
                                   const InverseOptions& opt = {}) {
  if (!(s.weight > 0.0)) throw DegenerateWeight("palm_inverse: nonpositive weight");
  double tol = opt.support_tol;
  if (tol == 0.0)
    tol = s.measure.density ? s.measure.density->cell_side() : 0x1.0p-40;
  if (!origin_in_support(s.measure, tol))
    throw OriginNotInSupport("palm_inverse: origin carries no mass");

  Vec T(s.dim());
  for (int k = 0; k < s.dim(); ++k) T[k] = rng.uniform_open01();
  WeightedSample inv = shift(s, -T);
  const Box cube = unit_cube(s.dim());
  const double m0 = mass(inv.measure, cube);
  if (!(m0 > 0.0)) throw ZeroMassBox("palm_inverse: shifted origin box carries no mass");

  CellDecomposition dec = decompose(inv.measure, opt.chart);
  // site 0 is a point of N*, so the origin cell is its own cell
  const std::vector<IVec>& Dstar = dec.cell_D;
  IVec S = Dstar[rng.uniform_index(Dstar.size())];
  WeightedSample out = shift(inv, wrap_centered(S, s.window()).to_vec());
  out.weight = s.weight * static_cast<double>(Dstar.size()) / m0;
  return out;
}

/// Theorem 4 reweighting: same paths, weight multiplied by the density read
/// at the origin cell. A zero cell is reported, not silently dropped.
inline WeightedSample density_palm(const WeightedSample& s) {
  if (!s.measure.density) throw std::invalid_argument("density_palm: no density grid");
  if (!s.measure.atoms.empty()) throw AtomicInput("density_palm: measure has atoms");
  const double z0 = s.measure.density->value_at(Vec(s.dim()));
  if (z0 == 0.0) throw DegenerateWeight("density_palm: zero density at origin");
  WeightedSample out = s;
  out.weight = s.weight * z0;
  return out;
}

/// Theorem 5 reweighting; requires a strictly positive density field.
inline WeightedSample density_inverse(const WeightedSample& s) {
  if (!s.measure.density) throw std::invalid_argument("density_inverse: no density grid");
  for (double v : s.measure.density->values)
    if (!(v > 0.0)) throw NonpositiveDensity("density_inverse: density cell <= 0");
  const double z0 = s.measure.density->value_at(Vec(s.dim()));
  WeightedSample out = s;
  out.weight = s.weight / z0;
  return out;
}

/// Direct Monte-Carlo evaluation of the defining Palm identity on a
/// stationary ensemble: E[ integral_B f(theta_t (X,xi)) xi(dt) ] / lambda(B),
/// with atoms contributing mass * f at their location and density cells
/// contributing value * overlap volume * f at the cell center. Input weights
/// are self-normalized. This is the reference oracle for palm_forward.
inline double palm_expectation(
    const std::function<double(const WeightedSample&)>& f,
    const std::vector<WeightedSample>& ensemble, const Box& B) {
  if (ensemble.empty()) throw EmptyEnsemble("palm_expectation: empty ensemble");
  if (!(B.volume() > 0.0)) throw std::invalid_argument("palm_expectation: lambda(B) = 0");
  double num = 0.0, den = 0.0;
  for (const WeightedSample& s : ensemble) {
    double contrib = 0.0;
    for (const Atom& a : s.measure.atoms)
      if (B.contains_torus(a.pos, s.window())) contrib += a.mass * f(shift(s, a.pos));
    if (s.measure.density) {
      const Grid& g = *s.measure.density;
      std::vector<detail::AxisPiece> pieces[kMaxDim];
      bool any_empty = false;
      for (int k = 0; k < s.dim(); ++k) {
        detail::axis_pieces(B.lo[k], B.len[k], s.window(), g.resolution, pieces[k]);
        if (pieces[k].empty()) any_empty = true;
      }
      if (!any_empty) {
        std::array<size_t, kMaxDim> it{};
        while (true) {
          IVec cell(s.dim());
          double vol = 1.0;
          for (int k = 0; k < s.dim(); ++k) {
            cell[k] = pieces[k][it[k]].cell;
            vol *= pieces[k][it[k]].len;
          }
          double w = g.at(cell) * vol;
          if (w > 0.0) contrib += w * f(shift(s, g.cell_center(cell)));
          int k = s.dim() - 1;
          while (k >= 0 && ++it[k] == pieces[k].size()) it[k--] = 0;
          if (k < 0) break;
        }
      }
    }
    num += s.weight * contrib;
    den += s.weight;
  }
  if (!(den > 0.0)) throw DegenerateSample("palm_expectation: total weight is zero");
  return num / (den * B.volume());
}

}  // namespace palmsim
