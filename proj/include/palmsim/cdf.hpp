#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "palmsim/measure.hpp"
#include "palmsim/phi.hpp"

namespace palmsim {

/// Subdivision of the tile [0,n)^d into M^d equal subcells together with the
/// phi images of their centers, sorted once. The center set is the same for
/// every measure on the tile, so CDF construction reduces to gathering
/// masses in the precomputed order.
class PhiGrid {
 public:
  PhiGrid(int dim, int n, int64_t subcells_per_axis)
      : dim_(dim), n_(n), M_(subcells_per_axis) {
    if (M_ <= 0 || (M_ & (M_ - 1)) != 0)
      throw std::invalid_argument("PhiGrid: subcells per axis must be a power of two");
    bits_ = 1;
    while ((int64_t{1} << bits_) < M_) ++bits_;
    bits_ += 1;  // centers sit at odd multiples of 1/(2M)
    int64_t total = 1;
    for (int k = 0; k < dim_; ++k) total *= M_;
    std::vector<BitFraction> phis(total);
    for (int64_t f = 0; f < total; ++f) phis[f] = phi_encode(center_bits(f));
    order_.resize(total);
    std::iota(order_.begin(), order_.end(), int64_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int64_t a, int64_t b) { return phis[a] < phis[b]; });
    rank_.resize(total);
    phi_sorted_.resize(total);
    for (int64_t r = 0; r < total; ++r) {
      rank_[order_[r]] = r;
      phi_sorted_[r] = phis[order_[r]];
    }
  }

  int dim() const { return dim_; }
  int tile_side() const { return n_; }
  int64_t subcells_per_axis() const { return M_; }
  int64_t total_subcells() const { return static_cast<int64_t>(order_.size()); }
  int bits() const { return bits_; }
  double subcell_volume() const {
    return std::pow(static_cast<double>(n_) / M_, dim_);
  }

  int64_t flatten(const IVec& idx) const {
    int64_t f = 0;
    for (int k = 0; k < dim_; ++k) f = f * M_ + idx[k];
    return f;
  }

  IVec subcell_of(const Vec& s) const {
    IVec idx(dim_);
    for (int k = 0; k < dim_; ++k) {
      int64_t i = static_cast<int64_t>(std::floor(s[k] * M_ / n_));
      idx[k] = std::clamp<int64_t>(i, 0, M_ - 1);
    }
    return idx;
  }

  Vec center(int64_t flat) const {
    Vec c(dim_);
    for (int k = dim_ - 1; k >= 0; --k) {
      c[k] = (static_cast<double>(flat % M_) + 0.5) * n_ / M_;
      flat /= M_;
    }
    return c;
  }

  BitPoint center_bits(int64_t flat) const {
    BitPoint p;
    p.dim = dim_;
    p.bits = bits_;
    for (int k = dim_ - 1; k >= 0; --k) {
      // (i + 0.5) / M = (2i + 1) / 2^bits, exact because M is dyadic
      p.frac[k] = static_cast<uint64_t>(flat % M_) * 2 + 1;
      flat /= M_;
    }
    return p;
  }

  int64_t rank_of_flat(int64_t flat) const { return rank_[flat]; }
  int64_t flat_of_rank(int64_t rank) const { return order_[rank]; }
  const BitFraction& phi_of_rank(int64_t rank) const { return phi_sorted_[rank]; }

  /// Index of the last sorted atom with phi value <= x, or -1.
  int64_t last_rank_leq(const BitFraction& x) const {
    auto it = std::upper_bound(phi_sorted_.begin(), phi_sorted_.end(), x,
                               [](const BitFraction& a, const BitFraction& b) {
                                 return a < b;
                               });
    return static_cast<int64_t>(it - phi_sorted_.begin()) - 1;
  }

 private:
  int dim_;
  int n_;
  int64_t M_;
  int bits_;
  std::vector<int64_t> order_;       // rank -> flat subcell
  std::vector<int64_t> rank_;        // flat subcell -> rank
  std::vector<BitFraction> phi_sorted_;
};

/// Pushforward distribution function F_mu of a diffuse tile measure under
/// phi, as a step function over the subcell-center atoms.
struct StepCdf {
  std::shared_ptr<const PhiGrid> grid;
  std::vector<double> prob;  // per rank, sums to 1
  std::vector<double> cum;   // inclusive cumulative
  double max_step = 0.0;     // largest single atom, the CDF's resolution

  /// F(x) = mu(phi <= x).
  double value(const BitFraction& x) const {
    int64_t r = grid->last_rank_leq(x);
    return r < 0 ? 0.0 : cum[r];
  }

  /// Left-continuous generalized inverse: the smallest atom with cum >= y.
  int64_t inverse_rank(double y) const {
    auto it = std::lower_bound(cum.begin(), cum.end(), y);
    if (it == cum.end()) return static_cast<int64_t>(cum.size()) - 1;
    return static_cast<int64_t>(it - cum.begin());
  }
};

/// Builds F_mu for a measure on the tile window [0,n)^d. The measure must be
/// purely diffuse; its density cells are subdivided by the grid and every
/// subcell's mass is pushed through phi at the subcell center.
inline StepCdf build_cdf(const MeasureWindow& mu, std::shared_ptr<const PhiGrid> grid) {
  if (!mu.atoms.empty()) throw AtomicInput("build_cdf: measure has atoms");
  if (!mu.density) throw std::invalid_argument("build_cdf: no density component");
  if (mu.window != grid->tile_side() || mu.dim != grid->dim())
    throw std::invalid_argument("build_cdf: grid/tile mismatch");
  const Grid& g = *mu.density;
  const int64_t M = grid->subcells_per_axis();
  const int64_t ge = g.extent();
  if (M % ge != 0)
    throw std::invalid_argument("build_cdf: subdivision does not refine the density grid");
  const int64_t total = grid->total_subcells();
  const int64_t sub_factor = M / ge;  // subcells per density cell per axis
  StepCdf cdf;
  cdf.grid = grid;
  cdf.prob.assign(total, 0.0);
  const double subvol = grid->subcell_volume();
  double sum = 0.0;
  for (int64_t f = 0; f < total; ++f) {
    // density cell containing this subcell
    IVec sub(grid->dim());
    int64_t t = f;
    for (int k = grid->dim() - 1; k >= 0; --k) {
      sub[k] = (t % M) / sub_factor;
      t /= M;
    }
    double m = g.at(sub) * subvol;
    cdf.prob[grid->rank_of_flat(f)] = m;
    sum += m;
  }
  if (!(sum > 0.0)) throw ZeroMassBox("build_cdf: tile carries no mass");
  cdf.cum.resize(total);
  double acc = 0.0;
  for (int64_t r = 0; r < total; ++r) {
    cdf.prob[r] /= sum;
    acc += cdf.prob[r];
    cdf.cum[r] = acc;
    cdf.max_step = std::max(cdf.max_step, cdf.prob[r]);
  }
  cdf.cum[total - 1] = 1.0;
  return cdf;
}

/// psi_r^mu(s) = phi^-1( F^-1( F(phi(s)) + r mod 1 ) ), a point of the
/// subcell-center support of F. On that support psi_0 is the identity
/// whenever every subcell carries mass.
inline Vec psi_shift(const StepCdf& cdf, double r, const Vec& s) {
  const PhiGrid& grid = *cdf.grid;
  BitFraction x = phi_encode(BitPoint::quantize(s, grid.tile_side(), grid.bits()));
  double F = cdf.value(x);
  double y = F + r;
  if (y > 1.0) y -= 1.0;
  if (y <= 0.0) y = std::min(1.0, y + 1.0);
  return grid.center(grid.flat_of_rank(cdf.inverse_rank(y)));
}

}  // namespace palmsim
