#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "palmsim/errors.hpp"
#include "palmsim/rng.hpp"

namespace palmsim {

/// Weighted point cloud in R^k, row-major.
struct WeightedVectors {
  size_t n = 0;
  size_t dim = 0;
  std::vector<double> data;  // n * dim
  std::vector<double> w;

  void add(const std::vector<double>& x, double weight) {
    if (n == 0 && dim == 0) dim = x.size();
    if (x.size() != dim) throw std::invalid_argument("WeightedVectors: dim mismatch");
    data.insert(data.end(), x.begin(), x.end());
    w.push_back(weight);
    ++n;
  }

  const double* row(size_t i) const { return data.data() + i * dim; }

  double total_weight() const { return std::accumulate(w.begin(), w.end(), 0.0); }

  /// Single-column view.
  WeightedVectors column(size_t j) const {
    WeightedVectors out;
    out.n = n;
    out.dim = 1;
    out.w = w;
    out.data.resize(n);
    for (size_t i = 0; i < n; ++i) out.data[i] = data[i * dim + j];
    return out;
  }
};

struct TwoSampleOptions {
  int n_perm = 999;
  double level = 0.05;
  size_t max_per_side = 2048;  // seeded subsample cap; weights travel
};

struct TwoSampleResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double threshold = 0.0;  // (1-level)-quantile of the permutation statistics
  size_t n_a = 0, n_b = 0;
};

namespace detail {

inline std::vector<size_t> subsample_indices(size_t n, size_t cap, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  if (n <= cap) return idx;
  for (size_t i = 0; i < cap; ++i) {
    size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  return idx;
}

/// -z^T D z with z = (+alpha | -beta): equals the energy statistic
/// 2*sum_ab - sum_aa - sum_bb for the two weighted empirical laws.
inline double energy_from_matrix(const std::vector<float>& D, size_t N,
                                 const std::vector<double>& z) {
  double s = 0.0;
  for (size_t i = 0; i < N; ++i) {
    const float* row = D.data() + i * N;
    const double zi = z[i];
    if (zi == 0.0) continue;
    double acc = 0.0;
    for (size_t j = 0; j < N; ++j) acc += static_cast<double>(row[j]) * z[j];
    s += zi * acc;
  }
  return -s;
}

/// 1-D energy statistic in O(N) over a fixed ascending order:
/// -sum_{i,j} z_i z_j |x_i - x_j| = -2 sum_{i<j} z_i z_j (x_j - x_i).
inline double energy_1d_sorted(const std::vector<double>& x_sorted,
                               const std::vector<double>& z_in_order) {
  double zsum = 0.0, zxsum = 0.0, acc = 0.0;
  const size_t N = x_sorted.size();
  for (size_t j = 0; j < N; ++j) {
    const double zj = z_in_order[j];
    acc += zj * (x_sorted[j] * zsum - zxsum);
    zsum += zj;
    zxsum += zj * x_sorted[j];
  }
  return -2.0 * acc;
}

}  // namespace detail

/// Weighted energy-distance permutation test. The statistic is the energy
/// distance between the two weighted empirical laws on components
/// standardized by the pooled weighted moments; the null distribution comes
/// from random relabelings of the pooled points, with each point keeping its
/// weight. Sides larger than the cap are reduced by a seeded subsample.
/// Deterministic given the rng state.
inline TwoSampleResult weighted_two_sample(const WeightedVectors& A,
                                           const WeightedVectors& B, Rng rng,
                                           const TwoSampleOptions& opt = {}) {
  if (A.n == 0 || B.n == 0)
    throw DegenerateSample("weighted_two_sample: empty sample");
  if (!(A.total_weight() > 0.0) || !(B.total_weight() > 0.0))
    throw DegenerateSample("weighted_two_sample: zero total weight");
  if (A.dim != B.dim) throw std::invalid_argument("weighted_two_sample: dim mismatch");

  Rng sub_rng = rng.derive(0xA5);
  std::vector<size_t> ia = detail::subsample_indices(A.n, opt.max_per_side, sub_rng);
  std::vector<size_t> ib = detail::subsample_indices(B.n, opt.max_per_side, sub_rng);
  const size_t na = ia.size(), nb = ib.size(), N = na + nb;
  const size_t dim = A.dim;

  // pooled, standardized coordinates
  std::vector<double> X(N * dim);
  std::vector<double> wgt(N);
  for (size_t i = 0; i < na; ++i) {
    for (size_t k = 0; k < dim; ++k) X[i * dim + k] = A.row(ia[i])[k];
    wgt[i] = A.w[ia[i]];
  }
  for (size_t j = 0; j < nb; ++j) {
    for (size_t k = 0; k < dim; ++k) X[(na + j) * dim + k] = B.row(ib[j])[k];
    wgt[na + j] = B.w[ib[j]];
  }
  {
    double wtot = std::accumulate(wgt.begin(), wgt.end(), 0.0);
    for (size_t k = 0; k < dim; ++k) {
      double m = 0.0, m2 = 0.0;
      for (size_t i = 0; i < N; ++i) m += wgt[i] * X[i * dim + k];
      m /= wtot;
      for (size_t i = 0; i < N; ++i) {
        double d = X[i * dim + k] - m;
        m2 += wgt[i] * d * d;
      }
      double sd = std::sqrt(m2 / wtot);
      if (!(sd > 1e-300)) sd = 1.0;
      for (size_t i = 0; i < N; ++i) X[i * dim + k] = (X[i * dim + k] - m) / sd;
    }
  }

  // labels: first na entries of `assign` are group A
  std::vector<uint32_t> assign(N);
  std::iota(assign.begin(), assign.end(), 0u);

  const bool univariate = (dim == 1);
  std::vector<float> D;
  std::vector<double> x_sorted;
  std::vector<size_t> pos_in_sorted;  // pooled index -> position in sorted order
  if (univariate) {
    std::vector<size_t> ord(N);
    std::iota(ord.begin(), ord.end(), size_t{0});
    std::sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return X[a] < X[b]; });
    x_sorted.resize(N);
    pos_in_sorted.resize(N);
    for (size_t p = 0; p < N; ++p) {
      x_sorted[p] = X[ord[p]];
      pos_in_sorted[ord[p]] = p;
    }
  } else {
    D.assign(N * N, 0.0f);
    for (size_t i = 0; i < N; ++i) {
      for (size_t j = i + 1; j < N; ++j) {
        double s = 0.0;
        for (size_t k = 0; k < dim; ++k) {
          double d = X[i * dim + k] - X[j * dim + k];
          s += d * d;
        }
        float dist = static_cast<float>(std::sqrt(s));
        D[i * N + j] = dist;
        D[j * N + i] = dist;
      }
    }
  }

  std::vector<double> z(N);
  auto statistic_for = [&](const std::vector<uint32_t>& lab) {
    double wa = 0.0, wb = 0.0;
    for (size_t i = 0; i < na; ++i) wa += wgt[lab[i]];
    for (size_t j = na; j < N; ++j) wb += wgt[lab[j]];
    if (!(wa > 0.0) || !(wb > 0.0))
      throw DegenerateSample("weighted_two_sample: zero group weight in relabeling");
    std::fill(z.begin(), z.end(), 0.0);
    for (size_t i = 0; i < na; ++i) z[lab[i]] = wgt[lab[i]] / wa;
    for (size_t j = na; j < N; ++j) z[lab[j]] = -wgt[lab[j]] / wb;
    if (univariate) {
      std::vector<double> zs(N);
      for (size_t i = 0; i < N; ++i) zs[pos_in_sorted[i]] = z[i];
      return detail::energy_1d_sorted(x_sorted, zs);
    }
    return detail::energy_from_matrix(D, N, z);
  };

  TwoSampleResult res;
  res.n_a = na;
  res.n_b = nb;
  res.statistic = statistic_for(assign);

  std::vector<double> null_stats(opt.n_perm);
  int ge = 0;
  for (int p = 0; p < opt.n_perm; ++p) {
    Rng pr = rng.derive(1000 + static_cast<uint64_t>(p));
    std::vector<uint32_t> lab = assign;
    for (size_t i = 0; i + 1 < N; ++i) {
      size_t j = i + pr.uniform_index(N - i);
      std::swap(lab[i], lab[j]);
    }
    null_stats[p] = statistic_for(lab);
    if (null_stats[p] >= res.statistic) ++ge;
  }
  res.p_value = (1.0 + ge) / (1.0 + opt.n_perm);
  std::sort(null_stats.begin(), null_stats.end());
  size_t qi = static_cast<size_t>(std::ceil((1.0 - opt.level) * opt.n_perm));
  if (qi >= null_stats.size()) qi = null_stats.size() - 1;
  res.threshold = null_stats[qi];
  return res;
}

// ---------------------------------------------------------------------------
// Small classical helpers
// ---------------------------------------------------------------------------

/// Kolmogorov-Smirnov statistic of values against a CDF given as a callable.
template <typename Cdf>
double ks_statistic(std::vector<double> values, Cdf cdf) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double F = cdf(values[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
  }
  return d;
}

/// Asymptotic KS critical value at levels 0.05 / 0.01.
inline double ks_critical(double level, size_t n) {
  double c = level <= 0.01 ? 1.628 : 1.358;
  return c / std::sqrt(static_cast<double>(n));
}

/// Total-variation distance between two discrete distributions on a shared
/// index set.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace palmsim
