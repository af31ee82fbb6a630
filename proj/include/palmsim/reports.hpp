#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "palmsim/cdf.hpp"
#include "palmsim/energy.hpp"
#include "palmsim/functionals.hpp"
#include "palmsim/palm.hpp"
#include "palmsim/shifts.hpp"

namespace palmsim {

// ---------------------------------------------------------------------------
// Report structure
// ---------------------------------------------------------------------------

struct TestRow {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  bool reject = false;
};

struct TestReport {
  std::string kind;
  double level = 0.05;
  uint64_t seed = 0;
  size_t sample_count = 0;
  std::vector<TestRow> rows;
  std::vector<std::string> notes;
  bool pass = true;

  void finalize() {
    const double T = static_cast<double>(rows.size());
    pass = true;
    for (TestRow& r : rows) {
      r.p_adjusted = std::min(1.0, r.p_value * T);
      r.reject = r.p_adjusted <= level;
      if (r.reject) pass = false;
    }
  }

  /// Machine-readable key-value record; field names are fixed.
  void write(std::ostream& os) const {
    os << "report " << kind << "\n";
    os << "level " << level << "\n";
    os << "seed " << seed << "\n";
    os << "n " << sample_count << "\n";
    os << "tests " << rows.size() << "\n";
    os << std::setprecision(17);
    for (const TestRow& r : rows) {
      os << "test name=" << r.name << " statistic=" << r.statistic
         << " threshold=" << r.threshold << " p_value=" << r.p_value
         << " p_adjusted=" << r.p_adjusted
         << " verdict=" << (r.reject ? "reject" : "pass") << "\n";
    }
    for (const std::string& n : notes) os << "note " << n << "\n";
    os << "verdict " << (pass ? "consistent" : "rejected") << "\n";
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }
};

struct ReportOptions {
  int n_perm = 999;
  size_t max_per_side = 2048;
  int eq1_retry_cap = 100;
};

// ---------------------------------------------------------------------------
// Eq. (1) pair sampling
// ---------------------------------------------------------------------------

/// One draw of the mass-stationarity comparison for C = [0,n)^d: U uniform
/// on C given the pair, V from xi(. | C - U) given (pair, U). The RIGHT
/// tuple is ((X,xi), U), the LEFT tuple is (theta_V (X,xi), V + U).
struct Eq1Draw {
  std::vector<double> left, right;  // functional values on the two tuples
  Vec U, VU;                        // auxiliary points; VU = V + U lies in C
  double weight = 1.0;
};

inline Eq1Draw eq1_pair_sample(const WeightedSample& s, int nbox,
                               const FunctionalSet& fs, Rng& rng,
                               int retry_cap = 100) {
  const int d = s.dim();
  const double W = s.window();
  Eq1Draw out;

  if (!s.measure.has_density()) {
    // purely atomic: the continuum construction is exact as stated
    Vec U(d), V(d);
    bool ok = false;
    for (int attempt = 0; attempt < retry_cap && !ok; ++attempt) {
      U = rng.uniform_vec(d, static_cast<double>(nbox));
      Box cmu(-U, Box::cube(d, nbox).len);  // C - U
      if (!(mass(s.measure, cmu) > 0.0)) continue;
      Vec p = sample_conditional(s.measure, cmu, rng);
      for (int k = 0; k < d; ++k) V[k] = wrap_coord(p[k] + U[k], W) - U[k];
      ok = true;
    }
    if (!ok) throw ZeroMassBox("eq1_pair_sample: no mass in C - U after retries");
    out.U = U;
    out.VU = V + U;
    out.right = fs.eval(s);
    out.left = fs.eval(shift(s, V));
    out.weight = s.weight;
    return out;
  }

  // Gridded measure: the construction runs on the cell lattice, where it is
  // exact for the discrete shift group of the grid. U is a uniform cell
  // corner, cell mass re-roots at its cell corner, and a shared in-cell
  // jitter restores continuous auxiliary coordinates on both sides.
  const int G = s.measure.density->resolution;
  const int64_t cells = static_cast<int64_t>(nbox) * G;
  Vec cornerU(d), zeta(d), Vs(d);
  bool ok = false;
  for (int attempt = 0; attempt < retry_cap && !ok; ++attempt) {
    for (int k = 0; k < d; ++k)
      cornerU[k] = static_cast<double>(rng.uniform_index(cells)) / G;
    Box cmu(-cornerU, Box::cube(d, nbox).len);
    if (!(mass(s.measure, cmu) > 0.0)) continue;
    ConditionalDraw draw = sample_conditional_detail(s.measure, cmu, rng);
    Vec vraw = draw.from_atom ? draw.point : draw.cell_corner;
    for (int k = 0; k < d; ++k) Vs[k] = wrap_coord(vraw[k] + cornerU[k], W) - cornerU[k];
    ok = true;
  }
  if (!ok) throw ZeroMassBox("eq1_pair_sample: no mass in C - U after retries");
  for (int k = 0; k < d; ++k) zeta[k] = rng.uniform01() / G;
  out.U = cornerU + zeta;
  out.VU = Vs + cornerU + zeta;
  out.right = fs.eval(s);
  out.left = fs.eval(shift(s, Vs));
  out.weight = s.weight;
  return out;
}

// ---------------------------------------------------------------------------
// Report drivers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> concat(const std::vector<double>& a, const Vec& v) {
  std::vector<double> out = a;
  for (int k = 0; k < v.dim; ++k) out.push_back(v[k]);
  return out;
}

inline void run_battery(TestReport& rep, const std::string& prefix,
                        const std::vector<std::string>& names,
                        const WeightedVectors& left, const WeightedVectors& right,
                        Rng rng, const ReportOptions& opt) {
  TwoSampleOptions topt;
  topt.n_perm = opt.n_perm;
  topt.level = rep.level;
  topt.max_per_side = opt.max_per_side;
  for (size_t j = 0; j < left.dim; ++j) {
    TwoSampleResult r =
        weighted_two_sample(left.column(j), right.column(j), rng.derive(j), topt);
    TestRow row;
    row.name = prefix + ":" + names[j];
    row.statistic = r.statistic;
    row.threshold = r.threshold;
    row.p_value = r.p_value;
    rep.rows.push_back(row);
  }
  TwoSampleResult r = weighted_two_sample(left, right, rng.derive(10000), topt);
  TestRow row;
  row.name = prefix + ":joint";
  row.statistic = r.statistic;
  row.threshold = r.threshold;
  row.p_value = r.p_value;
  rep.rows.push_back(row);
}

}  // namespace detail

/// Mass-stationarity via Lemma 2 (boxes C = [0,n)^d only) plus the Lemma 1
/// exchange symmetry. Even-indexed samples populate the RIGHT law, odd ones
/// the LEFT law, so the two-sample null is exchangeable. Bonferroni over all
/// rows.
inline TestReport mass_stationarity_report(const std::vector<WeightedSample>& ensemble,
                                           const std::vector<int>& n_list,
                                           const FunctionalSet& fs, double level,
                                           Rng rng, const ReportOptions& opt = {}) {
  if (ensemble.empty()) throw EmptyEnsemble("mass_stationarity_report: empty ensemble");
  TestReport rep;
  rep.kind = "mass_stationarity";
  rep.level = level;
  rep.seed = rng.seed();
  rep.sample_count = ensemble.size();

  std::vector<std::string> names = fs.names();
  const int d = ensemble.front().dim();
  for (int k = 0; k < d; ++k) names.push_back("aux_" + std::to_string(k + 1));

  for (size_t ni = 0; ni < n_list.size(); ++ni) {
    const int nbox = n_list[ni];
    WeightedVectors left, right;       // Eq. (1) vectors + auxiliary point
    WeightedVectors lem_left, lem_right;  // Lemma 1: both auxiliary points
    for (size_t i = 0; i < ensemble.size(); ++i) {
      Rng r = rng.derive(ni * 1000003ULL + i);
      Eq1Draw dr = eq1_pair_sample(ensemble[i], nbox, fs, r, opt.eq1_retry_cap);
      if (i % 2 == 1) {
        left.add(detail::concat(dr.left, dr.VU), dr.weight);
        lem_left.add(detail::concat(detail::concat(dr.left, dr.VU), dr.U), dr.weight);
      } else {
        right.add(detail::concat(dr.right, dr.U), dr.weight);
        lem_right.add(detail::concat(detail::concat(dr.right, dr.U), dr.VU), dr.weight);
      }
    }
    const std::string prefix = "eq1 n=" + std::to_string(nbox);
    detail::run_battery(rep, prefix, names, left, right, rng.derive(500 + ni), opt);

    TwoSampleOptions topt;
    topt.n_perm = opt.n_perm;
    topt.level = level;
    topt.max_per_side = opt.max_per_side;
    TwoSampleResult lr =
        weighted_two_sample(lem_left, lem_right, rng.derive(700 + ni), topt);
    TestRow row;
    row.name = "lemma1 n=" + std::to_string(nbox) + ":joint";
    row.statistic = lr.statistic;
    row.threshold = lr.threshold;
    row.p_value = lr.p_value;
    rep.rows.push_back(row);
  }
  rep.finalize();
  return rep;
}

enum class ShiftKind { line, example1 };

struct ShiftTestParams {
  Vec direction;        // line mode; defaults to the first axis
  int tile = 1;         // n for the Example 1 background
  int subdiv = 1;       // subcells per density cell per axis (power of two)
  bool extend = false;  // Theorem 8 mode: product_extend first
  int extend_grid = 8;  // density resolution of the extension
  int max_laps = 8;
};

/// Distributional invariance under preserving shifts: line shifts s_r(Z)u
/// for strictly positive densities, or Example 1 shifts against a fresh
/// lattice background (optionally after extension to d+1). Even samples form
/// the unshifted group, odd samples are shifted.
inline TestReport shift_invariance_report(const std::vector<WeightedSample>& ensemble_in,
                                          ShiftKind kind,
                                          const std::vector<double>& r_grid,
                                          double level, Rng rng,
                                          const ShiftTestParams& par = {},
                                          const ReportOptions& opt = {}) {
  if (ensemble_in.empty()) throw EmptyEnsemble("shift_invariance_report: empty ensemble");
  TestReport rep;
  rep.kind = kind == ShiftKind::line ? "shift_invariance_line" : "shift_invariance_example1";
  rep.level = level;
  rep.seed = rng.seed();
  rep.sample_count = ensemble_in.size();

  std::vector<WeightedSample> extended;
  const std::vector<WeightedSample>* ens = &ensemble_in;
  if (par.extend) {
    extended.reserve(ensemble_in.size());
    for (const WeightedSample& s : ensemble_in)
      extended.push_back(product_extend(s, par.extend_grid));
    ens = &extended;
    rep.kind += "_extended";
  }
  const int d = ens->front().dim();
  const int W = ens->front().window();
  FunctionalSet fs = default_functional_set(d, W);
  std::vector<std::string> names = fs.names();

  std::shared_ptr<const PhiGrid> grid;
  if (kind == ShiftKind::example1) {
    const MeasureWindow& m0 = ens->front().measure;
    if (!m0.density) throw AtomicInput("example1 shifts need a diffuse measure");
    int64_t M = static_cast<int64_t>(par.tile) * m0.density->resolution * par.subdiv;
    grid = std::make_shared<PhiGrid>(d, par.tile, M);
    for (int k = 0; k < d; ++k) names.push_back("bg_" + std::to_string(k + 1));
  }

  Vec u = par.direction;
  if (u.dim != d) {
    u = Vec(d);
    u[0] = 1.0;
  }

  for (size_t ri = 0; ri < r_grid.size(); ++ri) {
    const double r = r_grid[ri];
    WeightedVectors shifted_group, unshifted_group;
    for (size_t i = 0; i < ens->size(); ++i) {
      const WeightedSample& s = (*ens)[i];
      Rng sr = rng.derive(ri * 2000003ULL + i);
      if (kind == ShiftKind::line) {
        if (i % 2 == 0) {
          unshifted_group.add(fs.eval(s), s.weight);
        } else {
          double sr_len = line_shift(s.measure, u, r, par.max_laps);
          shifted_group.add(fs.eval(shift(s, u * sr_len)), s.weight);
        }
      } else {
        // offsets live on the cell lattice of the gridded measure, the
        // stationary background of its discrete shift group
        Background bg = Background::draw_cell_aligned(
            d, par.tile, s.measure.density->resolution, sr);
        if (i % 2 == 0) {
          unshifted_group.add(detail::concat(fs.eval(s), bg.Y0), s.weight);
        } else {
          Vec pi = pi_r(bg, s.measure, r, grid);
          WeightedSample moved = shift(s, pi);
          Background bg2 = bg.shifted(pi);
          shifted_group.add(detail::concat(fs.eval(moved), bg2.Y0), s.weight);
        }
      }
    }
    std::ostringstream pf;
    pf << "shift r=" << r;
    detail::run_battery(rep, pf.str(), names, shifted_group, unshifted_group,
                        rng.derive(900 + ri), opt);
  }
  rep.finalize();
  return rep;
}

/// palm_inverse variant that also reports the realized (T, S).
struct InverseRecord {
  WeightedSample sample;
  Vec T;
  IVec S;
};

inline InverseRecord palm_inverse_record(const WeightedSample& s, Rng& rng,
                                         const InverseOptions& opt = {}) {
  if (!(s.weight > 0.0)) throw DegenerateWeight("palm_inverse: nonpositive weight");
  double tol = opt.support_tol;
  if (tol == 0.0)
    tol = s.measure.density ? s.measure.density->cell_side() : 0x1.0p-40;
  if (!origin_in_support(s.measure, tol))
    throw OriginNotInSupport("palm_inverse: origin carries no mass");
  InverseRecord rec;
  Vec T(s.dim());
  for (int k = 0; k < s.dim(); ++k) T[k] = rng.uniform_open01();
  WeightedSample inv = shift(s, -T);
  const double m0 = mass(inv.measure, unit_cube(s.dim()));
  if (!(m0 > 0.0)) throw ZeroMassBox("palm_inverse: shifted origin box carries no mass");
  CellDecomposition dec = decompose(inv.measure, opt.chart);
  const std::vector<IVec>& Dstar = dec.cell_D;
  IVec S = Dstar[rng.uniform_index(Dstar.size())];
  rec.sample = shift(inv, wrap_centered(S, s.window()).to_vec());
  rec.sample.weight = s.weight * static_cast<double>(Dstar.size()) / m0;
  rec.T = T;
  rec.S = wrap_centered(S, s.window());
  return rec;
}

/// Theorem 2 then Theorem 3 on every sample; compares reconstructed and
/// original functional laws and checks the Theorem 3 conditional law of T by
/// a binned chi-square with a Monte-Carlo null.
inline TestReport roundtrip_report(const std::vector<WeightedSample>& ensemble,
                                   const FunctionalSet& fs, double level, Rng rng,
                                   const ReportOptions& opt = {}) {
  if (ensemble.empty()) throw EmptyEnsemble("roundtrip_report: empty ensemble");
  TestReport rep;
  rep.kind = "roundtrip";
  rep.level = level;
  rep.seed = rng.seed();
  rep.sample_count = ensemble.size();

  const int d = ensemble.front().dim();
  std::vector<InverseRecord> recs(ensemble.size());
  for (size_t i = 0; i < ensemble.size(); ++i) {
    Rng r = rng.derive(i);
    PalmRecord fwd = palm_forward(ensemble[i], r);
    recs[i] = palm_inverse_record(fwd.sample, r);
  }

  WeightedVectors rec_group, orig_group;
  for (size_t i = 0; i < ensemble.size(); ++i) {
    if (i % 2 == 1)
      rec_group.add(fs.eval(recs[i].sample), recs[i].sample.weight);
    else
      orig_group.add(fs.eval(ensemble[i]), ensemble[i].weight);
  }
  detail::run_battery(rep, "roundtrip", fs.names(), rec_group, orig_group,
                      rng.derive(31337), opt);

  // Theorem 3: given the reconstructed pair, T follows
  // (theta_{-S} xi)(. | [0,1)^d) with S recomputed from the pair.
  const int64_t nbins = int64_t{1} << d;
  auto bin_of = [&](const Vec& t) {
    int64_t b = 0;
    for (int k = 0; k < d; ++k) b = b * 2 + (t[k] >= 0.5 ? 1 : 0);
    return b;
  };
  std::vector<double> observed(nbins, 0.0), expected(nbins, 0.0);
  std::vector<std::vector<double>> probs(recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CellDecomposition dec = decompose(recs[i].sample.measure);
    MeasureWindow msh = shift(recs[i].sample.measure, -dec.shift_S.to_vec());
    double tot = mass(msh, unit_cube(d));
    probs[i].resize(nbins);
    for (int64_t b = 0; b < nbins; ++b) {
      Box bb = unit_cube(d);
      int64_t t = b;
      for (int k = d - 1; k >= 0; --k) {
        bb.lo[k] = (t % 2) ? 0.5 : 0.0;
        bb.len[k] = 0.5;
        t /= 2;
      }
      probs[i][b] = tot > 0 ? mass(msh, bb) / tot : 1.0 / nbins;
    }
    const double w = recs[i].sample.weight;
    observed[bin_of(recs[i].T)] += w;
    for (int64_t b = 0; b < nbins; ++b) expected[b] += w * probs[i][b];
  }
  auto chi2 = [&](const std::vector<double>& obs) {
    double s = 0.0;
    for (int64_t b = 0; b < nbins; ++b) {
      double e = std::max(expected[b], 1e-12);
      double dd = obs[b] - expected[b];
      s += dd * dd / e;
    }
    return s;
  };
  const double stat = chi2(observed);
  const int n_mc = std::max(opt.n_perm, 199);
  int ge = 0;
  std::vector<double> null_stats(n_mc);
  for (int p = 0; p < n_mc; ++p) {
    Rng pr = rng.derive(50000 + static_cast<uint64_t>(p));
    std::vector<double> obs(nbins, 0.0);
    for (size_t i = 0; i < recs.size(); ++i) {
      double u = pr.uniform01();
      int64_t b = 0;
      while (b + 1 < nbins && u >= probs[i][b]) u -= probs[i][b], ++b;
      obs[b] += recs[i].sample.weight;
    }
    null_stats[p] = chi2(obs);
    if (null_stats[p] >= stat) ++ge;
  }
  TestRow row;
  row.name = "thm3:T_conditional_chi2";
  row.statistic = stat;
  std::sort(null_stats.begin(), null_stats.end());
  size_t qi = static_cast<size_t>(std::ceil((1.0 - level) * n_mc));
  if (qi >= null_stats.size()) qi = null_stats.size() - 1;
  row.threshold = null_stats[qi];
  row.p_value = (1.0 + ge) / (1.0 + n_mc);
  rep.rows.push_back(row);

  rep.finalize();
  return rep;
}

}  // namespace palmsim
