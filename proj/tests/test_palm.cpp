#include <catch2/catch_amalgamated.hpp>

#include "palmsim/ensemble.hpp"
#include "palmsim/generators.hpp"
#include "palmsim/palm.hpp"
#include "palmsim/reports.hpp"

using namespace palmsim;

namespace {

WeightedSample two_atom_sample(double mass_at_half) {
  WeightedSample s;
  s.measure = MeasureWindow(1, 8);
  s.measure.atoms.push_back({Vec{0.5}, mass_at_half});
  s.measure.atoms.push_back({Vec{3.2}, 1.0});
  s.marks = MarkField(1, 8);
  return s;
}

double bounded_mass_box2(const WeightedSample& s) {
  return std::min(mass(s.measure, Box::cube(s.dim(), 2.0)), 10.0);
}

}  // namespace

TEST_CASE("palm_forward: deterministic example") {
  Rng rng(1);
  PalmRecord rec = palm_forward(two_atom_sample(1.0), rng);
  REQUIRE(rec.S == IVec{0});
  REQUIRE(rec.T[0] == 0.5);
  REQUIRE(rec.decomposition.cell_size() == 4);
  REQUIRE(rec.sample.weight == Catch::Approx(0.25).margin(1e-15));
  REQUIRE(rec.sample.measure.atoms[0].pos[0] == 0.0);
  REQUIRE(origin_in_support(rec.sample.measure, 1e-9));

  PalmRecord rec2 = palm_forward(two_atom_sample(2.0), rng);
  REQUIRE(rec2.sample.weight == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("palm_forward: mean output weight is the intensity") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 4000, 77);
  Rng rng(78);
  double sum = 0, sum2 = 0;
  for (size_t i = 0; i < ens.size(); ++i) {
    Rng r = rng.derive(i);
    double w = palm_forward(ens[i], r).sample.weight;
    sum += w;
    sum2 += w * w;
  }
  double mean = sum / ens.size();
  double se = std::sqrt((sum2 / ens.size() - mean * mean) / ens.size());
  REQUIRE(std::abs(mean - 1.0) < 3.0 * se);
}

TEST_CASE("palm_forward matches the defining Palm identity (Eq.-level oracle)") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 4000, 301);
  auto ens2 = generate_ensemble(spec, 4000, 302);

  // E°[f] from the forward construction...
  Rng rng(303);
  double lhs_sum = 0, lhs_sum2 = 0;
  for (size_t i = 0; i < ens.size(); ++i) {
    Rng r = rng.derive(i);
    PalmRecord rec = palm_forward(ens[i], r);
    double v = rec.sample.weight * bounded_mass_box2(rec.sample);
    lhs_sum += v;
    lhs_sum2 += v * v;
  }
  double lhs = lhs_sum / ens.size();
  double lse = std::sqrt((lhs_sum2 / ens.size() - lhs * lhs) / ens.size());

  // ...against the direct weighted Monte-Carlo of the identity
  double rhs = palm_expectation(bounded_mass_box2, ens2, Box::cube(1, 8.0));
  // crude se for the oracle side
  double rs = 0, rs2 = 0;
  for (const auto& s : ens2) {
    double c = 0;
    for (const Atom& a : s.measure.atoms) c += a.mass * bounded_mass_box2(shift(s, a.pos));
    c /= 8.0;
    rs += c;
    rs2 += c * c;
  }
  double rmean = rs / ens2.size();
  double rse = std::sqrt((rs2 / ens2.size() - rmean * rmean) / ens2.size());
  REQUIRE(std::abs(lhs - rhs) < 3.0 * std::sqrt(lse * lse + rse * rse));
}

TEST_CASE("palm_forward: joint law of (S, T) against the stationary side") {
  // for fixed i and B in [0,1)^d the weighted frequency of {S=i, T in B, f}
  // equals E[ 1{i in D*}/|D| integral_B f(theta_t .) xi(dt) ]
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 6000, 311);
  auto ens2 = generate_ensemble(spec, 6000, 312);
  Box B(Vec{0.0}, Vec{0.5});

  for (int64_t iv : {0, 1}) {
    IVec i{iv};
    Rng rng(313 + iv);
    double lhs_sum = 0, lhs_sum2 = 0;
    for (size_t k = 0; k < ens.size(); ++k) {
      Rng r = rng.derive(k);
      PalmRecord rec = palm_forward(ens[k], r);
      double v = 0.0;
      if (rec.S == i && B.contains_torus(rec.T, 8.0))
        v = rec.sample.weight * bounded_mass_box2(rec.sample);
      lhs_sum += v;
      lhs_sum2 += v * v;
    }
    double lhs = lhs_sum / ens.size();
    double lse = std::sqrt((lhs_sum2 / ens.size() - lhs * lhs) / ens.size());

    double rhs_sum = 0, rhs_sum2 = 0;
    for (const auto& s : ens2) {
      CellDecomposition dec = decompose(s.measure);
      double v = 0.0;
      if (dec.in_D_star(i)) {
        double integral = 0.0;
        for (const Atom& a : s.measure.atoms)
          if (B.contains_torus(a.pos, 8.0))
            integral += a.mass * bounded_mass_box2(shift(s, a.pos));
        v = integral / static_cast<double>(dec.cell_size());
      }
      rhs_sum += v;
      rhs_sum2 += v * v;
    }
    double rhs = rhs_sum / ens2.size();
    double rse = std::sqrt((rhs_sum2 / ens2.size() - rhs * rhs) / ens2.size());
    REQUIRE(std::abs(lhs - rhs) < 3.0 * std::sqrt(lse * lse + rse * rse) + 1e-12);
  }
}

namespace {

// Monte-Carlo calibrated weighted chi-square against per-sample bin laws.
double mc_chi2_pvalue(const std::vector<std::vector<double>>& probs,
                      const std::vector<int>& observed_bin,
                      const std::vector<double>& weights, int n_mc, Rng rng) {
  const size_t nbins = probs.front().size();
  std::vector<double> expected(nbins, 0.0);
  for (size_t i = 0; i < probs.size(); ++i)
    for (size_t b = 0; b < nbins; ++b) expected[b] += weights[i] * probs[i][b];
  auto chi2 = [&](const std::vector<double>& obs) {
    double s = 0;
    for (size_t b = 0; b < nbins; ++b) {
      double e = std::max(expected[b], 1e-12);
      s += (obs[b] - expected[b]) * (obs[b] - expected[b]) / e;
    }
    return s;
  };
  std::vector<double> obs(nbins, 0.0);
  for (size_t i = 0; i < probs.size(); ++i) obs[observed_bin[i]] += weights[i];
  const double stat = chi2(obs);
  int ge = 0;
  for (int p = 0; p < n_mc; ++p) {
    Rng pr = rng.derive(p);
    std::vector<double> o(nbins, 0.0);
    for (size_t i = 0; i < probs.size(); ++i) {
      double u = pr.uniform01();
      size_t b = 0;
      while (b + 1 < nbins && u >= probs[i][b]) u -= probs[i][b], ++b;
      o[b] += weights[i];
    }
    if (chi2(o) >= stat) ++ge;
  }
  return (1.0 + ge) / (1.0 + n_mc);
}

}  // namespace

TEST_CASE("palm_forward: T uniform and S uniform on D* (conditional laws)") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 4000, 321);
  Rng rng(322);

  const int nbins = 4;
  std::vector<std::vector<double>> tprobs, sprobs;
  std::vector<int> tbin, sbin;
  std::vector<double> tw, sw;
  for (size_t i = 0; i < ens.size(); ++i) {
    Rng r = rng.derive(i);
    PalmRecord rec = palm_forward(ens[i], r);
    tprobs.push_back(std::vector<double>(nbins, 1.0 / nbins));
    tbin.push_back(std::min<int>(static_cast<int>(rec.T[0] * nbins), nbins - 1));
    tw.push_back(rec.sample.weight);
    // rank of S within lexicographically sorted D*
    std::vector<IVec> ds = rec.decomposition.cell_D_star;
    std::sort(ds.begin(), ds.end());
    IVec swrap = wrap(rec.S, 8);
    int rank = 0;
    for (size_t k = 0; k < ds.size(); ++k)
      if (ds[k] == swrap) rank = static_cast<int>(k);
    const int m = static_cast<int>(ds.size());
    std::vector<double> pr(8, 0.0);
    for (int k = 0; k < m && k < 8; ++k) pr[k] = 1.0 / m;
    sprobs.push_back(pr);
    sbin.push_back(std::min(rank, 7));
    sw.push_back(rec.sample.weight);
  }
  REQUIRE(mc_chi2_pvalue(tprobs, tbin, tw, 400, rng.derive(900001)) > 0.01);
  REQUIRE(mc_chi2_pvalue(sprobs, sbin, sw, 400, rng.derive(900002)) > 0.01);
}

TEST_CASE("palm_inverse: examples and errors") {
  Rng rng(5);
  WeightedSample d0;
  d0.measure = MeasureWindow(1, 8);
  d0.measure.atoms.push_back({Vec{0.0}, 1.0});
  d0.marks = MarkField(1, 8);
  for (int i = 0; i < 10; ++i) {
    WeightedSample out = palm_inverse(d0, rng);
    REQUIRE(out.weight == 8.0);  // |D*| = W, theta_{-T}xi([0,1)) = 1
  }

  WeightedSample uni;
  uni.measure = MeasureWindow(1, 8);
  uni.measure.density = Grid(1, 8, 2, 1.0);
  uni.marks = MarkField(1, 8);
  WeightedSample out = palm_inverse(uni, rng);
  REQUIRE(out.weight == Catch::Approx(1.0).margin(1e-12));  // |D*| = 1, unit box mass 1

  WeightedSample off;
  off.measure = MeasureWindow(1, 8);
  off.measure.atoms.push_back({Vec{0.5}, 1.0});
  off.marks = MarkField(1, 8);
  REQUIRE_THROWS_AS(palm_inverse(off, rng), OriginNotInSupport);
}

TEST_CASE("palm_inverse: drawn S agrees with the recomputed construction") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 60, 979);
  Rng rng(980);
  for (size_t i = 0; i < ens.size(); ++i) {
    Rng r = rng.derive(i);
    PalmRecord fwd = palm_forward(ens[i], r);
    InverseRecord inv = palm_inverse_record(fwd.sample, r);
    CellDecomposition dec = decompose(inv.sample.measure);
    REQUIRE(dec.shift_S == inv.S);
  }
}

TEST_CASE("density_palm / density_inverse") {
  WeightedSample s;
  s.measure = MeasureWindow(1, 8);
  s.measure.density = Grid(1, 8, 4, 3.0);
  s.marks = MarkField(1, 8);
  s.weight = 0.7;
  WeightedSample p = density_palm(s);
  REQUIRE(p.weight == Catch::Approx(0.7 * 3.0).margin(1e-15));

  // zero density at the origin leaves the ensemble, loudly
  WeightedSample z = s;
  z.measure.density->values[0] = 0.0;
  REQUIRE_THROWS_AS(density_palm(z), DegenerateWeight);

  // atoms are rejected
  WeightedSample withatom = s;
  withatom.measure.atoms.push_back({Vec{1.0}, 1.0});
  REQUIRE_THROWS_AS(density_palm(withatom), AtomicInput);

  // Z = 2: palm then inverse is bit-exact on the weight
  WeightedSample s2;
  s2.measure = MeasureWindow(1, 8);
  s2.measure.density = Grid(1, 8, 4, 2.0);
  s2.marks = MarkField(1, 8);
  s2.weight = 0.1234567891234;
  WeightedSample rt = density_inverse(density_palm(s2));
  REQUIRE(rt.weight == s2.weight);
  WeightedSample halved = density_inverse(s2);
  REQUIRE(halved.weight == s2.weight / 2.0);

  REQUIRE_THROWS_AS(density_inverse(z), NonpositiveDensity);
}

TEST_CASE("density_palm: ensemble mean weight matches the Campbell value") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::shot_noise_density;
  spec.dim = 1;
  spec.window = 8;
  spec.density_grid = 64;
  spec.intensity = 1.0;
  spec.base_level = 1.0;
  auto ens = generate_ensemble(spec, 3000, 41);
  double sum = 0, sum2 = 0;
  for (const auto& s : ens) {
    double w = density_palm(s).weight;
    sum += w;
    sum2 += w * w;
  }
  double mean = sum / ens.size();
  double se = std::sqrt((sum2 / ens.size() - mean * mean) / ens.size());
  // independent quadrature of the kernel integral
  double integral = 0.0;
  const int q = 200000;
  for (int i = 0; i < q; ++i) {
    double x = -1.0 + 2.0 * (i + 0.5) / q;
    integral += std::max(0.0, 1.0 - x * x) * (2.0 / q);
  }
  double expect = spec.base_level + spec.intensity * integral;
  REQUIRE(std::abs(mean - expect) < 3.0 * se + 1e-3);
}

TEST_CASE("density round-trip on shot noise stays within an ulp") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::shot_noise_density;
  spec.dim = 1;
  spec.window = 8;
  spec.density_grid = 32;
  auto ens = generate_ensemble(spec, 200, 42);
  for (const auto& s : ens) {
    WeightedSample rt = density_inverse(density_palm(s));
    REQUIRE(rt.weight == Catch::Approx(s.weight).epsilon(4e-16));
  }
}

TEST_CASE("palm_expectation: examples") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.dim = 1;
  spec.window = 8;
  auto ens = generate_ensemble(spec, 4000, 43);

  double one = palm_expectation([](const WeightedSample&) { return 1.0; }, ens,
                                Box::cube(1, 1.0));
  REQUIRE(std::abs(one - 1.0) < 0.1);

  // Palm version has an atom at the origin
  double sliv = palm_expectation(
      [](const WeightedSample& s) {
        return mass(s.measure, Box::centered_cube(1, 1e-9)) > 0.0 ? 1.0 : 0.0;
      },
      ens, Box::cube(1, 8.0));
  REQUIRE(sliv == Catch::Approx(1.0).margin(1e-12));

  // all-null ensemble: zero estimate, no lattice machinery involved
  std::vector<WeightedSample> zeros(3);
  for (auto& s : zeros) {
    s.measure = MeasureWindow(1, 8);
    s.marks = MarkField(1, 8);
  }
  REQUIRE(palm_expectation([](const WeightedSample&) { return 1.0; }, zeros,
                           Box::cube(1, 1.0)) == 0.0);

  REQUIRE_THROWS_AS(palm_expectation([](const WeightedSample&) { return 1.0; }, {},
                                     Box::cube(1, 1.0)),
                    EmptyEnsemble);
}
