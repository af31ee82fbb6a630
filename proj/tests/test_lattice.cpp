#include <catch2/catch_amalgamated.hpp>

#include "palmsim/generators.hpp"
#include "palmsim/lattice.hpp"

using namespace palmsim;

namespace {

std::vector<int64_t> sites_1d(const std::vector<IVec>& v) {
  std::vector<int64_t> out;
  for (const IVec& s : v) out.push_back(s[0]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("build_lattice_points: examples") {
  MeasureWindow m(2, 4);
  m.atoms.push_back({Vec{0.5, 0.5}, 1.0});
  auto pts = build_lattice_points(m);
  REQUIRE(pts.size() == 1);
  REQUIRE(pts[0] == IVec{0, 0});

  MeasureWindow dens(2, 4);
  dens.density = Grid(2, 4, 2, 1.0);
  REQUIRE(build_lattice_points(dens).size() == 16);

  MeasureWindow two(1, 8);
  two.atoms.push_back({Vec{0.5}, 1.0});
  two.atoms.push_back({Vec{3.2}, 1.0});
  auto pts2 = build_lattice_points(two);
  REQUIRE(sites_1d(pts2) == std::vector<int64_t>{0, 3});

  MeasureWindow empty(1, 8);
  REQUIRE_THROWS_AS(build_lattice_points(empty), EmptyMeasure);
}

TEST_CASE("voronoi_assign: examples and tie-break") {
  // N = {0,3}, W = 8: cell(0) = {6,7,0,1}, cell(3) = {2,3,4,5}
  Assignment a = voronoi_assign({IVec{0}, IVec{3}}, 8, 1);
  std::vector<int64_t> cell0, cell3;
  for (int64_t s = 0; s < 8; ++s) {
    (a.owner_of(IVec{s}) == IVec{0} ? cell0 : cell3).push_back(s);
  }
  REQUIRE(cell0 == std::vector<int64_t>{0, 1, 6, 7});
  REQUIRE(cell3 == std::vector<int64_t>{2, 3, 4, 5});

  // N = {0,2}, W = 4: site 1 is equidistant, lexicographic winner is 0
  Assignment t = voronoi_assign({IVec{0}, IVec{2}}, 4, 1);
  REQUIRE(t.owner_of(IVec{1}) == IVec{0});
  std::vector<int64_t> c0;
  for (int64_t s = 0; s < 4; ++s)
    if (t.owner_of(IVec{s}) == IVec{0}) c0.push_back(s);
  REQUIRE(c0 == std::vector<int64_t>{0, 1, 3});

  // every site owns itself when all sites are points
  std::vector<IVec> all;
  for (int64_t s = 0; s < 4; ++s) all.push_back(IVec{s});
  Assignment self = voronoi_assign(all, 4, 1);
  for (int64_t s = 0; s < 4; ++s) REQUIRE(self.owner_of(IVec{s}) == IVec{s});

  REQUIRE_THROWS_AS(voronoi_assign({}, 4, 1), EmptyMeasure);
}

TEST_CASE("cell_at_origin: examples") {
  CellDecomposition dec = cell_at_origin(voronoi_assign({IVec{0}, IVec{3}}, 8, 1));
  REQUIRE(sites_1d(dec.cell_D) == std::vector<int64_t>{0, 1, 6, 7});
  REQUIRE(dec.shift_S == IVec{0});
  REQUIRE(sites_1d(dec.cell_D_star) == sites_1d(dec.cell_D));

  // owner of the origin one step to the left: S = 1 and D* = S + D
  CellDecomposition dec2 = cell_at_origin(voronoi_assign({IVec{7}, IVec{2}}, 8, 1));
  REQUIRE(dec2.owner0 == IVec{7});
  REQUIRE(dec2.shift_S == IVec{1});
  auto dstar = sites_1d(dec2.cell_D_star);
  for (const IVec& i : dec2.cell_D)
    REQUIRE(std::find(dstar.begin(), dstar.end(), mod_floor(i[0] + 1, 8)) != dstar.end());
  REQUIRE(dec2.in_D_star(dec2.shift_S));

  // all sites occupied: D = {0}, S = 0, D* = {0}
  std::vector<IVec> all;
  for (int64_t s = 0; s < 4; ++s) all.push_back(IVec{s});
  CellDecomposition dec3 = cell_at_origin(voronoi_assign(all, 4, 1));
  REQUIRE(dec3.cell_D.size() == 1);
  REQUIRE(dec3.shift_S == IVec{0});
  REQUIRE(sites_1d(dec3.cell_D_star) == std::vector<int64_t>{0});
}

TEST_CASE("decomposition invariants on random measures") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.window = 8;
  for (int d : {1, 2}) {
    spec.dim = d;
    auto ens = generate_ensemble(spec, 30, 555 + d);
    for (const auto& s : ens) {
      CellDecomposition dec = decompose(s.measure);
      const int64_t n = site_count(d, 8);
      // total map onto N, each point owns itself
      for (int64_t f = 0; f < n; ++f) {
        IVec site = site_unflatten(f, d, 8);
        IVec owner = dec.assignment.owner_of(site);
        REQUIRE(mass(s.measure, site_box(owner)) > 0.0);
        REQUIRE(dec.assignment.owner_of(owner) == owner);
      }
      // 0 in D, S in D*, |D| = |D*| >= 1
      bool zero_in_D = false;
      for (const IVec& i : dec.cell_D)
        if (i == IVec(d)) zero_in_D = true;
      REQUIRE(zero_in_D);
      REQUIRE(dec.in_D_star(dec.shift_S));
      REQUIRE(dec.cell_D.size() == dec.cell_D_star.size());
      REQUIRE(dec.cell_D.size() >= 1);
    }
  }
}

TEST_CASE("shift covariance: canonical chart is exact, window chart is not") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::poisson;
  spec.window = 8;
  spec.dim = 1;
  auto ens = generate_ensemble(spec, 40, 2222);

  auto translated_matches = [](const MeasureWindow& m, TieChart chart) {
    CellDecomposition base = decompose(m, chart);
    for (int64_t j : {1, 3, 5}) {
      MeasureWindow shifted_m = shift(m, IVec{j}.to_vec());
      CellDecomposition sh = decompose(shifted_m, chart);
      const int64_t n = site_count(m.dim, m.window);
      for (int64_t f = 0; f < n; ++f) {
        IVec site = site_unflatten(f, m.dim, m.window);
        IVec expect = wrap(base.assignment.owner_of(wrap(site + IVec{j}, m.window)) - IVec{j},
                           m.window);
        if (!(sh.assignment.owner_of(site) == expect)) return false;
      }
    }
    return true;
  };

  int canonical_ok = 0, asgiven_ok = 0;
  for (const auto& s : ens) {
    if (translated_matches(s.measure, TieChart::Canonical)) ++canonical_ok;
    if (translated_matches(s.measure, TieChart::AsGiven)) ++asgiven_ok;
  }
  REQUIRE(canonical_ok == 40);
  // the window-chart tie rule is the documented behaviour of voronoi_assign
  // but cannot be covariant across the wrap; Poisson(1) on W=8 produces tie
  // configurations often enough that some realizations must break it
  REQUIRE(asgiven_ok < 40);
}

TEST_CASE("decompose matches plain assignment away from ties") {
  MeasureWindow two(1, 8);
  two.atoms.push_back({Vec{0.5}, 1.0});
  two.atoms.push_back({Vec{3.2}, 1.0});
  CellDecomposition canon = decompose(two, TieChart::Canonical);
  CellDecomposition given = decompose(two, TieChart::AsGiven);
  REQUIRE(canon.assignment.owner == given.assignment.owner);
  REQUIRE(sites_1d(canon.cell_D) == std::vector<int64_t>{0, 1, 6, 7});
}
