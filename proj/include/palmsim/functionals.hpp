#pragma once

#include <functional>
#include <string>
#include <vector>

#include "palmsim/measure.hpp"

namespace palmsim {

/// Named bounded scalar functionals of a weighted sample. Tests evaluate
/// the whole set into one vector per sample; auxiliary-point coordinates are
/// appended by the test drivers where the statement calls for them.
struct Functional {
  std::string name;
  std::function<double(const WeightedSample&)> eval;
};

struct FunctionalSet {
  std::vector<Functional> items;

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& f : items) n.push_back(f.name);
    return n;
  }

  std::vector<double> eval(const WeightedSample& s) const {
    std::vector<double> v;
    v.reserve(items.size());
    for (const auto& f : items) v.push_back(f.eval(s));
    return v;
  }

  size_t size() const { return items.size(); }
};

/// Torus distance from the origin to the nearest atom at positive distance
/// (the re-rooted ensembles all carry an atom at the origin itself, which
/// would make the plain nearest distance identically zero). Bounded by the
/// window diameter; returns it when no such atom exists.
inline double nearest_other_atom_distance(const WeightedSample& s) {
  const double W = s.window();
  double best = W * std::sqrt(static_cast<double>(s.dim()));
  for (const Atom& a : s.measure.atoms) {
    double d2 = 0.0;
    for (int k = 0; k < s.dim(); ++k) {
      double d = std::min(a.pos[k], W - a.pos[k]);
      d2 += d * d;
    }
    double d = std::sqrt(d2);
    if (d > 1e-9 && d < best) best = d;
  }
  return best;
}

inline double mark_mean_unit_box(const WeightedSample& s) {
  if (!s.marks.values) return 0.0;
  const Grid& g = *s.marks.values;
  double sum = 0.0;
  int64_t count = 0;
  // cells of [0,1)^d
  int64_t per_axis = g.resolution;
  int64_t total = 1;
  for (int k = 0; k < g.dim; ++k) total *= per_axis;
  for (int64_t f = 0; f < total; ++f) {
    IVec idx(g.dim);
    int64_t t = f;
    for (int k = g.dim - 1; k >= 0; --k) {
      idx[k] = t % per_axis;
      t /= per_axis;
    }
    sum += g.at(idx);
    ++count;
  }
  return count ? sum / count : 0.0;
}

/// Default test battery: box masses at three scales, the nearest-atom
/// distance, the density value at the origin and the mark mean near the
/// origin.
inline FunctionalSet default_functional_set(int dim, int window) {
  FunctionalSet fs;
  for (int a : {1, 2, 4}) {
    if (a > window) continue;
    fs.items.push_back({"mass_box_" + std::to_string(a),
                        [a, dim](const WeightedSample& s) {
                          return mass(s.measure, Box::cube(dim, a));
                        }});
  }
  fs.items.push_back({"nearest_atom", nearest_other_atom_distance});
  fs.items.push_back({"density_at_origin", [](const WeightedSample& s) {
                        return s.measure.density
                                   ? s.measure.density->value_at(Vec(s.dim()))
                                   : 0.0;
                      }});
  fs.items.push_back({"mark_mean", mark_mean_unit_box});
  return fs;
}

}  // namespace palmsim
