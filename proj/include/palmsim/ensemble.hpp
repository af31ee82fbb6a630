#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "palmsim/functionals.hpp"
#include "palmsim/generators.hpp"
#include "palmsim/palm.hpp"

namespace palmsim {

struct TransformStats {
  int64_t degenerate_weights = 0;  // zero-weight outcomes recorded, then dropped
};

/// Applies one named transform to every sample with per-sample derived
/// streams. Degenerate-weight outcomes of density_palm are counted and
/// removed rather than silently lost.
inline std::vector<WeightedSample> apply_transform(
    const std::vector<WeightedSample>& ensemble, const std::string& name,
    Rng rng, TransformStats* stats = nullptr) {
  std::vector<WeightedSample> out;
  out.reserve(ensemble.size());
  for (size_t i = 0; i < ensemble.size(); ++i) {
    Rng r = rng.derive(i);
    const WeightedSample& s = ensemble[i];
    if (name == "palm_forward") {
      out.push_back(palm_forward(s, r).sample);
    } else if (name == "palm_inverse") {
      out.push_back(palm_inverse(s, r));
    } else if (name == "density_palm") {
      try {
        out.push_back(density_palm(s));
      } catch (const DegenerateWeight&) {
        if (stats) ++stats->degenerate_weights;
      }
    } else if (name == "density_inverse") {
      out.push_back(density_inverse(s));
    } else if (name == "product_extend") {
      out.push_back(product_extend(s));
    } else {
      throw ConfigError("unknown transform: " + name);
    }
  }
  return out;
}

inline std::vector<WeightedSample> apply_chain(
    const std::vector<WeightedSample>& ensemble,
    const std::vector<std::string>& chain, Rng rng, TransformStats* stats = nullptr) {
  std::vector<WeightedSample> cur = ensemble;
  for (size_t t = 0; t < chain.size(); ++t)
    cur = apply_transform(cur, chain[t], rng.derive(7000 + t), stats);
  return cur;
}

// ---------------------------------------------------------------------------
// Summary CSV
// ---------------------------------------------------------------------------

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One row per sample: weight, atom count, total mass, then the functional
/// values. Byte-stable for fixed inputs.
inline void write_summary_csv(std::ostream& os,
                              const std::vector<WeightedSample>& ensemble,
                              const FunctionalSet& fs) {
  os << "index,weight,atom_count,total_mass";
  for (const auto& n : fs.names()) os << ',' << n;
  os << '\n';
  for (size_t i = 0; i < ensemble.size(); ++i) {
    const WeightedSample& s = ensemble[i];
    os << i << ',' << format_g17(s.weight) << ',' << s.measure.atoms.size() << ','
       << format_g17(s.measure.total_mass());
    for (double v : fs.eval(s)) os << ',' << format_g17(v);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Line-oriented ensemble serialization
// ---------------------------------------------------------------------------
//
// <path>        one record per sample: weight, atom list, marked points and
//               grid blob references
// <path>.grids  one grid per line: dim window resolution values...

namespace detail {

inline void write_grid_line(std::ostream& os, const Grid& g) {
  os << g.dim << ' ' << g.window << ' ' << g.resolution;
  for (double v : g.values) os << ' ' << format_g17(v);
  os << '\n';
}

inline Grid read_grid_line(const std::string& line) {
  std::istringstream is(line);
  Grid g;
  if (!(is >> g.dim >> g.window >> g.resolution))
    throw ConfigError("ensemble grids: malformed header triple");
  g.values.resize(g.cell_count());
  for (double& v : g.values)
    if (!(is >> v)) throw ConfigError("ensemble grids: truncated values");
  return g;
}

}  // namespace detail

inline void write_ensemble(const std::string& path,
                           const std::vector<WeightedSample>& ensemble) {
  std::ofstream rec(path);
  std::ofstream grids(path + ".grids");
  if (!rec || !grids) throw ConfigError("write_ensemble: cannot open " + path);
  int64_t grid_index = 0;
  if (ensemble.empty()) {
    rec << "palmsim-ensemble v1\ndim 0\nwindow 0\ncount 0\n";
    return;
  }
  rec << "palmsim-ensemble v1\n";
  rec << "dim " << ensemble.front().dim() << "\n";
  rec << "window " << ensemble.front().window() << "\n";
  rec << "count " << ensemble.size() << "\n";
  for (const WeightedSample& s : ensemble) {
    rec << "sample " << format_g17(s.weight);
    rec << ' ' << s.measure.atoms.size();
    for (const Atom& a : s.measure.atoms) {
      for (int k = 0; k < s.dim(); ++k) rec << ' ' << format_g17(a.pos[k]);
      rec << ' ' << format_g17(a.mass);
    }
    rec << ' ' << s.marks.marked_points.size();
    for (const Atom& a : s.marks.marked_points) {
      for (int k = 0; k < s.dim(); ++k) rec << ' ' << format_g17(a.pos[k]);
      rec << ' ' << format_g17(a.mass);
    }
    if (s.measure.density) {
      detail::write_grid_line(grids, *s.measure.density);
      rec << ' ' << grid_index++;
    } else {
      rec << " -1";
    }
    if (s.marks.values) {
      detail::write_grid_line(grids, *s.marks.values);
      rec << ' ' << grid_index++;
    } else {
      rec << " -1";
    }
    rec << '\n';
  }
}

inline std::vector<WeightedSample> read_ensemble(const std::string& path) {
  std::ifstream rec(path);
  if (!rec) throw ConfigError("read_ensemble: cannot open " + path);
  std::vector<std::string> grid_lines;
  {
    std::ifstream grids(path + ".grids");
    std::string line;
    while (grids && std::getline(grids, line))
      if (!line.empty()) grid_lines.push_back(line);
  }
  std::string magic, version;
  rec >> magic >> version;
  if (magic != "palmsim-ensemble" || version != "v1")
    throw ConfigError("read_ensemble: bad header in " + path);
  std::string key;
  int dim = 0, window = 0;
  size_t count = 0;
  rec >> key >> dim >> key >> window >> key >> count;
  std::vector<WeightedSample> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    std::string tag;
    if (!(rec >> tag) || tag != "sample")
      throw ConfigError("read_ensemble: expected sample record " + std::to_string(i));
    WeightedSample s;
    s.measure = MeasureWindow(dim, window);
    s.marks = MarkField(dim, window);
    size_t natoms = 0, npoints = 0;
    rec >> s.weight >> natoms;
    for (size_t a = 0; a < natoms; ++a) {
      Atom at;
      at.pos = Vec(dim);
      for (int k = 0; k < dim; ++k) rec >> at.pos[k];
      rec >> at.mass;
      s.measure.atoms.push_back(at);
    }
    rec >> npoints;
    for (size_t a = 0; a < npoints; ++a) {
      Atom at;
      at.pos = Vec(dim);
      for (int k = 0; k < dim; ++k) rec >> at.pos[k];
      rec >> at.mass;
      s.marks.marked_points.push_back(at);
    }
    int64_t dref = -1, mref = -1;
    rec >> dref >> mref;
    if (!rec) throw ConfigError("read_ensemble: truncated record " + std::to_string(i));
    if (dref >= 0) {
      if (dref >= static_cast<int64_t>(grid_lines.size()))
        throw ConfigError("read_ensemble: dangling density reference");
      s.measure.density = detail::read_grid_line(grid_lines[dref]);
    }
    if (mref >= 0) {
      if (mref >= static_cast<int64_t>(grid_lines.size()))
        throw ConfigError("read_ensemble: dangling marks reference");
      s.marks.values = detail::read_grid_line(grid_lines[mref]);
    }
    s.measure.check_invariants();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace palmsim
