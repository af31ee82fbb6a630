#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "palmsim/measure.hpp"

namespace palmsim {

enum class GeneratorKind {
  poisson,
  palm_poisson,
  mixed_poisson,
  shot_noise_density,
  binomial,
  negative_control
};

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::poisson: return "poisson";
    case GeneratorKind::palm_poisson: return "palm_poisson";
    case GeneratorKind::mixed_poisson: return "mixed_poisson";
    case GeneratorKind::shot_noise_density: return "shot_noise_density";
    case GeneratorKind::binomial: return "binomial";
    case GeneratorKind::negative_control: return "negative_control";
  }
  return "?";
}

inline GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "poisson") return GeneratorKind::poisson;
  if (s == "palm_poisson") return GeneratorKind::palm_poisson;
  if (s == "mixed_poisson") return GeneratorKind::mixed_poisson;
  if (s == "shot_noise_density") return GeneratorKind::shot_noise_density;
  if (s == "binomial") return GeneratorKind::binomial;
  if (s == "negative_control") return GeneratorKind::negative_control;
  throw ConfigError("unknown generator kind: " + s);
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::poisson;
  int dim = 1;
  int window = 8;
  int mark_grid = 2;     // resolution of the iid mark field
  int density_grid = 64; // resolution of density fields
  double intensity = 1.0;

  // shot noise: Z = base_level + sum of bump kernels of radius 1
  double base_level = 1.0;
  double bump_scale = 1.0;

  int64_t binomial_count = 8;
  double mixed_lo = 0.5, mixed_hi = 1.5;  // intensity factor range

  // negative controls: (a) Palm-Poisson plus a fixed extra atom at `offset`,
  // (b) linear intensity ramp along axis 1 plus an origin atom
  char control_variant = 'a';
  Vec control_offset;    // default (1, 0, ...)
  double ramp_slope = 1.0;

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("generator: dim out of range");
    if (window < 1) throw ConfigError("generator: window must be a positive integer");
    if (!(intensity > 0.0)) throw ConfigError("generator: intensity must be > 0");
    if (mark_grid < 1 || density_grid < 1) throw ConfigError("generator: grid must be >= 1");
    if (kind == GeneratorKind::shot_noise_density && !(base_level > 0.0))
      throw ConfigError("generator: base_level must be > 0");
    if (kind == GeneratorKind::binomial && binomial_count < 1)
      throw ConfigError("generator: binomial_count must be >= 1");
    if (kind == GeneratorKind::mixed_poisson && !(mixed_lo > 0.0 && mixed_hi >= mixed_lo))
      throw ConfigError("generator: mixed intensity range invalid");
    if (kind == GeneratorKind::negative_control && control_variant != 'a' &&
        control_variant != 'b')
      throw ConfigError("generator: control_variant must be 'a' or 'b'");
    if (kind == GeneratorKind::negative_control && ramp_slope <= -2.0)
      throw ConfigError("generator: ramp_slope must keep the intensity positive");
  }

  Vec offset_or_default() const {
    if (control_offset.dim == dim) return control_offset;
    Vec v(dim);
    v[0] = 1.0;
    return v;
  }
};

namespace detail {

/// Atoms are kept off exact cell and box boundaries: any coordinate that is
/// an exact multiple of 2^-40 gets nudged by 2^-40.
inline double nudge_coord(double x, double W) {
  const double scaled = std::ldexp(x, 40);
  if (scaled == std::floor(scaled)) x = wrap_coord(x + 0x1.0p-40, W);
  return x;
}

inline Vec nudged_uniform(int dim, double W, Rng& rng) {
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v[k] = nudge_coord(rng.uniform(0.0, W), W);
  return v;
}

inline MarkField iid_mark_field(int dim, int W, int G, Rng& rng) {
  MarkField x(dim, W);
  Grid g(dim, W, G);
  for (double& v : g.values) v = rng.normal();
  x.values = std::move(g);
  return x;
}

}  // namespace detail

struct GenerationStats {
  int64_t empty_redraws = 0;  // zero-atom draws rejected by the conditioning
};

/// Stationary Poisson process on the torus, conditioned on having at least
/// one atom (the empty draw is excluded and counted so the conditioning
/// probability is reported).
inline WeightedSample gen_poisson(const GeneratorSpec& spec, Rng& rng,
                                  GenerationStats* stats = nullptr) {
  const double mean = spec.intensity * std::pow(spec.window, spec.dim);
  WeightedSample s;
  s.measure = MeasureWindow(spec.dim, spec.window);
  int64_t count = rng.poisson(mean);
  while (count == 0) {
    if (stats) ++stats->empty_redraws;
    count = rng.poisson(mean);
  }
  for (int64_t i = 0; i < count; ++i)
    s.measure.atoms.push_back({detail::nudged_uniform(spec.dim, spec.window, rng), 1.0});
  s.marks = detail::iid_mark_field(spec.dim, spec.window, spec.mark_grid, rng);
  s.weight = 1.0;
  return s;
}

/// The Palm version of the Poisson process: the process plus a unit atom at
/// the origin.
inline WeightedSample gen_palm_poisson(const GeneratorSpec& spec, Rng& rng,
                                       GenerationStats* stats = nullptr) {
  const double mean = spec.intensity * std::pow(spec.window, spec.dim);
  WeightedSample s;
  s.measure = MeasureWindow(spec.dim, spec.window);
  int64_t count = rng.poisson(mean);
  for (int64_t i = 0; i < count; ++i)
    s.measure.atoms.push_back({detail::nudged_uniform(spec.dim, spec.window, rng), 1.0});
  s.measure.atoms.push_back({Vec(spec.dim), 1.0});
  s.marks = detail::iid_mark_field(spec.dim, spec.window, spec.mark_grid, rng);
  s.weight = 1.0;
  (void)stats;
  return s;
}

/// Mixed Poisson: the intensity factor is drawn uniformly per sample, which
/// is stationary but not ergodic.
inline WeightedSample gen_mixed_poisson(const GeneratorSpec& spec, Rng& rng,
                                        GenerationStats* stats = nullptr) {
  GeneratorSpec inner = spec;
  inner.intensity = spec.intensity * rng.uniform(spec.mixed_lo, spec.mixed_hi);
  return gen_poisson(inner, rng, stats);
}

/// Binomial process: a fixed number of iid uniform unit atoms.
inline WeightedSample gen_binomial(const GeneratorSpec& spec, Rng& rng,
                                   GenerationStats* = nullptr) {
  WeightedSample s;
  s.measure = MeasureWindow(spec.dim, spec.window);
  for (int64_t i = 0; i < spec.binomial_count; ++i)
    s.measure.atoms.push_back({detail::nudged_uniform(spec.dim, spec.window, rng), 1.0});
  s.marks = detail::iid_mark_field(spec.dim, spec.window, spec.mark_grid, rng);
  s.weight = 1.0;
  return s;
}

/// Compactly supported bump kernel of radius 1.
inline double bump_kernel(double dist2, double scale) {
  return dist2 < 1.0 ? scale * (1.0 - dist2) : 0.0;
}

/// The exact kernel integral over R^d (radius 1 fits inside the window).
inline double bump_kernel_integral(int dim, double scale) {
  switch (dim) {
    case 1: return scale * 4.0 / 3.0;
    case 2: return scale * M_PI / 2.0;
    case 3: return scale * 8.0 * M_PI / 15.0;
    default: break;
  }
  throw std::invalid_argument("bump_kernel_integral: dimension not tabulated");
}

/// Strictly positive shot-noise density field Z = c + sum_i k(s - x_i) over
/// Poisson centers, with xi = Z . lambda on the grid and the marks set to
/// the field itself so the pair (X, Z) is realized by one object.
inline WeightedSample gen_shot_noise_density(const GeneratorSpec& spec, Rng& rng,
                                             GenerationStats* = nullptr) {
  const double mean = spec.intensity * std::pow(spec.window, spec.dim);
  const int64_t count = rng.poisson(mean);
  std::vector<Vec> centers;
  centers.reserve(count);
  for (int64_t i = 0; i < count; ++i)
    centers.push_back(rng.uniform_vec(spec.dim, spec.window));

  Grid Z(spec.dim, spec.window, spec.density_grid, spec.base_level);
  const int64_t n = Z.cell_count();
  for (int64_t f = 0; f < n; ++f) {
    Vec c = Z.cell_center(Z.unflatten(f));
    double v = 0.0;
    for (const Vec& x : centers) {
      double d2 = 0.0;
      for (int k = 0; k < spec.dim; ++k) {
        double d = std::abs(c[k] - x[k]);
        d = std::min(d, spec.window - d);
        d2 += d * d;
      }
      v += bump_kernel(d2, spec.bump_scale);
    }
    Z.values[f] += v;
  }

  WeightedSample s;
  s.measure = MeasureWindow(spec.dim, spec.window);
  s.measure.density = Z;
  s.marks = MarkField(spec.dim, spec.window);
  s.marks.values = std::move(Z);
  s.weight = 1.0;
  return s;
}

/// Negative controls: both have the origin in their support but are not
/// mass-stationary.
inline WeightedSample gen_negative_control(const GeneratorSpec& spec, Rng& rng,
                                           GenerationStats* stats = nullptr) {
  WeightedSample s;
  if (spec.control_variant == 'a') {
    s = gen_palm_poisson(spec, rng, stats);
    s.measure.atoms.push_back({wrap(spec.offset_or_default(), spec.window), 1.0});
    return s;
  }
  // variant b: Poisson with density lambda(s) = intensity * (1 + slope*(s1/W - 1/2))
  const double W = spec.window;
  const double mean = spec.intensity * std::pow(W, spec.dim);
  const double peak = 1.0 + std::abs(spec.ramp_slope) / 2.0;
  s.measure = MeasureWindow(spec.dim, spec.window);
  const int64_t count = rng.poisson(mean);
  for (int64_t i = 0; i < count; ++i) {
    double x1;
    while (true) {  // rejection along axis 1
      x1 = rng.uniform(0.0, W);
      double f = 1.0 + spec.ramp_slope * (x1 / W - 0.5);
      if (rng.uniform01() * peak < f) break;
    }
    Vec p(spec.dim);
    p[0] = detail::nudge_coord(x1, W);
    for (int k = 1; k < spec.dim; ++k) p[k] = detail::nudge_coord(rng.uniform(0.0, W), W);
    s.measure.atoms.push_back({p, 1.0});
  }
  s.measure.atoms.push_back({Vec(spec.dim), 1.0});
  s.marks = detail::iid_mark_field(spec.dim, spec.window, spec.mark_grid, rng);
  s.weight = 1.0;
  return s;
}

inline WeightedSample generate_sample(const GeneratorSpec& spec, Rng& rng,
                                      GenerationStats* stats = nullptr) {
  switch (spec.kind) {
    case GeneratorKind::poisson: return gen_poisson(spec, rng, stats);
    case GeneratorKind::palm_poisson: return gen_palm_poisson(spec, rng, stats);
    case GeneratorKind::mixed_poisson: return gen_mixed_poisson(spec, rng, stats);
    case GeneratorKind::shot_noise_density: return gen_shot_noise_density(spec, rng, stats);
    case GeneratorKind::binomial: return gen_binomial(spec, rng, stats);
    case GeneratorKind::negative_control: return gen_negative_control(spec, rng, stats);
  }
  throw ConfigError("generate_sample: bad kind");
}

/// Ensemble generation with one derived stream per sample; deterministic in
/// (spec, seed) regardless of processing order.
inline std::vector<WeightedSample> generate_ensemble(const GeneratorSpec& spec,
                                                     size_t count, uint64_t seed,
                                                     GenerationStats* stats = nullptr) {
  spec.validate();
  Rng master(seed);
  std::vector<WeightedSample> out(count);
  for (size_t i = 0; i < count; ++i) {
    Rng r = master.derive(i);
    out[i] = generate_sample(spec, r, stats);
  }
  return out;
}

}  // namespace palmsim
