#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "palmsim/generators.hpp"

namespace palmsim {

/// Flat key-value config with [section] headers. Keys are stored as
/// "section.key"; parse errors cite the line, validation errors the field.
inline std::map<std::string, std::string> parse_config_text(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      size_t a = s.find_first_not_of(" \t");
      size_t z = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, z - a + 1);
    };
    trim(key);
    trim(val);
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

namespace detail {

inline double parse_double_field(const std::string& field, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("field " + field + ": expected a number, got '" + v + "'");
  }
}

inline int64_t parse_int_field(const std::string& field, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("field " + field + ": expected an integer, got '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

/// Everything one experiment run needs; the manifest echo of this struct
/// suffices to re-run it exactly.
struct ExperimentConfig {
  GeneratorSpec gen;
  std::vector<std::string> chain;          // transform chain, applied in order
  std::string test = "none";               // mass_stat | shift_line | shift_example1 | roundtrip | none
  std::vector<int> n_list = {1, 2};
  std::vector<double> r_grid = {0.5, 1.0, 2.0};
  double level = 0.05;
  int n_perm = 999;
  int tile = 1;
  int subdiv = 4;
  bool extend = false;
  size_t n_samples = 1000;
  uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";

  void validate() const {
    gen.validate();
    if (n_samples < 2) throw ConfigError("field run.n_samples: must be >= 2");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("field test.level: must be in (0,1)");
    if (n_perm < 19) throw ConfigError("field test.n_perm: must be >= 19");
    if (tile < 1 || gen.window % tile != 0)
      throw ConfigError("field test.tile: must divide the window side");
    for (int n : n_list)
      if (n < 1 || gen.window % n != 0)
        throw ConfigError("field test.n_list: entries must divide the window side");
    static const std::vector<std::string> tests = {"mass_stat", "shift_line",
                                                   "shift_example1", "roundtrip", "none"};
    bool ok = false;
    for (const auto& t : tests) ok = ok || t == test;
    if (!ok) throw ConfigError("field test.which: unknown test '" + test + "'");
    for (const std::string& t : chain) {
      static const std::vector<std::string> xs = {"palm_forward", "palm_inverse",
                                                  "density_palm", "density_inverse",
                                                  "product_extend"};
      bool found = false;
      for (const auto& x : xs) found = found || x == t;
      if (!found) throw ConfigError("field transform.chain: unknown transform '" + t + "'");
    }
    // type compatibility: density transforms need a density generator
    const bool has_density = gen.kind == GeneratorKind::shot_noise_density;
    for (const std::string& t : chain)
      if ((t == "density_palm" || t == "density_inverse") && !has_density)
        throw ConfigError("field transform.chain: " + t + " requires a density generator");
  }

  static ExperimentConfig from_kv(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    for (const auto& [key, val] : kv) {
      if (key == "generator.kind") c.gen.kind = generator_kind_from_string(val);
      else if (key == "generator.dim") c.gen.dim = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "generator.window") c.gen.window = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "generator.intensity") c.gen.intensity = detail::parse_double_field(key, val);
      else if (key == "generator.mark_grid") c.gen.mark_grid = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "generator.density_grid") c.gen.density_grid = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "generator.base_level") c.gen.base_level = detail::parse_double_field(key, val);
      else if (key == "generator.bump_scale") c.gen.bump_scale = detail::parse_double_field(key, val);
      else if (key == "generator.binomial_count") c.gen.binomial_count = detail::parse_int_field(key, val);
      else if (key == "generator.mixed_lo") c.gen.mixed_lo = detail::parse_double_field(key, val);
      else if (key == "generator.mixed_hi") c.gen.mixed_hi = detail::parse_double_field(key, val);
      else if (key == "generator.control_variant") {
        if (val != "a" && val != "b") throw ConfigError("field generator.control_variant: must be a or b");
        c.gen.control_variant = val[0];
      } else if (key == "generator.control_offset") {
        auto parts = detail::split_list(val);
        Vec v(static_cast<int>(parts.size()));
        for (size_t k = 0; k < parts.size(); ++k) v[static_cast<int>(k)] = detail::parse_double_field(key, parts[k]);
        c.gen.control_offset = v;
      } else if (key == "generator.ramp_slope") c.gen.ramp_slope = detail::parse_double_field(key, val);
      else if (key == "transform.chain") c.chain = detail::split_list(val);
      else if (key == "test.which") c.test = val;
      else if (key == "test.n_list") {
        c.n_list.clear();
        for (const auto& p : detail::split_list(val))
          c.n_list.push_back(static_cast<int>(detail::parse_int_field(key, p)));
      } else if (key == "test.r_grid") {
        c.r_grid.clear();
        for (const auto& p : detail::split_list(val))
          c.r_grid.push_back(detail::parse_double_field(key, p));
      } else if (key == "test.level") c.level = detail::parse_double_field(key, val);
      else if (key == "test.n_perm") c.n_perm = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "test.tile") c.tile = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "test.subdiv") c.subdiv = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "test.extend") c.extend = (val == "1" || val == "true");
      else if (key == "run.n_samples") c.n_samples = static_cast<size_t>(detail::parse_int_field(key, val));
      else if (key == "run.seed") c.seed = static_cast<uint64_t>(detail::parse_int_field(key, val));
      else if (key == "run.threads") c.threads = static_cast<int>(detail::parse_int_field(key, val));
      else if (key == "run.out") c.out_dir = val;
      else throw ConfigError("unknown config field: " + key);
    }
    return c;
  }

  /// Config echo in the same format the parser accepts.
  void write(std::ostream& os) const {
    os << "[generator]\n";
    os << "kind = " << to_string(gen.kind) << "\n";
    os << "dim = " << gen.dim << "\n";
    os << "window = " << gen.window << "\n";
    os << "intensity = " << gen.intensity << "\n";
    os << "mark_grid = " << gen.mark_grid << "\n";
    os << "density_grid = " << gen.density_grid << "\n";
    os << "base_level = " << gen.base_level << "\n";
    os << "bump_scale = " << gen.bump_scale << "\n";
    os << "binomial_count = " << gen.binomial_count << "\n";
    os << "mixed_lo = " << gen.mixed_lo << "\n";
    os << "mixed_hi = " << gen.mixed_hi << "\n";
    os << "control_variant = " << gen.control_variant << "\n";
    os << "ramp_slope = " << gen.ramp_slope << "\n";
    os << "[transform]\n";
    os << "chain = ";
    for (size_t i = 0; i < chain.size(); ++i) os << (i ? "," : "") << chain[i];
    os << "\n";
    os << "[test]\n";
    os << "which = " << test << "\n";
    os << "n_list = ";
    for (size_t i = 0; i < n_list.size(); ++i) os << (i ? "," : "") << n_list[i];
    os << "\n";
    os << "r_grid = ";
    for (size_t i = 0; i < r_grid.size(); ++i) os << (i ? "," : "") << r_grid[i];
    os << "\n";
    os << "level = " << level << "\n";
    os << "n_perm = " << n_perm << "\n";
    os << "tile = " << tile << "\n";
    os << "subdiv = " << subdiv << "\n";
    os << "extend = " << (extend ? 1 : 0) << "\n";
    os << "[run]\n";
    os << "n_samples = " << n_samples << "\n";
    os << "seed = " << seed << "\n";
    os << "threads = " << threads << "\n";
    os << "out = " << out_dir << "\n";
  }
};

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  auto kv = parse_config_text(is);
  return ExperimentConfig::from_kv(kv);
}

}  // namespace palmsim
