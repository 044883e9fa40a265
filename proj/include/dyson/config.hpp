#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dyson/grid.hpp"
#include "dyson/io.hpp"
#include "dyson/kernel.hpp"
#include "dyson/marchenko_pastur.hpp"
#include "dyson/measure.hpp"
#include "dyson/semicircle.hpp"

namespace dyson {
namespace config {

// Schema layer for run configurations. Every parser rejects unknown keys,
// validates types with path-anchored messages, and malformed JSON reports
// file:line:column. ConfigError maps to process exit code 2.

inline constexpr const char* kSchema = "dyson-lab/1";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    size_t line = 1, col = 1;
    const size_t stop = (e.byte == 0) ? 0 : std::min(text.size(), static_cast<size_t>(e.byte) - 1);
    for (size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + e.what());
  }
}

inline void check_keys(const nlohmann::json& obj, const std::string& where,
                       const std::vector<std::string>& allowed,
                       const std::vector<std::string>& required = {}) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
  }
  for (const std::string& k : required) {
    if (!obj.contains(k)) throw ConfigError(where + ": missing required key \"" + k + "\"");
  }
}

inline void check_schema(const nlohmann::json& root) {
  if (!root.is_object() || !root.contains("schema")) {
    throw ConfigError("config: missing \"schema\" field (expected \"" + std::string(kSchema) + "\")");
  }
  if (!root.at("schema").is_string() || root.at("schema").get<std::string>() != kSchema) {
    throw ConfigError("config: unsupported schema (expected \"" + std::string(kSchema) + "\")");
  }
}

inline double get_num(const nlohmann::json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline double get_num_or(const nlohmann::json& j, const std::string& where, const std::string& key,
                         double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline long long get_int(const nlohmann::json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return j.at(key).get<long long>();
}

inline long long get_int_or(const nlohmann::json& j, const std::string& where,
                            const std::string& key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return j.at(key).get<long long>();
}

inline std::string get_str_or(const nlohmann::json& j, const std::string& where,
                              const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

inline bool get_bool_or(const nlohmann::json& j, const std::string& where, const std::string& key,
                        bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return j.at(key).get<bool>();
}

inline std::vector<double> get_num_array(const nlohmann::json& j, const std::string& where,
                                         const std::string& key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<std::string> get_str_array(const nlohmann::json& j, const std::string& where,
                                              const std::string& key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small spec-string helpers: "name:a,b,c" forms used for seeds and drifts.

inline std::vector<double> split_doubles(const std::string& s, const std::string& where) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = s.find(',', pos);
    const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw ConfigError(where + ": empty number in \"" + s + "\"");
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad number \"" + tok + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::pair<std::string, std::vector<double>> split_spec(const std::string& s,
                                                              const std::string& where) {
  const size_t colon = s.find(':');
  if (colon == std::string::npos) return {s, {}};
  return {s.substr(0, colon), split_doubles(s.substr(colon + 1), where)};
}

inline void need_args(const std::vector<double>& a, size_t lo, size_t hi,
                      const std::string& where, const std::string& what) {
  if (a.size() < lo || a.size() > hi) {
    throw ConfigError(where + ": " + what + " takes " + std::to_string(lo) +
                      (hi > lo ? ".." + std::to_string(hi) : "") + " argument(s)");
  }
}

// ---------------------------------------------------------------------------
// Grid

inline Grid parse_grid(const nlohmann::json& j, const std::string& where = "grid") {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  if (j.contains("n")) {
    check_keys(j, where, {"x0", "h", "n"}, {"x0", "h", "n"});
    const long long n = get_int(j, where, "n");
    if (n < 2) throw ConfigError(where + ".n: need at least 2 nodes");
    return Grid{get_num(j, where, "x0"), get_num(j, where, "h"), static_cast<int>(n)};
  }
  check_keys(j, where, {"a", "b", "h"}, {"a", "b", "h"});
  const double a = get_num(j, where, "a");
  const double b = get_num(j, where, "b");
  const double h = get_num(j, where, "h");
  if (!(h > 0.0) || !(b > a)) throw ConfigError(where + ": need b > a and h > 0");
  return make_grid(a, b, h);
}

// ---------------------------------------------------------------------------
// Kernel specs: named built-ins or a table-sampled f on a declared box.

struct KernelTable {
  std::vector<double> xs, ys;   // sorted axes of the lattice
  std::vector<double> f;        // row-major, f[ix * ys.size() + iy]

  double eval(double x, double y) const {
    x = std::clamp(x, xs.front(), xs.back());
    y = std::clamp(y, ys.front(), ys.back());
    const size_t ix = cell(xs, x);
    const size_t iy = cell(ys, y);
    const double tx = (x - xs[ix]) / (xs[ix + 1] - xs[ix]);
    const double ty = (y - ys[iy]) / (ys[iy + 1] - ys[iy]);
    const size_t ny = ys.size();
    const double f00 = f[ix * ny + iy];
    const double f01 = f[ix * ny + iy + 1];
    const double f10 = f[(ix + 1) * ny + iy];
    const double f11 = f[(ix + 1) * ny + iy + 1];
    return (1 - tx) * ((1 - ty) * f00 + ty * f01) + tx * ((1 - ty) * f10 + ty * f11);
  }

 private:
  static size_t cell(const std::vector<double>& axis, double v) {
    size_t k = static_cast<size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
    if (k == 0) return 0;
    if (k >= axis.size()) return axis.size() - 2;
    return k - 1;
  }
};

// Long-format CSV "x,y,f" whose (x, y) pairs fill a full lattice.
inline KernelTable parse_kernel_table_csv(const std::string& text, const std::string& origin) {
  std::vector<double> xs, ys, fs;
  size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (lineno == 1) {
      if (line != "x,y,f") throw ConfigError(origin + ":1: expected header x,y,f");
      continue;
    }
    if (line.empty()) continue;
    const std::vector<double> row = split_doubles(line, origin + ":" + std::to_string(lineno));
    if (row.size() != 3) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 3 columns");
    }
    xs.push_back(row[0]);
    ys.push_back(row[1]);
    fs.push_back(row[2]);
  }
  if (fs.empty()) throw ConfigError(origin + ": empty kernel table");

  KernelTable t;
  t.xs = xs;
  t.ys = ys;
  std::sort(t.xs.begin(), t.xs.end());
  std::sort(t.ys.begin(), t.ys.end());
  t.xs.erase(std::unique(t.xs.begin(), t.xs.end()), t.xs.end());
  t.ys.erase(std::unique(t.ys.begin(), t.ys.end()), t.ys.end());
  if (t.xs.size() < 2 || t.ys.size() < 2) {
    throw ConfigError(origin + ": table needs at least a 2x2 lattice");
  }
  if (t.xs.size() * t.ys.size() != fs.size()) {
    throw ConfigError(origin + ": rows do not fill the x-y lattice");
  }
  t.f.assign(fs.size(), std::numeric_limits<double>::quiet_NaN());
  auto index_of = [](const std::vector<double>& axis, double v) {
    return static_cast<size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (size_t r = 0; r < fs.size(); ++r) {
    t.f[index_of(t.xs, xs[r]) * t.ys.size() + index_of(t.ys, ys[r])] = fs[r];
  }
  for (double v : t.f) {
    if (std::isnan(v)) throw ConfigError(origin + ": lattice has duplicate or missing points");
  }
  return t;
}

inline InteractionKernel make_table_kernel(KernelTable table, const std::string& label) {
  auto shared = std::make_shared<KernelTable>(std::move(table));
  InteractionKernel k;
  k.name = label;
  k.is_dyson = false;
  k.x_only = false;
  k.f = [shared](double x, double y) { return shared->eval(x, y); };
  return k;
}

// Named forms: "dyson", "gaussian", "quadratic(eps)", "wishart(eta)" or
// "wishart" with eta supplied separately; objects: {"table": "f.csv"}.
inline InteractionKernel parse_kernel(const nlohmann::json& spec, double eta,
                                      const std::filesystem::path& base_dir,
                                      const std::string& where = "kernel") {
  if (spec.is_object()) {
    check_keys(spec, where, {"table"}, {"table"});
    const std::string rel = spec.at("table").get<std::string>();
    const std::filesystem::path p = base_dir / rel;
    return make_table_kernel(parse_kernel_table_csv(io::read_file(p), rel), "table:" + rel);
  }
  if (!spec.is_string()) throw ConfigError(where + ": expected a string or {\"table\": ...}");
  std::string s = spec.get<std::string>();
  std::vector<double> args;
  const size_t open = s.find('(');
  if (open != std::string::npos) {
    if (s.back() != ')') throw ConfigError(where + ": unbalanced parentheses in \"" + s + "\"");
    args = split_doubles(s.substr(open + 1, s.size() - open - 2), where);
    s = s.substr(0, open);
  }
  if (s == "dyson") {
    need_args(args, 0, 0, where, "dyson");
    return kernels::dyson();
  }
  if (s == "gaussian") {
    need_args(args, 0, 0, where, "gaussian");
    return kernels::gaussian();
  }
  if (s == "quadratic") {
    need_args(args, 1, 1, where, "quadratic(eps)");
    return kernels::quadratic(args[0]);
  }
  if (s == "wishart") {
    double e = args.empty() ? eta : args[0];
    if (!(e >= 1.0)) {
      throw ConfigError(where + ": wishart needs eta >= 1 (give wishart(eta) or set eta)");
    }
    return kernels::wishart(e);
  }
  throw ConfigError(where + ": unknown kernel \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Drift specs

inline DriftSpec parse_drift(const std::string& s, const std::string& where = "drift") {
  const auto [name, args] = split_spec(s, where);
  if (name == "none") {
    need_args(args, 0, 0, where, "none");
    return DriftSpec::none();
  }
  if (name == "affine") {
    need_args(args, 2, 2, where, "affine:c0,c1");
    const double c0 = args[0], c1 = args[1];
    return DriftSpec::lipschitz([c0, c1](double x) { return c0 + c1 * x; }, std::abs(c1));
  }
  if (name == "sign") {
    need_args(args, 0, 0, where, "sign");
    return DriftSpec::singular_monotone([](double x) { return x <= 0.0 ? -1.0 : 1.0; },
                                        [](double x) { return x < 0.0 ? -1.0 : 1.0; }, 0.0);
  }
  if (name == "sign_smooth") {
    need_args(args, 1, 1, where, "sign_smooth:eta");
    const double eta = args[0];
    if (!(eta > 0.0)) throw ConfigError(where + ": sign_smooth needs eta > 0");
    return DriftSpec::lipschitz(
        [eta](double x) { return std::clamp(x / eta, -1.0, 1.0); }, 1.0 / eta);
  }
  throw ConfigError(where + ": unknown drift \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Initial data specs

namespace detail {

inline double mp_quantile(const MarchenkoPastur& mp, double p) {
  auto [lo, hi] = mp.edges();
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mp.cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline GridDensity sample_fn(const Grid& g, const std::function<double(double)>& f) {
  std::vector<double> v(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) v[static_cast<size_t>(i)] = std::max(0.0, f(g.x(i)));
  return GridDensity(g, std::move(v), false);
}

}  // namespace detail

// Density seeds: semicircle:R[,center]; uniform:a,b; mp:eta;
// triangle:center,halfwidth[,mass]; bimodal:c1,c2,halfwidth; gaussian:mu,sd.
inline GridDensity make_density_seed(const std::string& spec, const Grid& g,
                                     const std::string& where = "init") {
  const auto [name, a] = split_spec(spec, where);
  if (name == "semicircle") {
    need_args(a, 1, 2, where, "semicircle:R[,center]");
    return sample_semicircle(g, a[0], a.size() > 1 ? a[1] : 0.0);
  }
  if (name == "uniform") {
    need_args(a, 2, 2, where, "uniform:a,b");
    const double lo = a[0], hi = a[1];
    if (!(hi > lo)) throw ConfigError(where + ": uniform needs b > a");
    return detail::sample_fn(
        g, [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 / (hi - lo) : 0.0; });
  }
  if (name == "mp") {
    need_args(a, 1, 1, where, "mp:eta");
    return MarchenkoPastur(a[0]).sample(g);
  }
  if (name == "triangle") {
    need_args(a, 2, 3, where, "triangle:center,halfwidth[,mass]");
    const double c = a[0], w = a[1], mass = a.size() > 2 ? a[2] : 1.0;
    if (!(w > 0.0)) throw ConfigError(where + ": triangle needs halfwidth > 0");
    return detail::sample_fn(g, [c, w, mass](double x) {
      return (mass / w) * std::max(0.0, 1.0 - std::abs(x - c) / w);
    });
  }
  if (name == "bimodal") {
    need_args(a, 3, 3, where, "bimodal:c1,c2,halfwidth");
    const double c1 = a[0], c2 = a[1], w = a[2];
    if (!(w > 0.0)) throw ConfigError(where + ": bimodal needs halfwidth > 0");
    return detail::sample_fn(g, [c1, c2, w](double x) {
      return (0.5 / w) * (std::max(0.0, 1.0 - std::abs(x - c1) / w) +
                          std::max(0.0, 1.0 - std::abs(x - c2) / w));
    });
  }
  if (name == "gaussian") {
    need_args(a, 2, 2, where, "gaussian:mu,sd");
    const double mu = a[0], sd = a[1];
    if (!(sd > 0.0)) throw ConfigError(where + ": gaussian needs sd > 0");
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    return detail::sample_fn(g, [mu, sd, norm](double x) {
      const double z = (x - mu) / sd;
      return norm * std::exp(-0.5 * z * z);
    });
  }
  throw ConfigError(where + ": unknown density seed \"" + spec + "\"");
}

// Particle seeds: quantile ladders of the same families plus atom:a.
inline std::vector<double> make_particle_seed(const std::string& spec, int n,
                                              const std::string& where = "init") {
  if (n < 1) throw ConfigError(where + ": need n >= 1 particles");
  const auto [name, a] = split_spec(spec, where);
  std::vector<double> x(static_cast<size_t>(n));
  auto fill_quantiles = [&](const std::function<double(double)>& q) {
    for (int i = 0; i < n; ++i) {
      x[static_cast<size_t>(i)] = q((i + 0.5) / static_cast<double>(n));
    }
  };
  if (name == "semicircle") {
    need_args(a, 1, 2, where, "semicircle:R[,center]");
    const Semicircle sc(a[0]);
    const double c = a.size() > 1 ? a[1] : 0.0;
    fill_quantiles([&](double p) { return c + sc.quantile(p); });
    return x;
  }
  if (name == "uniform") {
    need_args(a, 2, 2, where, "uniform:a,b");
    fill_quantiles([&](double p) { return a[0] + (a[1] - a[0]) * p; });
    return x;
  }
  if (name == "mp") {
    need_args(a, 1, 1, where, "mp:eta");
    const MarchenkoPastur mp(a[0]);
    fill_quantiles([&](double p) { return detail::mp_quantile(mp, p); });
    return x;
  }
  if (name == "atom") {
    need_args(a, 1, 1, where, "atom:a");
    // A near-coincident ladder: coincident starts make the pairwise drift
    // singular at the very first step, so spread by a negligible offset.
    const double eps = 1e-8 * std::max(1.0, std::abs(a[0]));
    for (int i = 0; i < n; ++i) {
      x[static_cast<size_t>(i)] = a[0] + eps * (i - 0.5 * (n - 1));
    }
    return x;
  }
  throw ConfigError(where + ": unknown particle seed \"" + spec + "\"");
}

}  // namespace config
}  // namespace dyson
