#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dyson/flow_record.hpp"
#include "dyson/grid.hpp"
#include "dyson/measure.hpp"
#include "dyson/particle.hpp"

namespace dyson {
namespace io {

// On-disk layout
//
//   <run>/snapshot_0000.csv      header "x,value", one row per node
//   <run>/snapshot_0000.json     sidecar {x0, h, n, kind, mass, time}
//   <run>/manifest.json          grid, times, health counters, file hashes
//   <run>/trajectory.jsonl       {"t":..., "positions":[...], "spike": l|null}
//
// All numbers print with %.17g so round-trips are exact and reruns with the
// same config and seed produce byte-identical files.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(std::string_view s) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s)));
  return std::string(buf);
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + p.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Snapshot CSV + sidecar

inline std::string snapshot_csv(const Grid& g, const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != g.n) {
    throw std::invalid_argument("snapshot_csv: size mismatch");
  }
  std::string out = "x,value\n";
  for (int i = 0; i < g.n; ++i) {
    out += format_double(g.x(i));
    out += ',';
    out += format_double(values[static_cast<size_t>(i)]);
    out += '\n';
  }
  return out;
}

inline double snapshot_mass(const Grid& g, const std::string& kind,
                            const std::vector<double>& values) {
  if (kind == "cdf") return values.back() - values.front();
  double s = 0.0;
  for (double v : values) s += v;
  return s * g.h;
}

inline nlohmann::json snapshot_sidecar(const Grid& g, const std::string& kind,
                                       const std::vector<double>& values, double time) {
  nlohmann::json j;
  j["x0"] = g.x0;
  j["h"] = g.h;
  j["n"] = g.n;
  j["kind"] = kind;
  j["mass"] = snapshot_mass(g, kind, values);
  j["time"] = time;
  return j;
}

struct Snapshot {
  Grid grid;
  std::string kind;
  double time = 0.0;
  double mass = 0.0;
  std::vector<double> values;
};

inline std::vector<double> parse_two_column_csv(const std::string& text,
                                                std::vector<double>* xs = nullptr) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> values;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "x,value") {
        throw std::runtime_error("snapshot csv line 1: expected header x,value");
      }
      continue;
    }
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("snapshot csv line " + std::to_string(lineno) +
                               ": missing comma");
    }
    // strtod instead of std::stod: the latter throws on subnormal results
    // (ERANGE), which would reject legitimately tiny stored values. Both
    // columns are validated even when the caller discards the x column.
    const auto field = [&](size_t from, size_t len) {
      const std::string part = line.substr(from, len);
      const char* s = part.c_str();
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s || *end != '\0') {
        throw std::runtime_error("snapshot csv line " + std::to_string(lineno) +
                                 ": bad number");
      }
      return v;
    };
    const double xval = field(0, comma);
    if (xs != nullptr) xs->push_back(xval);
    values.push_back(field(comma + 1, std::string::npos));
  }
  return values;
}

inline Snapshot read_snapshot(const std::filesystem::path& csv_path) {
  Snapshot s;
  s.values = parse_two_column_csv(read_file(csv_path));
  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  const nlohmann::json j = nlohmann::json::parse(read_file(sidecar));
  s.grid = Grid{j.at("x0").get<double>(), j.at("h").get<double>(), j.at("n").get<int>()};
  s.kind = j.at("kind").get<std::string>();
  s.time = j.at("time").get<double>();
  s.mass = j.at("mass").get<double>();
  if (static_cast<int>(s.values.size()) != s.grid.n) {
    throw std::runtime_error("snapshot size does not match sidecar n: " + csv_path.string());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Flow bundle: directory of snapshots plus manifest.json

inline nlohmann::json counters_json(const FlowRecord& rec) {
  nlohmann::json c;
  c["steps"] = rec.steps;
  c["final_time"] = rec.final_time;
  c["min_dt"] = rec.min_dt;
  c["max_dt"] = rec.max_dt;
  c["clamp_events"] = rec.clamp_events;
  c["clamp_max"] = rec.clamp_max;
  c["clip_events"] = rec.clip_events;
  c["clip_mass_max"] = rec.clip_mass_max;
  c["max_abs_slope"] = rec.max_abs_slope;
  return c;
}

inline void apply_counters(const nlohmann::json& c, FlowRecord& rec) {
  rec.steps = c.at("steps").get<long long>();
  rec.final_time = c.at("final_time").get<double>();
  rec.min_dt = c.at("min_dt").get<double>();
  rec.max_dt = c.at("max_dt").get<double>();
  rec.clamp_events = c.at("clamp_events").get<long long>();
  rec.clamp_max = c.at("clamp_max").get<double>();
  rec.clip_events = c.at("clip_events").get<long long>();
  rec.clip_mass_max = c.at("clip_mass_max").get<double>();
  rec.max_abs_slope = c.at("max_abs_slope").get<double>();
}

// min_dt starts at +inf on records that never stepped; JSON has no inf, so
// encode as the string "inf" inside counters when needed.
inline nlohmann::json finite_or_tag(double v) {
  if (std::isfinite(v)) return v;
  return "inf";
}

inline std::string snapshot_name(size_t k, const char* ext) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "snapshot_%04zu.%s", k, ext);
  return std::string(buf);
}

// Writes the bundle and returns the manifest (with its own hash recorded
// under "manifest_hash", computed over the dump without that field).
inline nlohmann::json write_flow(const std::filesystem::path& dir, const FlowRecord& rec,
                                 const nlohmann::json& extra_meta = nlohmann::json::object()) {
  if (rec.frames.empty()) throw std::invalid_argument("write_flow: record has no frames");
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["schema"] = "dyson-lab-manifest/1";
  manifest["bundle"] = "flow";
  manifest["flow_kind"] = rec.kind;
  manifest["grid"] = {{"x0", rec.grid.x0}, {"h", rec.grid.h}, {"n", rec.grid.n}};
  nlohmann::json counters = counters_json(rec);
  counters["min_dt"] = finite_or_tag(rec.min_dt);
  manifest["counters"] = counters;
  for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) {
    manifest[it.key()] = it.value();
  }

  nlohmann::json times = nlohmann::json::array();
  nlohmann::json files = nlohmann::json::object();
  for (size_t k = 0; k < rec.frames.size(); ++k) {
    const FlowFrame& f = rec.frames[k];
    times.push_back(f.t);
    const std::string csv = snapshot_csv(rec.grid, f.values);
    const std::string side = snapshot_sidecar(rec.grid, rec.kind, f.values, f.t).dump(2) + "\n";
    const std::string csv_name = snapshot_name(k, "csv");
    const std::string side_name = snapshot_name(k, "json");
    write_file(dir / csv_name, csv);
    write_file(dir / side_name, side);
    files[csv_name] = hash_hex(csv);
    files[side_name] = hash_hex(side);
  }
  manifest["times"] = times;
  manifest["files"] = files;
  manifest["manifest_hash"] = hash_hex(manifest.dump(2));
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

struct FlowBundle {
  FlowRecord record;
  nlohmann::json manifest;
  std::string manifest_hash;
};

inline FlowBundle read_flow(const std::filesystem::path& dir) {
  FlowBundle b;
  b.manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  if (b.manifest.at("schema").get<std::string>() != "dyson-lab-manifest/1") {
    throw std::runtime_error("unsupported manifest schema in " + dir.string());
  }
  b.manifest_hash = b.manifest.value("manifest_hash", std::string("unrecorded"));
  const nlohmann::json& g = b.manifest.at("grid");
  b.record.grid = Grid{g.at("x0").get<double>(), g.at("h").get<double>(), g.at("n").get<int>()};
  b.record.kind = b.manifest.at("flow_kind").get<std::string>();
  nlohmann::json counters = b.manifest.at("counters");
  if (counters.at("min_dt").is_string()) counters["min_dt"] = 0.0;
  apply_counters(counters, b.record);
  const nlohmann::json& times = b.manifest.at("times");
  for (size_t k = 0; k < times.size(); ++k) {
    const Snapshot s = read_snapshot(dir / snapshot_name(k, "csv"));
    if (!s.grid.same_layout(b.record.grid)) {
      throw std::runtime_error("snapshot grid differs from manifest grid in " + dir.string());
    }
    FlowFrame f;
    f.t = s.time;
    f.values = s.values;
    b.record.frames.push_back(std::move(f));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Trajectories: JSON lines

inline std::string trajectory_jsonl(const TrajectoryRecord& tr) {
  std::string out;
  for (const TrajectoryFrame& f : tr.frames) {
    nlohmann::json j;
    j["t"] = f.t;
    j["positions"] = f.positions;
    if (f.has_spike) {
      j["spike"] = f.spike;
    } else {
      j["spike"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::string moments_jsonl(const TrajectoryRecord& tr) {
  std::string out;
  for (const TrajectoryFrame& f : tr.frames) {
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    double lo = f.positions.front(), hi = f.positions.front();
    for (double x : f.positions) {
      m1 += x;
      m2 += x * x;
      m4 += x * x * x * x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double n = static_cast<double>(f.positions.size());
    nlohmann::json j;
    j["t"] = f.t;
    j["m1"] = m1 / n;
    j["m2"] = m2 / n;
    j["m4"] = m4 / n;
    j["max"] = hi;
    j["min"] = lo;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline TrajectoryRecord read_trajectory_jsonl(const std::string& text) {
  TrajectoryRecord tr;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
    TrajectoryFrame f;
    f.t = j.at("t").get<double>();
    f.positions = j.at("positions").get<std::vector<double>>();
    if (j.contains("spike") && !j.at("spike").is_null()) {
      f.has_spike = true;
      f.spike = j.at("spike").get<double>();
    }
    tr.frames.push_back(std::move(f));
  }
  return tr;
}

}  // namespace io
}  // namespace dyson
