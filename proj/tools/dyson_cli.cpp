// dyson-lab: configuration-driven front end for the mean-field spectral
// flow laboratory. Subcommands: simulate | solve | reference | verify |
// sweep. Exit codes: 0 ok, 1 runtime error, 2 config/schema error,
// 3 check failure.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyson/dyson.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dyson;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RunOutcome {
  int exit_code = 0;
  json summary = json::object();
};

std::vector<double> linspace_outputs(double t_end, int k) {
  std::vector<double> out;
  for (int i = 1; i <= k; ++i) out.push_back(t_end * i / static_cast<double>(k));
  return out;
}

// Normalize the output-times list: sorted, unique, inside (0, t_end], with
// t_end itself always sampled.
json normalize_outputs(std::vector<double> v, double t_end) {
  if (v.empty()) v = linspace_outputs(t_end, 10);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  for (double t : v) {
    if (!(t > 0.0) || t > t_end + 1e-12) {
      throw config::ConfigError("outputs: times must lie in (0, t_end]");
    }
  }
  if (v.back() < t_end - 1e-12) v.push_back(t_end);
  return json(v);
}

json normalize_barrier(const json& b) {
  if (b.is_null()) return b;
  double location = 0.0, eps = 0.0;
  if (b.is_object()) {
    config::check_keys(b, "barrier", {"location", "eps"}, {"location", "eps"});
    location = config::get_num(b, "barrier", "location");
    eps = config::get_num(b, "barrier", "eps");
  } else if (b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number()) {
    location = b[0].get<double>();
    eps = b[1].get<double>();
  } else if (b.is_string()) {
    const std::vector<double> v = config::split_doubles(b.get<std::string>(), "barrier");
    if (v.size() != 2) throw config::ConfigError("barrier: expected \"R0,eps\"");
    location = v[0];
    eps = v[1];
  } else {
    throw config::ConfigError("barrier: expected {location, eps}, [R0, eps], or \"R0,eps\"");
  }
  if (!(eps > 0.0)) throw config::ConfigError("barrier.eps: must be > 0");
  return json{{"location", location}, {"eps", eps}};
}

InteractionKernel kernel_with_barrier(InteractionKernel k, const json& barrier) {
  if (barrier.is_null()) return k;
  const double r0 = barrier.at("location").get<double>();
  const double eps = barrier.at("eps").get<double>();
  const DriftSpec base = k.drift;
  auto wall = [r0, eps](double x) { return -std::max(0.0, x - r0) / eps; };
  if (base.kind == DriftKind::None) {
    k.drift = DriftSpec::lipschitz(wall, 1.0 / eps);
  } else if (base.kind == DriftKind::Lipschitz) {
    auto b = base.b;
    k.drift = DriftSpec::lipschitz([b, wall](double x) { return b(x) + wall(x); },
                                   base.lipschitz_constant + 1.0 / eps);
  } else {
    throw config::ConfigError("barrier: cannot combine with this drift kind");
  }
  return k;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string json_scalar_to_csv(const json& v) {
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return io::format_double(v.get<double>());
  return csv_field(v.dump());
}

// ---------------------------------------------------------------------------
// simulate

json resolve_simulate(json cfg, std::uint64_t seed_default) {
  config::check_keys(cfg, "simulate config",
                     {"schema", "n", "dt", "t_end", "seed", "kernel", "eta", "barrier",
                      "spike", "replicas", "init", "outputs", "moments_only", "convention"},
                     {"n"});
  json r;
  r["schema"] = config::kSchema;
  const long long n = config::get_int(cfg, "simulate config", "n");
  if (n < 1) throw config::ConfigError("n: need at least one particle");
  r["n"] = n;
  r["dt"] = config::get_num_or(cfg, "simulate config", "dt", 1e-3);
  if (!(r["dt"].get<double>() > 0.0)) throw config::ConfigError("dt: must be > 0");
  const double t_end = config::get_num_or(cfg, "simulate config", "t_end", 1.0);
  if (!(t_end > 0.0)) throw config::ConfigError("t_end: must be > 0");
  r["t_end"] = t_end;
  r["seed"] = cfg.contains("seed")
                  ? config::get_int(cfg, "simulate config", "seed")
                  : static_cast<long long>(seed_default);
  r["kernel"] = cfg.contains("kernel") ? cfg.at("kernel") : json("dyson");
  r["eta"] = config::get_num_or(cfg, "simulate config", "eta", 0.0);
  r["barrier"] = normalize_barrier(cfg.contains("barrier") ? cfg.at("barrier") : json());
  if (cfg.contains("spike") && !cfg.at("spike").is_null()) {
    r["spike"] = config::get_num(cfg, "simulate config", "spike");
  } else {
    r["spike"] = nullptr;
  }
  const long long replicas = config::get_int_or(cfg, "simulate config", "replicas", 1);
  if (replicas < 1) throw config::ConfigError("replicas: must be >= 1");
  r["replicas"] = replicas;
  r["init"] = config::get_str_or(cfg, "simulate config", "init", "semicircle:1");
  r["outputs"] =
      normalize_outputs(config::get_num_array(cfg, "simulate config", "outputs"), t_end);
  r["moments_only"] = config::get_bool_or(cfg, "simulate config", "moments_only", false);
  r["convention"] = config::get_str_or(cfg, "simulate config", "convention", "raw");
  parse_convention(r["convention"].get<std::string>());
  return r;
}

RunOutcome exec_simulate(const json& cfg, const fs::path& out) {
  const int n = static_cast<int>(cfg.at("n").get<long long>());
  const double dt = cfg.at("dt").get<double>();
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.at("seed").get<long long>());
  const long long replicas = cfg.at("replicas").get<long long>();
  const std::vector<double> outputs = cfg.at("outputs").get<std::vector<double>>();
  const bool moments_only = cfg.at("moments_only").get<bool>();

  InteractionKernel kernel =
      config::parse_kernel(cfg.at("kernel"), cfg.at("eta").get<double>(), fs::current_path());
  const bool wishart_like = kernel.name.rfind("wishart", 0) == 0;
  kernel = kernel_with_barrier(std::move(kernel), cfg.at("barrier"));

  const std::vector<double> x0 =
      config::make_particle_seed(cfg.at("init").get<std::string>(), n);
  if (wishart_like) {
    for (double v : x0) {
      if (v < 0.0) throw config::ConfigError("init: wishart dynamics need x >= 0");
    }
  }

  struct FrameAcc {
    double t = 0.0;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0, mx = 0.0, mn = 0.0;
    double s2 = 0.0, s2sq = 0.0;  // squared gap stats for n == 2
  };
  std::vector<FrameAcc> acc(outputs.size() + 1);
  TrajectoryRecord first_run;
  StepStats total_stats;

  for (long long r = 0; r < replicas; ++r) {
    SdeConfig sc;
    sc.seed = seed + static_cast<std::uint64_t>(r);
    sc.kernel = kernel;
    sc.reflect_at_zero = wishart_like;
    if (!cfg.at("spike").is_null()) {
      sc.with_spike = true;
      sc.spike0 = cfg.at("spike").get<double>();
    }
    ParticleSim sim(sc, ParticleEnsemble(x0));
    TrajectoryRecord rec;
    for (double tau : outputs) {
      sim.simulate(tau, dt, std::numeric_limits<int>::max(), &rec);
    }
    if (rec.frames.size() != acc.size()) {
      throw std::runtime_error("simulate: unexpected frame count");
    }
    for (size_t k = 0; k < rec.frames.size(); ++k) {
      const std::vector<double>& xs = rec.frames[k].positions;
      FrameAcc& a = acc[k];
      a.t = rec.frames[k].t;
      double m1 = 0.0, m2 = 0.0, m4 = 0.0;
      for (double x : xs) {
        m1 += x;
        m2 += x * x;
        m4 += x * x * x * x;
      }
      const double nn = static_cast<double>(xs.size());
      a.m1 += m1 / nn;
      a.m2 += m2 / nn;
      a.m4 += m4 / nn;
      a.mx += *std::max_element(xs.begin(), xs.end());
      a.mn += *std::min_element(xs.begin(), xs.end());
      if (n == 2) {
        const double s = xs[1] - xs[0];
        a.s2 += s * s;
        a.s2sq += s * s * s * s;
      }
    }
    total_stats.attempts += sim.stats.attempts;
    total_stats.halvings += sim.stats.halvings;
    total_stats.reflections += sim.stats.reflections;
    total_stats.floor_hits += sim.stats.floor_hits;
    if (r == 0) first_run = std::move(rec);
  }

  fs::create_directories(out);
  json manifest;
  manifest["schema"] = "dyson-lab-manifest/1";
  manifest["bundle"] = (replicas == 1) ? "trajectory" : "ensemble";
  manifest["config"] = cfg;
  manifest["config_hash"] = io::hash_hex(cfg.dump(2));
  manifest["counters"] = {{"attempts", total_stats.attempts},
                          {"halvings", total_stats.halvings},
                          {"reflections", total_stats.reflections},
                          {"floor_hits", total_stats.floor_hits}};
  json files = json::object();

  if (replicas == 1) {
    const std::string name = moments_only ? "moments.jsonl" : "trajectory.jsonl";
    const std::string body =
        moments_only ? io::moments_jsonl(first_run) : io::trajectory_jsonl(first_run);
    io::write_file(out / name, body);
    files[name] = io::hash_hex(body);
  } else {
    std::string agg = "t,m1,m2,m4,max,min\n";
    for (const FrameAcc& a : acc) {
      const double inv = 1.0 / static_cast<double>(replicas);
      agg += io::format_double(a.t);
      agg += ',';
      agg += io::format_double(a.m1 * inv);
      agg += ',';
      agg += io::format_double(a.m2 * inv);
      agg += ',';
      agg += io::format_double(a.m4 * inv);
      agg += ',';
      agg += io::format_double(a.mx * inv);
      agg += ',';
      agg += io::format_double(a.mn * inv);
      agg += '\n';
    }
    io::write_file(out / "aggregate.csv", agg);
    files["aggregate.csv"] = io::hash_hex(agg);
  }

  if (n == 2 && replicas > 1) {
    // Gap law summary: the squared gap grows linearly with slope 4 from its
    // realized initial value (same seed ladder in every replica).
    const double inv = 1.0 / static_cast<double>(replicas);
    const double s0sq = acc[0].s2 * inv;
    json samples = json::array();
    double max_abs_z = 0.0;
    for (size_t k = 1; k < acc.size(); ++k) {
      const double mean = acc[k].s2 * inv;
      const double var = std::max(0.0, acc[k].s2sq * inv - mean * mean);
      const double se = std::sqrt(var * inv);
      const double predicted = s0sq + 4.0 * acc[k].t;
      const double z = (se > 0.0) ? (mean - predicted) / se : 0.0;
      max_abs_z = std::max(max_abs_z, std::abs(z));
      samples.push_back({{"t", acc[k].t},
                         {"mean_s2", mean},
                         {"predicted", predicted},
                         {"se", se},
                         {"z", z}});
    }
    json gap;
    gap["initial_s2"] = s0sq;
    gap["samples"] = samples;
    gap["max_abs_z"] = max_abs_z;
    gap["pass_3se"] = max_abs_z <= 3.0;
    const std::string body = gap.dump(2) + "\n";
    io::write_file(out / "gap_law.json", body);
    files["gap_law.json"] = io::hash_hex(body);
  }

  manifest["files"] = files;
  manifest["manifest_hash"] = io::hash_hex(manifest.dump(2));
  io::write_file(out / "manifest.json", manifest.dump(2) + "\n");

  RunOutcome o;
  const FrameAcc& last = acc.back();
  const double inv = 1.0 / static_cast<double>(replicas);
  o.summary["final_m1"] = last.m1 * inv;
  o.summary["final_m2"] = last.m2 * inv;
  o.summary["final_variance"] = last.m2 * inv - (last.m1 * inv) * (last.m1 * inv);
  o.summary["final_max"] = last.mx * inv;
  o.summary["attempts"] = total_stats.attempts;
  return o;
}

// ---------------------------------------------------------------------------
// solve

json resolve_solve(json cfg, const std::string& conv_default) {
  config::check_keys(cfg, "solve config",
                     {"schema", "equation", "kernel", "eta", "grid", "init", "t_end", "dt",
                      "outputs", "diagnostics", "convention", "sigma", "viscosity", "barrier",
                      "spike", "half_line", "split_route", "drift", "seed"},
                     {"grid", "init"});
  json r;
  r["schema"] = config::kSchema;
  const std::string eq = config::get_str_or(cfg, "solve config", "equation", "density");
  if (eq != "density" && eq != "cdf") {
    throw config::ConfigError("equation: expected \"density\" or \"cdf\"");
  }
  r["equation"] = eq;
  r["kernel"] = cfg.contains("kernel") ? cfg.at("kernel") : json("dyson");
  r["eta"] = config::get_num_or(cfg, "solve config", "eta", 0.0);
  const Grid g = config::parse_grid(cfg.at("grid"));
  r["grid"] = {{"x0", g.x0}, {"h", g.h}, {"n", g.n}};
  if (!cfg.at("init").is_string()) throw config::ConfigError("init: expected a string spec");
  r["init"] = cfg.at("init");
  const double t_end = config::get_num_or(cfg, "solve config", "t_end", 1.0);
  if (!(t_end > 0.0)) throw config::ConfigError("t_end: must be > 0");
  r["t_end"] = t_end;
  json dtj = cfg.contains("dt") ? cfg.at("dt") : json::object();
  config::check_keys(dtj, "dt", {"cfl", "dt_max"});
  const double cfl = config::get_num_or(dtj, "dt", "cfl", 0.9);
  if (!(cfl > 0.0) || cfl > 1.0) throw config::ConfigError("dt.cfl: need 0 < cfl <= 1");
  r["dt"] = {{"cfl", cfl}, {"dt_max", config::get_num_or(dtj, "dt", "dt_max", 0.0)}};
  r["outputs"] =
      normalize_outputs(config::get_num_array(cfg, "solve config", "outputs"), t_end);
  r["diagnostics"] = config::get_str_array(cfg, "solve config", "diagnostics");
  for (const auto& d : r["diagnostics"]) {
    const std::string name = d.get<std::string>();
    if (name != "linf" && name != "lp" && name != "entropy" && name != "variance") {
      throw config::ConfigError("diagnostics: unknown check \"" + name + "\"");
    }
  }
  r["convention"] = config::get_str_or(cfg, "solve config", "convention", conv_default);
  parse_convention(r["convention"].get<std::string>());
  if (cfg.contains("sigma") && !cfg.at("sigma").is_null()) {
    r["sigma"] = config::get_num(cfg, "solve config", "sigma");
  } else {
    r["sigma"] = nullptr;
  }
  r["viscosity"] = config::get_num_or(cfg, "solve config", "viscosity", 0.0);
  if (r["viscosity"].get<double>() < 0.0) throw config::ConfigError("viscosity: must be >= 0");
  r["barrier"] = normalize_barrier(cfg.contains("barrier") ? cfg.at("barrier") : json());
  if (cfg.contains("spike") && !cfg.at("spike").is_null()) {
    r["spike"] = config::get_num(cfg, "solve config", "spike");
  } else {
    r["spike"] = nullptr;
  }
  r["half_line"] = config::get_bool_or(cfg, "solve config", "half_line", false);
  r["split_route"] = config::get_bool_or(cfg, "solve config", "split_route", false);
  r["drift"] = config::get_str_or(cfg, "solve config", "drift", "none");
  config::parse_drift(r["drift"].get<std::string>());
  r["seed"] = config::get_int_or(cfg, "solve config", "seed", 1);
  if (eq == "cdf") {
    if (!r["barrier"].is_null()) throw config::ConfigError("barrier: only the density equation");
    if (!r["spike"].is_null()) throw config::ConfigError("spike: only the density equation");
    if (!r["sigma"].is_null()) throw config::ConfigError("sigma: only the density equation");
    if (r["viscosity"].get<double>() != 0.0) {
      throw config::ConfigError("viscosity: only the density equation");
    }
  } else {
    if (r["half_line"].get<bool>()) throw config::ConfigError("half_line: only the cdf equation");
    if (r["split_route"].get<bool>()) {
      throw config::ConfigError("split_route: only the cdf equation");
    }
  }
  return r;
}

std::vector<CheckReport> run_flow_checks(const FlowRecord& rec,
                                         const std::vector<std::string>& names,
                                         const json& params) {
  std::vector<CheckReport> out;
  for (const std::string& name : names) {
    if (name == "linf") {
      out.push_back(check_linf_bound(rec, config::get_num_or(params, "params", "c_limit", -1.0),
                                     config::get_num_or(params, "params", "t_min", 0.0)));
    } else if (name == "lp") {
      std::vector<double> ps = config::get_num_array(params, "params", "p_list");
      if (ps.empty()) ps = {2.0, 3.0, kInf};
      out.push_back(check_lp_decay(rec, ps));
    } else if (name == "entropy") {
      std::vector<double> w = config::get_num_array(params, "params", "window");
      if (w.empty()) w = {0.1, 1.0};
      if (w.size() != 2) throw config::ConfigError("params.window: expected [lo, hi]");
      out.push_back(check_entropy_identity(rec, w[0], w[1]));
    } else if (name == "variance") {
      out.push_back(check_variance_identity(
          rec, config::get_num_or(params, "params", "expected_slope", 1.0),
          config::get_num_or(params, "params", "rel_tol", 0.02)));
    } else {
      throw config::ConfigError("unknown check \"" + name + "\"");
    }
  }
  return out;
}

RunOutcome exec_solve(const json& cfg, const fs::path& out) {
  const std::string eq = cfg.at("equation").get<std::string>();
  const Grid g = config::parse_grid(cfg.at("grid"));
  InteractionKernel kernel =
      config::parse_kernel(cfg.at("kernel"), cfg.at("eta").get<double>(), fs::current_path());
  kernel.drift = config::parse_drift(cfg.at("drift").get<std::string>());

  const std::vector<double> outputs = cfg.at("outputs").get<std::vector<double>>();
  const double cfl = cfg.at("dt").at("cfl").get<double>();
  const double dt_max_raw = cfg.at("dt").at("dt_max").get<double>();
  const double dt_max = dt_max_raw > 0.0 ? dt_max_raw : kInf;

  FlowRecord record;
  json spike_json;

  if (eq == "cdf") {
    CdfProblem p;
    p.kernel = kernel;
    p.half_line = cfg.at("half_line").get<bool>();
    p.split_route = cfg.at("split_route").get<bool>();
    const GridDensity m0 = config::make_density_seed(cfg.at("init").get<std::string>(), g);
    CdfSolver solver(p, density_to_cdf(m0));
    CdfSolveOptions opt;
    opt.cfl = cfl;
    opt.dt_max = dt_max;
    for (double tau : outputs) {
      opt.t_end = tau;
      solver.advance(opt);
    }
    record = solver.record;
  } else {
    DensityProblem p;
    p.kernel = kernel;
    p.viscosity = cfg.at("viscosity").get<double>();
    if (!cfg.at("sigma").is_null()) {
      const double s = cfg.at("sigma").get<double>();
      p.sigma = [s](double) { return s; };
    }
    if (!cfg.at("barrier").is_null()) {
      p.barrier.location = cfg.at("barrier").at("location").get<double>();
      p.barrier.eps = cfg.at("barrier").at("eps").get<double>();
    }
    DensitySolver solver(p, config::make_density_seed(cfg.at("init").get<std::string>(), g));
    if (!cfg.at("spike").is_null()) solver.attach_spike(cfg.at("spike").get<double>());
    DensitySolveOptions opt;
    opt.cfl = cfl;
    opt.dt_max = dt_max;
    for (double tau : outputs) {
      opt.t_end = tau;
      solver.advance(opt);
    }
    record = solver.record;
    if (solver.spike.enabled) {
      spike_json["absorbed"] = solver.spike.absorbed;
      spike_json["t_absorb"] = solver.spike.absorbed ? json(solver.spike.t_absorb) : json();
      spike_json["final_position"] = solver.spike.position;
      json trail = json::array();
      for (const SpikeTrailPoint& tp : solver.spike.trail) {
        trail.push_back({{"t", tp.t}, {"position", tp.position}, {"bulk_edge", tp.bulk_edge}});
      }
      spike_json["trail"] = trail;
    }
  }

  json extra;
  extra["config"] = cfg;
  extra["config_hash"] = io::hash_hex(cfg.dump(2));
  extra["convention"] = cfg.at("convention");
  const json manifest = io::write_flow(out, record, extra);
  if (!spike_json.is_null()) {
    io::write_file(out / "spike.json", spike_json.dump(2) + "\n");
  }

  RunOutcome o;
  const GridDensity final_m = dyson::detail::frame_density(record, record.frames.size() - 1);
  o.summary["mass"] = final_m.mass();
  o.summary["mean"] = mean(final_m);
  o.summary["variance"] = variance(final_m);
  o.summary["linf"] = lp_norm(final_m, kInf);
  o.summary["steps"] = record.steps;

  const std::vector<std::string> diag = cfg.at("diagnostics").get<std::vector<std::string>>();
  if (!diag.empty()) {
    const std::vector<CheckReport> reports =
        run_flow_checks(record, diag, json::object());
    json jr = json::array();
    bool all_pass = true;
    for (const CheckReport& r : reports) {
      json one = r.to_json();
      one["provenance"] = json::array({manifest.at("manifest_hash")});
      jr.push_back(one);
      std::cout << r.summary_line() << "\n";
      all_pass = all_pass && r.pass;
    }
    io::write_file(out / "diagnostics.json", jr.dump(2) + "\n");
    if (!all_pass) o.exit_code = 3;
  }
  return o;
}

// ---------------------------------------------------------------------------
// reference

json resolve_reference(json cfg, const std::string& conv_default) {
  config::check_keys(cfg, "reference config",
                     {"schema", "family", "radius", "center", "eta", "atoms", "weights",
                      "lambda0", "grid", "outputs", "convention", "seed"},
                     {"family"});
  json r;
  r["schema"] = config::kSchema;
  const std::string family = cfg.at("family").is_string() ? cfg.at("family").get<std::string>() : "";
  if (family != "semicircle" && family != "mp" && family != "burgers" && family != "spike") {
    throw config::ConfigError("family: expected semicircle | mp | burgers | spike");
  }
  r["family"] = family;
  r["convention"] = config::get_str_or(cfg, "reference config", "convention", conv_default);
  parse_convention(r["convention"].get<std::string>());
  double t_hint = 1.0;
  std::vector<double> outs = config::get_num_array(cfg, "reference config", "outputs");
  if (!outs.empty()) t_hint = *std::max_element(outs.begin(), outs.end());
  r["outputs"] = normalize_outputs(outs, t_hint);

  if (family == "spike") {
    r["lambda0"] = config::get_num(cfg, "reference config", "lambda0");
    if (!(r["lambda0"].get<double>() > 0.0)) {
      throw config::ConfigError("lambda0: must be > 0");
    }
    return r;
  }
  const Grid g = config::parse_grid(cfg.at("grid"));
  r["grid"] = {{"x0", g.x0}, {"h", g.h}, {"n", g.n}};
  if (family == "semicircle") {
    r["radius"] = config::get_num_or(cfg, "reference config", "radius", 0.0);
    r["center"] = config::get_num_or(cfg, "reference config", "center", 0.0);
  } else if (family == "mp") {
    const double eta = config::get_num(cfg, "reference config", "eta");
    if (!(eta >= 1.0)) throw config::ConfigError("eta: must be >= 1");
    r["eta"] = eta;
  } else {
    const std::vector<double> atoms = config::get_num_array(cfg, "reference config", "atoms");
    if (atoms.empty()) throw config::ConfigError("atoms: burgers family needs atom locations");
    r["atoms"] = atoms;
    r["weights"] = config::get_num_array(cfg, "reference config", "weights");
  }
  return r;
}

RunOutcome exec_reference(const json& cfg, const fs::path& out) {
  const std::string family = cfg.at("family").get<std::string>();
  const Convention conv = parse_convention(cfg.at("convention").get<std::string>());
  const std::vector<double> outputs = cfg.at("outputs").get<std::vector<double>>();

  json extra;
  extra["bundle"] = "reference";
  extra["family"] = family;
  extra["config"] = cfg;
  extra["config_hash"] = io::hash_hex(cfg.dump(2));
  extra["convention"] = cfg.at("convention");

  if (family == "spike") {
    const double lambda0 = cfg.at("lambda0").get<double>();
    std::string curve = "t,value\n";
    for (double t : outputs) {
      curve += io::format_double(t);
      curve += ',';
      curve += io::format_double(spike_position_reference(lambda0, t, conv));
      curve += '\n';
    }
    fs::create_directories(out);
    io::write_file(out / "curve.csv", curve);
    json manifest;
    manifest["schema"] = "dyson-lab-manifest/1";
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    manifest["bundle"] = "curve";
    manifest["absorption_time"] = spike_absorption_reference(lambda0, conv);
    manifest["files"] = {{"curve.csv", io::hash_hex(curve)}};
    manifest["manifest_hash"] = io::hash_hex(manifest.dump(2));
    io::write_file(out / "manifest.json", manifest.dump(2) + "\n");
    RunOutcome o;
    o.summary["absorption_time"] = manifest["absorption_time"];
    return o;
  }

  const Grid g = config::parse_grid(cfg.at("grid"));
  FlowRecord rec;
  rec.grid = g;
  rec.kind = "density";
  for (double t : outputs) {
    FlowFrame f;
    f.t = t;
    if (family == "semicircle") {
      const double r0 = cfg.at("radius").get<double>();
      const double rate = (conv == Convention::raw) ? 4.0 : 1.0;
      const double rt = std::sqrt(r0 * r0 + rate * t);
      f.values = sample_semicircle(g, rt, cfg.at("center").get<double>()).values;
    } else if (family == "mp") {
      f.values = MarchenkoPastur(cfg.at("eta").get<double>()).sample(g).values;
    } else {
      AtomicSeed seed;
      seed.atoms = cfg.at("atoms").get<std::vector<double>>();
      seed.weights = cfg.at("weights").get<std::vector<double>>();
      BurgersOracle oracle{seed};
      f.values = oracle.to_density(t, g).values;
    }
    rec.frames.push_back(std::move(f));
  }
  rec.final_time = outputs.back();
  io::write_flow(out, rec, extra);
  RunOutcome o;
  o.summary["frames"] = outputs.size();
  return o;
}

// ---------------------------------------------------------------------------
// verify

json resolve_verify(json cfg, const std::vector<std::string>& cli_inputs,
                    const std::string& cli_checks) {
  config::check_keys(cfg, "verify config", {"schema", "inputs", "checks", "params"});
  json r;
  r["schema"] = config::kSchema;
  std::vector<std::string> inputs = config::get_str_array(cfg, "verify config", "inputs");
  for (const std::string& s : cli_inputs) inputs.push_back(s);
  if (inputs.empty()) throw config::ConfigError("verify: no input bundles given");
  r["inputs"] = inputs;
  std::vector<std::string> checks = config::get_str_array(cfg, "verify config", "checks");
  if (!cli_checks.empty()) {
    checks.clear();
    size_t pos = 0;
    while (pos <= cli_checks.size()) {
      const size_t comma = cli_checks.find(',', pos);
      const std::string tok =
          cli_checks.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!tok.empty()) checks.push_back(tok);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (checks.empty()) throw config::ConfigError("verify: no checks requested");
  for (const std::string& c : checks) {
    if (c != "linf" && c != "lp" && c != "entropy" && c != "variance" && c != "w2" &&
        c != "w1" && c != "comparison") {
      throw config::ConfigError("verify: unknown check \"" + c + "\"");
    }
  }
  r["checks"] = checks;
  r["params"] = cfg.contains("params") ? cfg.at("params") : json::object();
  config::check_keys(r["params"], "params",
                     {"c_limit", "t_min", "p_list", "window", "expected_slope", "rel_tol",
                      "slack"});
  return r;
}

RunOutcome exec_verify(const json& cfg, const fs::path& out_root) {
  const std::vector<std::string> inputs = cfg.at("inputs").get<std::vector<std::string>>();
  const std::vector<std::string> checks = cfg.at("checks").get<std::vector<std::string>>();
  const json& params = cfg.at("params");

  std::vector<io::FlowBundle> bundles;
  std::vector<std::string> hashes;
  for (const std::string& rel : inputs) {
    bundles.push_back(io::read_flow(out_root / rel));
    hashes.push_back(bundles.back().manifest_hash);
  }

  std::vector<CheckReport> reports;
  for (const std::string& name : checks) {
    if (name == "w2" || name == "w1" || name == "comparison") {
      if (bundles.size() < 2) {
        throw config::ConfigError("verify: check \"" + name + "\" needs two input bundles");
      }
      if (name == "comparison") {
        reports.push_back(check_comparison(bundles[0].record, bundles[1].record,
                                           config::get_num_or(params, "params", "slack", 1e-8)));
      } else {
        const double p = (name == "w2") ? 2.0 : 1.0;
        reports.push_back(check_w_contraction(
            bundles[0].record, bundles[1].record, p,
            config::get_num_or(params, "params", "slack", -1.0)));
      }
      reports.back().detail += "  inputs: " + inputs[0] + ", " + inputs[1];
    } else {
      for (size_t b = 0; b < bundles.size(); ++b) {
        std::vector<CheckReport> one = run_flow_checks(bundles[b].record, {name}, params);
        one[0].detail += "  input: " + inputs[b];
        reports.push_back(std::move(one[0]));
      }
    }
  }

  json jr = json::array();
  std::string table;
  bool all_pass = true;
  for (CheckReport& r : reports) {
    r.provenance = hashes;
    jr.push_back(r.to_json());
    table += r.summary_line();
    table += '\n';
    all_pass = all_pass && r.pass;
  }
  json report;
  report["schema"] = "dyson-lab-report/1";
  report["checks"] = jr;
  report["inputs"] = inputs;
  report["all_pass"] = all_pass;
  fs::create_directories(out_root);
  io::write_file(out_root / "report.json", report.dump(2) + "\n");
  io::write_file(out_root / "report.txt", table);
  std::cout << table;

  RunOutcome o;
  o.exit_code = all_pass ? 0 : 3;
  o.summary["all_pass"] = all_pass;
  return o;
}

// ---------------------------------------------------------------------------
// sweep

json resolve_sweep(json cfg) {
  config::check_keys(cfg, "sweep config", {"schema", "command", "base", "axes"},
                     {"command", "base", "axes"});
  json r;
  r["schema"] = config::kSchema;
  const std::string command = cfg.at("command").is_string()
                                  ? cfg.at("command").get<std::string>()
                                  : "";
  if (command != "solve" && command != "simulate") {
    throw config::ConfigError("sweep.command: expected \"solve\" or \"simulate\"");
  }
  r["command"] = command;
  if (!cfg.at("base").is_object()) throw config::ConfigError("sweep.base: expected an object");
  r["base"] = cfg.at("base");
  if (!cfg.at("axes").is_object() || cfg.at("axes").empty()) {
    throw config::ConfigError("sweep.axes: expected a non-empty object of arrays");
  }
  for (auto it = cfg.at("axes").begin(); it != cfg.at("axes").end(); ++it) {
    if (!it.value().is_array() || it.value().empty()) {
      throw config::ConfigError("sweep.axes." + it.key() + ": expected a non-empty array");
    }
  }
  r["axes"] = cfg.at("axes");
  return r;
}

RunOutcome exec_sweep(const json& cfg, const fs::path& out_root, int jobs,
                      std::uint64_t seed_default, const std::string& conv_default) {
  const std::string command = cfg.at("command").get<std::string>();
  std::vector<std::pair<std::string, json>> axes;
  for (auto it = cfg.at("axes").begin(); it != cfg.at("axes").end(); ++it) {
    axes.emplace_back(it.key(), it.value());
  }

  size_t total = 1;
  for (const auto& [key, vals] : axes) total *= vals.size();
  if (total > 10000) throw config::ConfigError("sweep: more than 10000 cases");

  // Resolve every case up front so schema problems surface before any run.
  struct Case {
    json resolved;
    std::vector<json> axis_values;
    fs::path dir;
  };
  std::vector<Case> cases(total);
  for (size_t idx = 0; idx < total; ++idx) {
    json patched = cfg.at("base");
    patched["schema"] = config::kSchema;
    size_t rem = idx;
    Case& c = cases[idx];
    for (const auto& [key, vals] : axes) {
      const json& v = vals[rem % vals.size()];
      rem /= vals.size();
      std::string ptr = "/" + key;
      for (char& ch : ptr) {
        if (ch == '.') ch = '/';
      }
      patched[json::json_pointer(ptr)] = v;
      c.axis_values.push_back(v);
    }
    c.resolved = (command == "solve") ? resolve_solve(patched, conv_default)
                                      : resolve_simulate(patched, seed_default);
    char name[32];
    std::snprintf(name, sizeof(name), "case_%04zu", idx);
    c.dir = out_root / name;
  }

  std::vector<RunOutcome> outcomes(total);
  std::vector<std::string> errors(total);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      try {
        outcomes[idx] = (command == "solve") ? exec_solve(cases[idx].resolved, cases[idx].dir)
                                             : exec_simulate(cases[idx].resolved, cases[idx].dir);
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (size_t idx = 0; idx < total; ++idx) {
    if (!errors[idx].empty()) {
      throw std::runtime_error("sweep case " + std::to_string(idx) + ": " + errors[idx]);
    }
  }

  // Aggregate: one row per case with axis values and summary scalars.
  std::vector<std::string> summary_keys;
  for (auto it = outcomes[0].summary.begin(); it != outcomes[0].summary.end(); ++it) {
    summary_keys.push_back(it.key());
  }
  std::string agg = "case";
  for (const auto& [key, vals] : axes) agg += "," + csv_field(key);
  for (const std::string& k : summary_keys) agg += "," + csv_field(k);
  agg += '\n';
  int worst_exit = 0;
  for (size_t idx = 0; idx < total; ++idx) {
    agg += std::to_string(idx);
    for (const json& v : cases[idx].axis_values) agg += "," + json_scalar_to_csv(v);
    for (const std::string& k : summary_keys) {
      agg += ",";
      agg += outcomes[idx].summary.contains(k) ? json_scalar_to_csv(outcomes[idx].summary.at(k))
                                               : std::string();
    }
    agg += '\n';
    worst_exit = std::max(worst_exit, outcomes[idx].exit_code);
  }
  fs::create_directories(out_root);
  io::write_file(out_root / "sweep.csv", agg);

  json manifest;
  manifest["schema"] = "dyson-lab-manifest/1";
  manifest["bundle"] = "sweep";
  manifest["config"] = cfg;
  manifest["config_hash"] = io::hash_hex(cfg.dump(2));
  manifest["cases"] = total;
  manifest["files"] = {{"sweep.csv", io::hash_hex(agg)}};
  manifest["manifest_hash"] = io::hash_hex(manifest.dump(2));
  io::write_file(out_root / "manifest.json", manifest.dump(2) + "\n");

  RunOutcome o;
  o.exit_code = worst_exit;
  o.summary["cases"] = total;
  return o;
}

// ---------------------------------------------------------------------------

std::string flag_inventory(const CLI::App& app) {
  std::string out = "Flag inventory:\n";
  auto list = [&out](const CLI::App* a, const std::string& prefix) {
    for (const CLI::Option* opt : a->get_options()) {
      out += "  " + prefix + opt->get_name() + "  " + opt->get_description() + "\n";
    }
  };
  list(&app, "");
  for (const CLI::App* sub : app.get_subcommands(
           [](const CLI::App*) { return true; })) {
    out += sub->get_name() + ":\n";
    list(sub, sub->get_name() + " ");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyson-lab: numerical laboratory for mean-field spectral flows"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string convention = "raw";
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--out", out_dir, "Output root directory (default: out)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Seed override for stochastic runs");
  app.add_option("--jobs", jobs, "Concurrent jobs for sweep")->check(CLI::PositiveNumber);
  CLI::Option* conv_opt =
      app.add_option("--convention", convention, "Scaling convention: raw | paper")
          ->check(CLI::IsMember({"raw", "paper"}));

  CLI::App* cmd_sim = app.add_subcommand("simulate", "Run the interacting-particle SDE");
  long long sim_n = 0, sim_replicas = 0;
  double sim_dt = 0.0, sim_t_end = 0.0, sim_eta = 0.0;
  std::string sim_kernel, sim_barrier, sim_spike, sim_init, sim_outputs;
  bool sim_moments = false;
  CLI::Option* o_n = cmd_sim->add_option("--n", sim_n, "Number of particles");
  CLI::Option* o_dt = cmd_sim->add_option("--dt", sim_dt, "Macro time step");
  CLI::Option* o_tend = cmd_sim->add_option("--t-end", sim_t_end, "Final time");
  CLI::Option* o_kernel =
      cmd_sim->add_option("--kernel", sim_kernel, "Kernel: dyson | gaussian | quadratic(eps) | wishart(eta)");
  CLI::Option* o_eta = cmd_sim->add_option("--eta", sim_eta, "Aspect parameter for wishart");
  CLI::Option* o_barrier = cmd_sim->add_option("--barrier", sim_barrier, "Penalized wall: R0,eps");
  CLI::Option* o_spike =
      cmd_sim->add_option("--spike", sim_spike, "Outlier tracer: lambda0[,bulk-init-spec]");
  CLI::Option* o_replicas = cmd_sim->add_option("--replicas", sim_replicas, "Independent replicas");
  CLI::Option* o_init =
      cmd_sim->add_option("--init", sim_init, "Initial ladder: semicircle:R | uniform:a,b | atom:a | mp:eta");
  CLI::Option* o_outputs = cmd_sim->add_option("--outputs", sim_outputs, "Sample times: t1,t2,...");
  CLI::Option* o_moments =
      cmd_sim->add_flag("--moments-only", sim_moments, "Write per-time moments instead of positions");

  CLI::App* cmd_solve = app.add_subcommand("solve", "Solve the nonlocal PDE flow (config-driven)");
  CLI::App* cmd_ref = app.add_subcommand("reference", "Emit analytic reference bundles (config-driven)");
  CLI::App* cmd_verify = app.add_subcommand("verify", "Run identity checks on recorded bundles");
  std::vector<std::string> verify_inputs;
  std::string verify_checks;
  cmd_verify->add_option("inputs", verify_inputs, "Bundle directories (relative to --out)");
  cmd_verify->add_option("--checks", verify_checks,
                         "Comma list: linf,lp,entropy,variance,w1,w2,comparison");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Cartesian parameter sweep (config-driven)");

  app.footer([&app]() { return flag_inventory(app); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json file_cfg = json::object();
    if (!config_path.empty()) {
      file_cfg = config::parse_json_text(io::read_file(config_path), config_path);
      config::check_schema(file_cfg);
    }
    const fs::path out_root(out_dir);

    if (*cmd_sim) {
      json cfg = file_cfg;
      cfg["schema"] = config::kSchema;
      if (o_n->count()) cfg["n"] = sim_n;
      if (o_dt->count()) cfg["dt"] = sim_dt;
      if (o_tend->count()) cfg["t_end"] = sim_t_end;
      if (o_kernel->count()) cfg["kernel"] = sim_kernel;
      if (o_eta->count()) cfg["eta"] = sim_eta;
      if (o_barrier->count()) cfg["barrier"] = sim_barrier;
      if (o_replicas->count()) cfg["replicas"] = sim_replicas;
      if (o_init->count()) cfg["init"] = sim_init;
      if (o_moments->count()) cfg["moments_only"] = true;
      if (o_outputs->count()) {
        cfg["outputs"] = config::split_doubles(sim_outputs, "--outputs");
      }
      if (o_spike->count()) {
        const size_t comma = sim_spike.find(',');
        const std::string head = sim_spike.substr(0, comma);
        try {
          cfg["spike"] = std::stod(head);
        } catch (const std::exception&) {
          throw config::ConfigError("--spike: bad lambda0 \"" + head + "\"");
        }
        if (comma != std::string::npos) cfg["init"] = sim_spike.substr(comma + 1);
      }
      if (seed_opt->count()) cfg["seed"] = static_cast<long long>(seed);
      if (conv_opt->count()) cfg["convention"] = convention;
      return exec_simulate(resolve_simulate(cfg, seed), out_root).exit_code;
    }
    if (*cmd_solve) {
      if (config_path.empty()) throw config::ConfigError("solve: --config is required");
      json cfg = file_cfg;
      if (seed_opt->count()) cfg["seed"] = static_cast<long long>(seed);
      if (conv_opt->count()) cfg["convention"] = convention;
      return exec_solve(resolve_solve(cfg, convention), out_root).exit_code;
    }
    if (*cmd_ref) {
      if (config_path.empty()) throw config::ConfigError("reference: --config is required");
      json cfg = file_cfg;
      if (conv_opt->count()) cfg["convention"] = convention;
      return exec_reference(resolve_reference(cfg, convention), out_root).exit_code;
    }
    if (*cmd_verify) {
      return exec_verify(resolve_verify(file_cfg, verify_inputs, verify_checks), out_root)
          .exit_code;
    }
    if (*cmd_sweep) {
      if (config_path.empty()) throw config::ConfigError("sweep: --config is required");
      return exec_sweep(resolve_sweep(file_cfg), out_root, jobs, seed, convention).exit_code;
    }
    throw config::ConfigError("no subcommand given");
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
