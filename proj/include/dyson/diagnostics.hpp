#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyson/entropy.hpp"
#include "dyson/flow_record.hpp"
#include "dyson/measure.hpp"
#include "dyson/particle.hpp"
#include "dyson/wasserstein.hpp"

namespace dyson {

// Identity-verification harness: each check consumes recorded flows and
// produces a CheckReport with the measured values, the tolerance actually
// used, and the worst violation (<= 0 means the check is clean). Tolerances
// lean on the recorded scheme-health counters where that is meaningful;
// fixed fallbacks are spelled out per check.

struct CheckSample {
  double t = 0.0;
  double value = 0.0;
};

struct CheckReport {
  std::string name;
  bool pass = false;
  double tolerance = 0.0;
  double worst = 0.0;  // signed worst violation; <= 0 is clean
  std::string detail;
  std::vector<CheckSample> measured;
  std::vector<std::string> provenance;  // input manifest hashes

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["pass"] = pass;
    j["tolerance"] = tolerance;
    j["worst_violation"] = worst;
    j["detail"] = detail;
    j["provenance"] = provenance;
    nlohmann::json series = nlohmann::json::array();
    for (const CheckSample& s : measured) {
      series.push_back({{"t", s.t}, {"value", s.value}});
    }
    j["measured"] = series;
    return j;
  }

  std::string summary_line() const {
    std::ostringstream os;
    os << (pass ? "[PASS] " : "[FAIL] ") << name << "  worst=" << worst
       << "  tol=" << tolerance;
    if (!detail.empty()) os << "  (" << detail << ")";
    return os.str();
  }
};

namespace detail {

inline GridDensity frame_density(const FlowRecord& rec, size_t k) {
  if (k >= rec.frames.size()) throw std::out_of_range("frame_density: frame index");
  if (rec.kind == "density") {
    return GridDensity(rec.grid, rec.frames[k].values, false);
  }
  CdfGrid u(rec.grid, rec.frames[k].values);
  return cdf_to_density(u, false);
}

// Frame values linearly interpolated in time.
inline std::vector<double> values_at_time(const FlowRecord& rec, double t) {
  if (rec.frames.empty()) throw std::invalid_argument("values_at_time: no frames");
  if (t <= rec.frames.front().t) return rec.frames.front().values;
  if (t >= rec.frames.back().t) return rec.frames.back().values;
  size_t hi = 1;
  while (rec.frames[hi].t < t) ++hi;
  const FlowFrame& a = rec.frames[hi - 1];
  const FlowFrame& b = rec.frames[hi];
  const double w = (t - a.t) / std::max(b.t - a.t, 1e-300);
  std::vector<double> out(a.values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - w) * a.values[i] + w * b.values[i];
  }
  return out;
}

inline GridDensity density_at_time(const FlowRecord& rec, double t) {
  FlowRecord tmp;  // reuse frame_density on a synthetic one-frame record
  tmp.grid = rec.grid;
  tmp.kind = rec.kind;
  FlowFrame f;
  f.t = t;
  f.values = values_at_time(rec, t);
  tmp.frames.push_back(std::move(f));
  return frame_density(tmp, 0);
}

// Transport distances require unit mass exactly; recorded frames carry the
// O(h^2) quadrature mass of their seeds, so rescale before coupling.
inline GridDensity unit_mass(GridDensity m) {
  const double total = m.mass();
  if (total <= 0.0) throw std::invalid_argument("unit_mass: empty measure");
  for (double& v : m.values) v /= total;
  m.normalized = true;
  return m;
}

// Least-squares slope of value against t.
inline double fit_slope(const std::vector<CheckSample>& s) {
  if (s.size() < 2) throw std::invalid_argument("fit_slope: need 2+ samples");
  double st = 0.0, sv = 0.0;
  for (const CheckSample& x : s) {
    st += x.t;
    sv += x.value;
  }
  const double n = static_cast<double>(s.size());
  const double mt = st / n, mv = sv / n;
  double num = 0.0, den = 0.0;
  for (const CheckSample& x : s) {
    num += (x.t - mt) * (x.value - mv);
    den += (x.t - mt) * (x.t - mt);
  }
  if (den == 0.0) throw std::invalid_argument("fit_slope: degenerate times");
  return num / den;
}

}  // namespace detail

// sup_x m(t, x) * sqrt(t) <= limit uniformly over frames with t >= t_min.
// limit < 0 applies the pure-transport default 1 + 5h (the self-similar
// profile peaks at 1/pi in these units; the margin absorbs scheme smearing).
inline CheckReport check_linf_bound(const FlowRecord& flow, double limit = -1.0,
                                    double t_min = 0.0) {
  CheckReport r;
  r.name = "linf_bound";
  const double lim = (limit > 0.0) ? limit : 1.0 + 5.0 * flow.grid.h;
  r.tolerance = lim;
  double c_fit = 0.0;
  for (size_t k = 0; k < flow.frames.size(); ++k) {
    const double t = flow.frames[k].t;
    if (t < t_min || t <= 0.0) continue;
    const GridDensity m = detail::frame_density(flow, k);
    const double v = lp_norm(m, std::numeric_limits<double>::infinity()) *
                     std::sqrt(t);
    r.measured.push_back({t, v});
    c_fit = std::max(c_fit, v);
  }
  if (r.measured.empty()) {
    r.pass = false;
    r.detail = "no frames at t >= t_min";
    return r;
  }
  r.worst = c_fit - lim;
  r.pass = r.worst <= 0.0;
  std::ostringstream os;
  os << "C_fit=" << c_fit;
  r.detail = os.str();
  return r;
}

// ||m(t)||_p nonincreasing for each p, with slack 1e-6 plus the recorded
// clip/clamp health converted to a density scale.
inline CheckReport check_lp_decay(const FlowRecord& flow,
                                  const std::vector<double>& p_list) {
  CheckReport r;
  r.name = "lp_decay";
  const double health =
      flow.clip_mass_max / flow.grid.h + flow.clamp_max / flow.grid.h;
  r.tolerance = 1e-6 + health;
  r.worst = -std::numeric_limits<double>::infinity();
  std::ostringstream os;
  for (double p : p_list) {
    double prev = std::numeric_limits<double>::infinity();
    double worst_p = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < flow.frames.size(); ++k) {
      const GridDensity m = detail::frame_density(flow, k);
      const double v = lp_norm(m, p);
      if (p == p_list.front()) r.measured.push_back({flow.frames[k].t, v});
      if (k > 0) worst_p = std::max(worst_p, v - prev);
      prev = v;
    }
    os << "p=" << p << " max_increase=" << worst_p << "; ";
    r.worst = std::max(r.worst, worst_p);
  }
  r.pass = r.worst <= r.tolerance;
  r.detail = os.str();
  return r;
}

// E(m_t) = E(m_s) + int_s^t int H[m]^2 m over the frame window clipped to
// [window_lo, window_hi]; dissipation integrated by the trapezoid rule over
// the recorded frames.
inline CheckReport check_entropy_identity(const FlowRecord& flow,
                                          double window_lo = 0.1,
                                          double window_hi = 1.0) {
  CheckReport r;
  r.name = "entropy_identity";
  std::vector<double> ts, es, ds;
  for (size_t k = 0; k < flow.frames.size(); ++k) {
    const double t = flow.frames[k].t;
    if (t < window_lo - 1e-12 || t > window_hi + 1e-12) continue;
    const GridDensity m = detail::frame_density(flow, k);
    ts.push_back(t);
    es.push_back(free_entropy(m));
    ds.push_back(entropy_dissipation(m));
    r.measured.push_back({t, es.back()});
  }
  if (ts.size() < 2) {
    r.pass = false;
    r.detail = "need two frames inside the window";
    return r;
  }
  double integral = 0.0;
  for (size_t k = 0; k + 1 < ts.size(); ++k) {
    integral += 0.5 * (ds[k] + ds[k + 1]) * (ts[k + 1] - ts[k]);
  }
  const double delta_e = es.back() - es.front();
  const double residual = std::abs(delta_e - integral);
  r.tolerance = 0.01 * std::abs(delta_e) + 1e-4;
  r.worst = residual - r.tolerance;
  r.pass = r.worst <= 0.0;
  std::ostringstream os;
  os << "dE=" << delta_e << " integral=" << integral << " residual=" << residual;
  r.detail = os.str();
  return r;
}

// W_p between two recorded flows, nonincreasing in t. Frames of flow2 are
// interpolated to flow1's frame times. slack < 0 uses the crude O(h)
// surrogate 2 (h1 + h2) for the scheme transport error.
inline CheckReport check_w_contraction(const FlowRecord& f1, const FlowRecord& f2,
                                       double p, double slack = -1.0) {
  CheckReport r;
  r.name = "w_contraction";
  r.tolerance = (slack >= 0.0) ? slack : 2.0 * (f1.grid.h + f2.grid.h);
  double prev = std::numeric_limits<double>::infinity();
  r.worst = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < f1.frames.size(); ++k) {
    const double t = f1.frames[k].t;
    if (t < f2.frames.front().t - 1e-12 || t > f2.frames.back().t + 1e-12) continue;
    const GridDensity a = detail::unit_mass(detail::frame_density(f1, k));
    const GridDensity b = detail::unit_mass(detail::density_at_time(f2, t));
    const double w = wasserstein(a, b, p);
    r.measured.push_back({t, w});
    if (!r.measured.empty() && r.measured.size() > 1) {
      r.worst = std::max(r.worst, w - prev);
    }
    prev = w;
  }
  if (r.measured.size() < 2) {
    r.pass = false;
    r.detail = "need two overlapping frames";
    return r;
  }
  r.pass = r.worst <= r.tolerance;
  return r;
}

// Pointwise CDF ordering preserved along two lockstep-recorded flows on the
// same grid (frames must sit at identical times).
inline CheckReport check_comparison(const FlowRecord& lower, const FlowRecord& upper,
                                    double slack = 1e-8) {
  CheckReport r;
  r.name = "comparison";
  r.tolerance = slack;
  if (lower.kind != "cdf" || upper.kind != "cdf") {
    throw std::invalid_argument("check_comparison: takes CDF records");
  }
  if (!lower.grid.same_layout(upper.grid) ||
      lower.frames.size() != upper.frames.size()) {
    throw std::invalid_argument("check_comparison: records not aligned");
  }
  r.worst = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < lower.frames.size(); ++k) {
    if (std::abs(lower.frames[k].t - upper.frames[k].t) > 1e-10) {
      throw std::invalid_argument("check_comparison: frame times differ");
    }
    double viol = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < lower.frames[k].values.size(); ++i) {
      viol = std::max(viol, lower.frames[k].values[i] - upper.frames[k].values[i]);
    }
    r.measured.push_back({lower.frames[k].t, viol});
    r.worst = std::max(r.worst, viol);
  }
  r.pass = r.worst <= r.tolerance;
  return r;
}

// Variance growth: linear fit of Var(m_t) against t matches the expected
// slope (1 for the pure flow in these units) within rel_tol.
inline CheckReport check_variance_identity(const FlowRecord& flow,
                                           double expected_slope = 1.0,
                                           double rel_tol = 0.02) {
  CheckReport r;
  r.name = "variance_identity";
  for (size_t k = 0; k < flow.frames.size(); ++k) {
    const GridDensity m = detail::frame_density(flow, k);
    r.measured.push_back({flow.frames[k].t, variance(m)});
  }
  if (r.measured.size() < 2) {
    r.pass = false;
    r.detail = "need two frames";
    return r;
  }
  const double slope = detail::fit_slope(r.measured);
  r.tolerance = rel_tol * std::abs(expected_slope);
  r.worst = std::abs(slope - expected_slope) - r.tolerance;
  r.pass = r.worst <= 0.0;
  std::ostringstream os;
  os << "slope=" << slope << " expected=" << expected_slope;
  r.detail = os.str();
  return r;
}

// Three-way closure: particle runs (one per N, each possibly ensemble-
// averaged upstream), a PDE record, and an analytic reference m(t).
// Reports W1/W2 per sample time for the largest-N run and fits the
// particle-vs-analytic error against N; the fitted exponent must be within
// a factor `slope_factor` of -1/2.
inline CheckReport convergence_report(
    const std::vector<TrajectoryRecord>& particle_runs, const FlowRecord& pde,
    const std::function<GridDensity(double)>& analytic,
    const std::vector<double>& times, double slope_factor = 3.0) {
  CheckReport r;
  r.name = "convergence";
  if (particle_runs.empty()) throw std::invalid_argument("convergence_report: no runs");

  auto ensemble_at = [](const TrajectoryRecord& tr, double t) -> ParticleEnsemble {
    size_t best = 0;
    for (size_t k = 1; k < tr.frames.size(); ++k) {
      if (std::abs(tr.frames[k].t - t) < std::abs(tr.frames[best].t - t)) best = k;
    }
    return ParticleEnsemble(tr.frames[best].positions);
  };

  std::ostringstream os;
  const TrajectoryRecord& big = particle_runs.back();
  for (double t : times) {
    const ParticleEnsemble pe = ensemble_at(big, t);
    const GridDensity ref = detail::unit_mass(analytic(t));
    const GridDensity sol = detail::unit_mass(detail::density_at_time(pde, t));
    const double w1_pp = wasserstein(pe, sol, 1.0);
    const double w2_pp = wasserstein(pe, sol, 2.0);
    const double w2_pa = wasserstein(pe, ref, 2.0);
    const double w2_sa = wasserstein(sol, ref, 2.0);
    r.measured.push_back({t, w2_pp});
    os << "t=" << t << ": W1(part,pde)=" << w1_pp << " W2(part,pde)=" << w2_pp
       << " W2(part,ref)=" << w2_pa << " W2(pde,ref)=" << w2_sa << "; ";
  }

  // Error-vs-N trend at the last sample time.
  if (particle_runs.size() >= 2) {
    std::vector<CheckSample> loglog;
    const double t = times.back();
    const GridDensity ref = detail::unit_mass(analytic(t));
    for (const TrajectoryRecord& tr : particle_runs) {
      const ParticleEnsemble pe = ensemble_at(tr, t);
      loglog.push_back({std::log(static_cast<double>(pe.size())),
                        std::log(wasserstein(pe, ref, 2.0))});
    }
    const double slope = detail::fit_slope(loglog);
    os << "N-slope=" << slope;
    const double lo = -0.5 * slope_factor;
    const double hi = -0.5 / slope_factor;
    r.tolerance = slope_factor;
    r.worst = (slope < lo) ? (lo - slope) : ((slope > hi) ? (slope - hi) : -1.0);
    r.pass = slope >= lo && slope <= hi;
  } else {
    r.pass = true;
    r.worst = -1.0;
  }
  r.detail = os.str();
  return r;
}

}  // namespace dyson
