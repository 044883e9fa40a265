// Acceptance gate for the library: fourteen numbered criteria, each
// printing exactly one [PASS]/[FAIL] line with the measured figure and the
// pinned tolerance.  Run a single criterion with --run <id>, list ids with
// --list, run everything with no arguments.  Exit status is 0 only when
// every executed criterion passes.
//
// Tolerances are fixed here, in code, and are not derived from the runs
// they judge.  Where a criterion compares two routes (simulation against
// solver, solver against closed form), both routes stay independent.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <dyson/dyson.hpp>

namespace {

using namespace dyson;

struct Outcome {
  bool pass = false;
  double worst = 0.0;  // measured figure, compared against tol
  double tol = 0.0;
  std::string detail;
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return std::string(buf);
}

// Normalizes a nonnegative node vector to unit mass on g.
GridDensity unit_density(const Grid& g, std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  s *= g.h;
  for (double& x : v) x /= s;
  return GridDensity(g, std::move(v), true);
}

GridDensity delta_density(const Grid& g, double center) {
  std::vector<double> v(static_cast<std::size_t>(g.n), 0.0);
  v[static_cast<std::size_t>(g.node_index(center))] = 1.0 / g.h;
  return GridDensity(g, std::move(v), true);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s = std::max(s, std::abs(a[i] - b[i]));
  }
  return s;
}

// ---------------------------------------------------------------------------
// 01. Regularizing bound.  Five unit-mass seeds of very different shape and
// starting height are evolved with the pure kernel; every recorded frame in
// t in [0.05, 1] must satisfy ||m(t)||_inf sqrt(t) <= 1.1.  The bound is the
// self-similar peak 2/(2 pi sqrt(t)) sqrt(t) ~ 0.318 plus headroom for seeds
// that have not yet forgotten their shape.

Outcome criterion_01() {
  const double h = 0.005;  // 1/200
  const Grid g = make_grid(-2.6, 2.6, h);
  const int n = g.n;

  std::vector<std::pair<std::string, GridDensity>> seeds;
  {
    // Dirac-like: all mass in one cell, height 200 (under the 1e3 ceiling).
    seeds.emplace_back("dirac", delta_density(g, 0.0));

    // Bimodal: two triangular bumps at +-0.8.
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = g.x(i);
      v[static_cast<std::size_t>(i)] =
          std::max(0.0, 1.0 - std::abs(x - 0.8) / 0.25) +
          std::max(0.0, 1.0 - std::abs(x + 0.8) / 0.25);
    }
    seeds.emplace_back("bimodal", unit_density(g, v));

    // Uniform block on [-0.5, 0.5].
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      if (std::abs(g.x(i)) <= 0.5) v[static_cast<std::size_t>(i)] = 1.0;
    }
    seeds.emplace_back("uniform", unit_density(g, v));

    // Skewed: asymmetric hat rising on [-0.6, 0.1], dropping on [0.1, 0.2].
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = g.x(i);
      if (x >= -0.6 && x <= 0.1) {
        v[static_cast<std::size_t>(i)] = (x + 0.6) / 0.7;
      } else if (x > 0.1 && x <= 0.2) {
        v[static_cast<std::size_t>(i)] = (0.2 - x) / 0.1;
      }
    }
    seeds.emplace_back("skewed", unit_density(g, v));

    // Heavy peak: narrow off-center Gaussian, height ~ 20.
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double z = (g.x(i) - 0.15) / 0.02;
      v[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
    }
    seeds.emplace_back("peak", unit_density(g, v));
  }

  Outcome o;
  o.tol = 1.1;
  o.pass = true;
  double worst_fit = 0.0;
  std::string per_seed;
  for (const auto& [name, init] : seeds) {
    if (lp_norm(init, std::numeric_limits<double>::infinity()) > 1e3) {
      o.pass = false;
      per_seed += " " + name + ":seed-too-tall";
      continue;
    }
    DensityProblem p;
    DensitySolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 10;
    const DensityFlowResult r = solve_density(p, init, opt);
    const CheckReport rep = check_linf_bound(r.record, 1.1, 0.05);
    const double fit = rep.worst + 1.1;  // reported as C_fit - limit
    worst_fit = std::max(worst_fit, fit);
    o.pass = o.pass && rep.pass;
    per_seed += " " + name + "=" + fmt(fit);
  }
  o.worst = worst_fit;
  o.detail = "sup ||m||_inf sqrt(t) per seed:" + per_seed;
  return o;
}

// ---------------------------------------------------------------------------
// 02. Quadratic Hilbert identity.  For the piecewise-linear interpolant of a
// profile u, int H[u]^2 u == (pi^2/3) int u^3 up to quadrature error.  The
// relative residual must sit under 1e-2 at h = 1/400 and must shrink under
// h -> h/2.  The shrink factor is pinned at 0.75 rather than 0.5 because the
// uniform block has log-singular integrand corners, where halving h scales
// the error by ~ (ln(h/2)/ln h)^2 / 2 ~ 0.6.

Outcome criterion_02() {
  Outcome o;
  o.tol = 1e-2;
  o.pass = true;
  double worst_rel = 0.0;
  double worst_ratio = 0.0;
  std::string d;
  for (int prof = 0; prof < 2; ++prof) {
    double rel[2] = {0.0, 0.0};
    for (int lev = 0; lev < 2; ++lev) {
      const double h = (lev == 0) ? 1.0 / 400 : 1.0 / 800;
      GridDensity u = (prof == 0)
                          ? GridDensity(make_grid(0.0, 1.0, h),
                                        std::vector<double>(
                                            static_cast<std::size_t>(
                                                make_grid(0.0, 1.0, h).n),
                                            1.0))
                          : sample_semicircle(make_grid(-2.0, 2.0, h), 2.0);
      const CotlarResult c = cotlar_residual(u, 8);
      rel[lev] = std::abs(c.residual) / c.rhs;
    }
    const double ratio = rel[1] / rel[0];
    worst_rel = std::max(worst_rel, rel[0]);
    worst_ratio = std::max(worst_ratio, ratio);
    d += (prof == 0 ? std::string(" uniform") : std::string(" semicircle")) +
         ": rel=" + fmt(rel[0]) + " ratio(h/2)=" + fmt(ratio);
  }
  o.worst = worst_rel;
  o.pass = worst_rel <= o.tol && worst_ratio <= 0.75;
  o.detail = d + "  (ratio cap 0.75)";
  return o;
}

// ---------------------------------------------------------------------------
// 03. Free-entropy production.  Along a solved flow, E(t) - E(s) must match
// the time integral of int H[m]^2 m to 1% of the increment on [0.1, 1].
// Independently, the closed-form increment on the self-similar family,
// E(t) - E(s) = (1/4) log(t/s), must be reproduced by the entropy quadrature
// on sampled semicircles to 1e-3.

Outcome criterion_03() {
  const Grid g = make_grid(-3.5, 3.5, 0.005);
  DensityProblem p;
  DensitySolveOptions opt;
  opt.t_end = 1.0;
  opt.record_every = 5;
  const DensityFlowResult r = solve_density(p, sample_semicircle(g, 1.0), opt);
  const CheckReport rep = check_entropy_identity(r.record, 0.1, 1.0);

  double closed_worst = 0.0;
  const double ts[3] = {0.25, 0.5, 1.0};
  double ent[3];
  const Grid ge = make_grid(-2.9, 2.9, 0.005);
  for (int i = 0; i < 3; ++i) {
    ent[i] = free_entropy(sample_semicircle(ge, 2.0 * std::sqrt(ts[i])));
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double err =
          std::abs((ent[j] - ent[i]) - 0.25 * std::log(ts[j] / ts[i]));
      closed_worst = std::max(closed_worst, err);
    }
  }

  Outcome o;
  o.tol = rep.tolerance;
  o.worst = std::abs(rep.worst + rep.tolerance);  // residual magnitude
  o.pass = rep.pass && closed_worst <= 1e-3;
  o.detail = rep.detail + "  closed-form pairwise err=" + fmt(closed_worst) +
             " (cap 1e-3)";
  return o;
}

// ---------------------------------------------------------------------------
// 04. Lp decay.  ||m(t)||_p is nonincreasing for p in {2, 3, inf} across a
// suite of flows: the five seeds of criterion 01 at h = 1/100, a sigma = 2
// run, and a viscous run.  Slack 1e-6 plus the recorded clip/clamp health.

Outcome criterion_04() {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> ps = {2.0, 3.0, inf};
  const double h = 0.01;
  const Grid g = make_grid(-2.6, 2.6, h);

  std::vector<std::pair<std::string, FlowRecord>> flows;
  {
    std::vector<GridDensity> seeds;
    seeds.push_back(delta_density(g, 0.0));
    std::vector<double> v(static_cast<std::size_t>(g.n), 0.0);
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      v[static_cast<std::size_t>(i)] =
          std::max(0.0, 1.0 - std::abs(x - 0.8) / 0.25) +
          std::max(0.0, 1.0 - std::abs(x + 0.8) / 0.25);
    }
    seeds.push_back(unit_density(g, v));
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < g.n; ++i) {
      if (std::abs(g.x(i)) <= 0.5) v[static_cast<std::size_t>(i)] = 1.0;
    }
    seeds.push_back(unit_density(g, v));
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      if (x >= -0.6 && x <= 0.1) {
        v[static_cast<std::size_t>(i)] = (x + 0.6) / 0.7;
      } else if (x > 0.1 && x <= 0.2) {
        v[static_cast<std::size_t>(i)] = (0.2 - x) / 0.1;
      }
    }
    seeds.push_back(unit_density(g, v));
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < g.n; ++i) {
      const double z = (g.x(i) - 0.15) / 0.02;
      v[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
    }
    seeds.push_back(unit_density(g, v));

    DensityProblem p;
    DensitySolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 10;
    const char* names[5] = {"dirac", "bimodal", "uniform", "skewed", "peak"};
    for (int s = 0; s < 5; ++s) {
      flows.emplace_back(names[s],
                         solve_density(p, seeds[static_cast<std::size_t>(s)],
                                       opt)
                             .record);
    }

    const Grid gs = make_grid(-3.0, 3.0, h);
    DensitySolveOptions half = opt;
    half.t_end = 0.5;
    flows.emplace_back(
        "sigma2", solve_sigma(p, [](double) { return 2.0; },
                              sample_semicircle(gs, 1.0), half)
                      .record);
    DensityProblem pv;
    pv.viscosity = 0.01;
    flows.emplace_back(
        "viscous",
        solve_density(pv, sample_semicircle(gs, 1.0), half).record);
  }

  Outcome o;
  o.pass = true;
  o.tol = 0.0;
  std::string d = "max interframe increase per flow:";
  for (const auto& [name, flow] : flows) {
    const CheckReport rep = check_lp_decay(flow, ps);
    o.pass = o.pass && rep.pass;
    o.worst = std::max(o.worst, rep.worst);
    o.tol = std::max(o.tol, rep.tolerance);
    d += " " + name + "=" + fmt(rep.worst);
  }
  o.detail = d;
  return o;
}

// ---------------------------------------------------------------------------
// 05. W2 contraction.  (a) Two delta seeds one unit apart evolve as exact
// translates: the W2 series is nonincreasing (slack 1e-6) and stays equal to
// 1 up to 1e-6.  (b) A delta seed inside a semicircle of radius 2: the gap
// is sqrt(t+1) - sqrt(t) on the nose, checked to 1% at three times.

Outcome criterion_05() {
  DensityProblem p;
  Outcome o;
  o.tol = 1e-6;
  o.pass = true;

  double const_worst = 0.0;
  {
    const Grid g = make_grid(-3.1, 4.1, 0.01);
    DensitySolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 10;
    const DensityFlowResult r0 = solve_density(p, delta_density(g, 0.0), opt);
    const DensityFlowResult r1 = solve_density(p, delta_density(g, 1.0), opt);
    const CheckReport rep = check_w_contraction(r0.record, r1.record, 2.0, 1e-6);
    o.pass = o.pass && rep.pass;
    const std::size_t k = std::min(r0.record.frames.size(),
                                   r1.record.frames.size());
    for (std::size_t i = 0; i < k; ++i) {
      const GridDensity a(g, r0.record.frames[i].values);
      const GridDensity b(g, r1.record.frames[i].values);
      const_worst = std::max(const_worst,
                             std::abs(wasserstein(a, b, 2.0) - 1.0));
    }
    o.pass = o.pass && const_worst <= 1e-6;
  }

  double nested_rel = 0.0;
  {
    const Grid g = make_grid(-3.2, 3.2, 0.005);
    DensitySolver sa(p, delta_density(g, 0.0));
    DensitySolver sb(p, sample_semicircle(g, 2.0));
    for (const double t : {0.25, 0.5, 1.0}) {
      DensitySolveOptions seg;
      seg.t_end = t;
      seg.record_every = 0;
      sa.advance(seg);
      sb.advance(seg);
      const double w = wasserstein(sa.solution(), sb.solution(), 2.0);
      const double exact = std::sqrt(t + 1.0) - std::sqrt(t);
      nested_rel = std::max(nested_rel, std::abs(w - exact) / exact);
    }
    o.pass = o.pass && nested_rel <= 0.01;
  }

  o.worst = const_worst;
  o.detail = "translate |W2-1|=" + fmt(const_worst) +
             "  nested rel err=" + fmt(nested_rel) + " (cap 0.01)";
  return o;
}

// ---------------------------------------------------------------------------
// 06. Comparison principle.  Ten randomized ordered CDF pairs (five pure
// kernel, five Gaussian kernel with g >= 0) evolve in lockstep to t = 1 and
// must stay ordered to 1e-8 at every node of every shared frame.

Outcome criterion_06() {
  // A few positive bumps, accumulated and scaled into a CDF on g.
  const auto random_cdf = [](const Grid& g, std::uint64_t seed) {
    std::vector<double> w(static_cast<std::size_t>(g.n), 0.0);
    const int nb = 3 + static_cast<int>(3.0 * dyson::uniform(seed, 0, 0));
    for (int b = 0; b < nb; ++b) {
      const double c = -1.5 + 3.0 * dyson::uniform(seed, 1, b);
      const double width = 0.3 + 0.6 * dyson::uniform(seed, 2, b);
      const double amp = 0.2 + dyson::uniform(seed, 3, b);
      for (int i = 0; i < g.n; ++i) {
        const double z = (g.x(i) - c) / width;
        w[static_cast<std::size_t>(i)] += amp * std::exp(-z * z);
      }
    }
    std::vector<double> u(static_cast<std::size_t>(g.n), 0.0);
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
      acc += w[static_cast<std::size_t>(i)] * g.h;
      u[static_cast<std::size_t>(i)] = acc;
    }
    for (double& x : u) x /= acc;
    u.front() = 0.0;
    u.back() = 1.0;
    return u;
  };

  Outcome o;
  o.tol = 1e-8;
  o.pass = true;
  o.worst = -std::numeric_limits<double>::infinity();
  for (int pair = 0; pair < 10; ++pair) {
    const bool pure = pair < 5;
    // The general-kernel velocity costs O(n^2) kernel calls per step, so the
    // Gaussian pairs run on a coarser grid; the ordering claim is the same.
    const Grid g = pure ? make_grid(-4.0, 4.0, 0.01) : make_grid(-4.0, 4.0, 0.02);
    const std::vector<double> ua = random_cdf(g, 1000 + 2 * static_cast<std::uint64_t>(pair));
    const std::vector<double> ub = random_cdf(g, 1001 + 2 * static_cast<std::uint64_t>(pair));
    std::vector<double> lo(ua.size()), hi(ua.size());
    for (std::size_t i = 0; i < ua.size(); ++i) {
      lo[i] = std::min(ua[i], ub[i]);
      hi[i] = std::max(ua[i], ub[i]);
    }
    CdfProblem prob;
    if (!pure) prob.kernel = kernels::gaussian();
    CdfSolver sl(prob, CdfGrid(g, lo));
    CdfSolver su(prob, CdfGrid(g, hi));
    CdfSolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 10;
    advance_pair(sl, su, opt);
    const CheckReport rep = check_comparison(sl.record, su.record, 1e-8);
    o.pass = o.pass && rep.pass;
    o.worst = std::max(o.worst, rep.worst);
  }
  o.detail = "max over 10 pairs of sup(lower - upper); 5 pure + 5 gaussian";
  return o;
}

// ---------------------------------------------------------------------------
// 07. Marchenko-Pastur stationarity.  The half-line flow started at MP(2)
// must drift at most 0.01 in sup norm over t in [0, 1], and the pointwise
// stationarity residual at h = 1/400 must stay under 0.05 across the bulk
// (edges excluded by 0.1, where the density derivative is singular).

Outcome criterion_07() {
  const double eta = 2.0;
  const auto [lm, lp] = mp_edges(eta);

  double bulk_sup = 0.0;
  {
    const double h = 0.0025;  // 1/400
    const Grid g{0.5 * h, h, 1320};
    const CdfGrid f = MarchenkoPastur(eta).sample_cdf(g);
    const GridField res = mp_stationarity_residual(eta, f, Convention::raw);
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      if (x < lm + 0.1 || x > lp - 0.1) continue;
      bulk_sup = std::max(bulk_sup, std::abs(res.values[static_cast<std::size_t>(i)]));
    }
  }

  double drift = 0.0;
  {
    const double h = 0.005;
    const Grid g{0.5 * h, h, 660};
    const CdfGrid init = MarchenkoPastur(eta).sample_cdf(g);
    CdfSolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 0;
    const CdfFlowResult r = solve_cdf(wishart_cdf_problem(eta), init, opt);
    drift = sup_diff(r.u.values, init.values);
  }

  Outcome o;
  o.worst = drift;
  o.tol = 0.01;
  o.pass = drift <= 0.01 && bulk_sup <= 0.05;
  o.detail = "sup-norm drift over [0,1]=" + fmt(drift) +
             "  bulk residual=" + fmt(bulk_sup) + " (cap 0.05)";
  return o;
}

// ---------------------------------------------------------------------------
// 08. Three-way closure at t = 1.  Pooled particle ensembles against the
// solved density: W2 <= 0.05 at N = 1000; solved density against the
// closed-form semicircle of radius sqrt(5): W2 <= 0.02; and the particle
// error must decay with N at a log-log slope within a factor 3 of -1/2.

Outcome criterion_08() {
  const Grid g = make_grid(-3.5, 3.5, 0.01);
  DensityProblem p;
  DensitySolveOptions opt;
  opt.t_end = 1.0;
  opt.record_every = 0;
  const DensityFlowResult pde = solve_density(p, sample_semicircle(g, 1.0), opt);
  const double w_oracle =
      wasserstein(pde.m, sample_semicircle(g, std::sqrt(5.0)), 2.0);

  const Semicircle sc(1.0);
  const int ns[3] = {100, 300, 1000};
  double werr[3] = {0.0, 0.0, 0.0};
  std::vector<CheckSample> loglog;
  for (int k = 0; k < 3; ++k) {
    const int n = ns[k];
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(20 * n));
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x0(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        x0[static_cast<std::size_t>(i)] = sc.quantile((i + 0.5) / n);
      }
      SdeConfig cfg;
      cfg.seed = 900 + 37 * static_cast<std::uint64_t>(n) +
                 static_cast<std::uint64_t>(rep);
      ParticleSim sim(cfg, ParticleEnsemble(x0));
      sim.simulate(1.0, 0.005, 0, nullptr);
      pooled.insert(pooled.end(), sim.state.positions.begin(),
                    sim.state.positions.end());
    }
    werr[k] = wasserstein(ParticleEnsemble(pooled), pde.m, 2.0);
    loglog.push_back({std::log(static_cast<double>(n)), std::log(werr[k])});
  }
  const double slope = detail::fit_slope(loglog);

  Outcome o;
  o.worst = werr[2];
  o.tol = 0.05;
  o.pass = werr[2] <= 0.05 && w_oracle <= 0.02 && slope <= -0.5 / 3.0 &&
           slope >= -1.5;
  o.detail = "W2(particle,pde) N=100:" + fmt(werr[0]) + " 300:" + fmt(werr[1]) +
             " 1000:" + fmt(werr[2]) + "  W2(pde,closed-form)=" + fmt(w_oracle) +
             " (cap 0.02)  slope=" + fmt(slope) + " (want -1/2 x3)";
  return o;
}

// ---------------------------------------------------------------------------
// 09. Pair gap law.  For two particles at gap s0, E[s_t^2] = s0^2 + 4t
// exactly.  Monte Carlo with 1e4 replicas must land within 3 standard
// errors at t = 0.25 and t = 1.

Outcome criterion_09() {
  const int replicas = 10000;
  const double dt = 1e-3;
  double sum[2] = {0.0, 0.0};
  double sumsq[2] = {0.0, 0.0};
  for (int rep = 0; rep < replicas; ++rep) {
    SdeConfig cfg;
    cfg.seed = 40000 + static_cast<std::uint64_t>(rep);
    ParticleSim sim(cfg, ParticleEnsemble(std::vector<double>{-0.5, 0.5}));
    sim.simulate(0.25, dt, 0, nullptr);
    double s = sim.state.positions[1] - sim.state.positions[0];
    sum[0] += s * s;
    sumsq[0] += s * s * s * s;
    sim.simulate(1.0, dt, 0, nullptr);
    s = sim.state.positions[1] - sim.state.positions[0];
    sum[1] += s * s;
    sumsq[1] += s * s * s * s;
  }
  Outcome o;
  o.tol = 3.0;
  o.pass = true;
  std::string d = "z-scores:";
  const double ts[2] = {0.25, 1.0};
  for (int k = 0; k < 2; ++k) {
    const double mean = sum[k] / replicas;
    const double var = sumsq[k] / replicas - mean * mean;
    const double se = std::sqrt(var / replicas);
    const double z = std::abs(mean - (1.0 + 4.0 * ts[k])) / se;
    o.worst = std::max(o.worst, z);
    o.pass = o.pass && z <= 3.0;
    d += " t=" + fmt(ts[k]) + ": mean=" + fmt(mean) + " z=" + fmt(z);
  }
  o.detail = d;
  return o;
}

// ---------------------------------------------------------------------------
// 10. Spike absorption.  An outlier at lambda0 = 1 over a Dirac bulk has
// Z_t = lambda_t^2 - 4t = (1 - t)^2: strictly decreasing while positive,
// vanishing at t0 = 1.  The coupled run must keep Z strictly decreasing
// before absorption, and t0 reconstructed from its trail must match the
// adaptive ODE integration of the same characteristic within 2%.  The
// numeric spike velocity carries a first-order-in-h error from the smeared
// bulk edge, so the vertex of the quadratic fit is computed at two
// resolutions over a shared early window and extrapolated in h.

// Least-squares parabola z ~ a t^2 + b t + c; returns its vertex -b/(2a).
double parabola_vertex(const std::vector<double>& ft,
                       const std::vector<double>& fz) {
  double m[3][4] = {{0.0}};
  for (std::size_t i = 0; i < ft.size(); ++i) {
    const double t = ft[i];
    const double basis[3] = {t * t, t, 1.0};
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) m[row][col] += basis[row] * basis[col];
      m[row][3] += basis[row] * fz[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
    }
    std::swap(m[col], m[piv]);
    for (int row = col + 1; row < 3; ++row) {
      const double f = m[row][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
    }
  }
  double coef[3];
  for (int row = 2; row >= 0; --row) {
    double s = m[row][3];
    for (int k = row + 1; k < 3; ++k) s -= m[row][k] * coef[k];
    coef[row] = s / m[row][row];
  }
  return -coef[1] / (2.0 * coef[0]);
}

Outcome criterion_10() {
  const SpikeOdeResult ode = integrate_spike_self_similar(1.0, 1.2);

  Outcome o;
  o.tol = 0.02;
  bool strict = true;
  bool absorbed = ode.absorbed;
  double vertex[2] = {0.0, 0.0};
  double fired[2] = {0.0, 0.0};
  const double hs[2] = {0.01, 0.005};
  for (int lev = 0; lev < 2; ++lev) {
    const Grid g = make_grid(-3.2, 3.2, hs[lev]);
    DensityProblem p;
    DensitySolveOptions opt;
    opt.t_end = 1.2;
    opt.record_every = 0;
    const DensityFlowResult r =
        solve_coupled(p, delta_density(g, 0.0), 1.0, opt);
    absorbed = absorbed && r.spike.absorbed;
    fired[lev] = r.spike.t_absorb;
    double prev_z = std::numeric_limits<double>::infinity();
    std::vector<double> ft, fz;
    for (const SpikeTrailPoint& pt : r.spike.trail) {
      if (pt.t >= r.spike.t_absorb) break;
      const double z = pt.position * pt.position - 4.0 * pt.t;
      if (z <= 0.0) break;
      if (z >= prev_z) strict = false;
      prev_z = z;
      if (pt.t >= 0.05 && pt.t <= 0.35) {
        ft.push_back(pt.t);
        fz.push_back(z);
      }
    }
    if (ft.size() < 10) {
      o.worst = std::numeric_limits<double>::infinity();
      o.detail = "trail too short for the vertex fit";
      return o;
    }
    vertex[lev] = parabola_vertex(ft, fz);
  }
  if (!absorbed) {
    o.worst = std::numeric_limits<double>::infinity();
    o.detail = "spike not absorbed by t=1.2";
    return o;
  }
  const double t0 = 2.0 * vertex[1] - vertex[0];
  const double rel = std::abs(t0 - ode.t_absorb) / ode.t_absorb;

  o.worst = rel;
  o.pass = strict && rel <= 0.02;
  o.detail = std::string("Z strictly decreasing: ") + (strict ? "yes" : "NO") +
             "  vertex h=0.01:" + fmt(vertex[0]) + " h=0.005:" + fmt(vertex[1]) +
             " extrapolated t0=" + fmt(t0) + " ode t0=" + fmt(ode.t_absorb) +
             "  detectors fired at " + fmt(fired[0]) + "/" + fmt(fired[1]);
  return o;
}

// ---------------------------------------------------------------------------
// 11. Soft wall.  A tall Dirac-like seed pushed against a one-sided penalty
// at x = 0 must never exceed its initial height (up to clip accounting),
// and the mass leaking past the wall at t = 1 must scale linearly in the
// penalty width eps across {1e-1, 1e-2, 1e-3}, within a factor of 2 per
// decade.  Two effects break that here and the criterion fails honestly.
// First, a gas with pairwise log repulsion pushed to equilibrium against a
// wall develops an inverse-square-root edge, and balancing its edge field
// c/sqrt(d) against the penalty d/eps gives layer width (c eps)^(2/3) and
// leaked mass ~ eps^(1/3), not eps; the measured decade ratios straddle
// 10^(1/3) ~ 2.15.  Second, observing any layer at eps = 1e-3 needs
// h ~ 5e-4, where the barrier stability cap cfl * eps * h puts the run at
// ~1e12 steps * nodes, out of desk reach for this explicit scheme.  The
// run below records the resolved decades and the observed exponent.

Outcome criterion_11() {
  const double h = 0.01;
  const Grid g = make_grid(-3.3, 0.3, h);
  const double eps_list[3] = {1e-1, 1e-2, 1e-3};
  double leak[3];
  double peak_margin = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    DensityProblem p;
    p.barrier = BarrierSpec{0.0, eps_list[k]};
    DensitySolveOptions opt;
    opt.t_end = 1.0;
    opt.record_every = 0;
    const DensityFlowResult r = solve_density(p, delta_density(g, -1.0), opt);
    const double allowed =
        (1.0 / h) * (1.0 + 1e-12) + r.record.clip_mass_max / h;
    peak_margin = std::max(peak_margin, r.record.max_abs_slope - allowed);
    double beyond = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (g.x(i) > 1e-9) beyond += r.m.values[static_cast<std::size_t>(i)] * h;
    }
    leak[k] = beyond;
  }
  const double r01 = leak[0] / leak[1];
  const double r12 = leak[1] / leak[2];
  const double dev = std::max(std::max(r01 / 10.0, 10.0 / r01),
                              std::max(r12 / 10.0, 10.0 / r12));
  Outcome o;
  o.worst = dev;
  o.tol = 2.0;
  o.pass = peak_margin <= 0.0 && dev <= 2.0;
  const double exponent = 0.5 * std::log10(leak[0] / leak[2]);
  o.detail = "leaked mass eps=1e-1:" + fmt(leak[0]) + " 1e-2:" + fmt(leak[1]) +
             " 1e-3:" + fmt(leak[2]) + "  observed exponent=" + fmt(exponent) +
             " (wall-edge law 1/3)  peak margin=" + fmt(peak_margin);
  return o;
}

// ---------------------------------------------------------------------------
// 12. Mobility rescaling.  sigma = 1 must reproduce the plain solve bit for
// bit; sigma = 2 run to t must match the plain run at 2t within L1 0.02.

Outcome criterion_12() {
  const Grid g = make_grid(-3.5, 3.5, 0.01);
  const GridDensity init = sample_semicircle(g, 1.0);
  DensityProblem p;
  DensitySolveOptions half;
  half.t_end = 0.5;
  half.record_every = 0;
  const DensityFlowResult plain_half = solve_density(p, init, half);
  const DensityFlowResult one =
      solve_sigma(p, [](double) { return 1.0; }, init, half);
  const bool identical = one.m.values == plain_half.m.values &&
                         one.record.steps == plain_half.record.steps;

  const DensityFlowResult two =
      solve_sigma(p, [](double) { return 2.0; }, init, half);
  DensitySolveOptions full;
  full.t_end = 1.0;
  full.record_every = 0;
  const DensityFlowResult plain_full = solve_density(p, init, full);
  double l1 = 0.0;
  for (std::size_t i = 0; i < two.m.values.size(); ++i) {
    l1 += std::abs(two.m.values[i] - plain_full.m.values[i]) * g.h;
  }

  Outcome o;
  o.worst = l1;
  o.tol = 0.02;
  o.pass = identical && l1 <= 0.02;
  o.detail = std::string("sigma=1 bitwise equal: ") + (identical ? "yes" : "NO") +
             "  L1(sigma=2 at t, plain at 2t)=" + fmt(l1);
  return o;
}

// ---------------------------------------------------------------------------
// 13. Stability without parabolicity.  A flat-top bump kernel has
// sign-changing beta (attraction at short range never arises; the collision
// coefficient flips sign with distance) while keeping g >= 1 > 0.  Two CDFs
// at sup distance 1e-3 must stay within 1.2e-3 * exp(C t) with C = 2 pinned.

Outcome criterion_13() {
  InteractionKernel k;
  const double a = 0.3, w = 0.9;
  const double w4 = w * w * w * w;
  k.f = [a, w](double x, double y) {
    const double v = (x - y) / w;
    return 1.0 + a * std::exp(-v * v * v * v);
  };
  k.df_dy = [a, w4](double x, double y) {
    const double u = x - y;
    const double q = u * u * u * u / w4;
    return a * std::exp(-q) * 4.0 * u * u * u / w4;
  };
  k.df_dx = [a, w4](double x, double y) {
    const double u = x - y;
    const double q = u * u * u * u / w4;
    return -a * std::exp(-q) * 4.0 * u * u * u / w4;
  };
  k.name = "flat-top bump";

  const Grid g = make_grid(-4.0, 4.0, 0.02);
  const Semicircle sc(1.0);
  std::vector<double> u0(static_cast<std::size_t>(g.n));
  std::vector<double> v0(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    const double u = sc.cdf(g.x(i));
    u0[static_cast<std::size_t>(i)] = u;
    v0[static_cast<std::size_t>(i)] = u + 4e-3 * u * (1.0 - u);
  }

  CdfProblem prob;
  prob.kernel = k;
  CdfSolver su(prob, CdfGrid(g, u0));
  CdfSolver sv(prob, CdfGrid(g, v0));
  CdfSolveOptions opt;
  opt.t_end = 1.0;
  opt.record_every = 10;
  advance_pair(su, sv, opt);

  const double c_pinned = 2.0;
  Outcome o;
  o.tol = 1.0;
  o.pass = true;
  double sup_final = 0.0;
  for (std::size_t f = 0; f < su.record.frames.size(); ++f) {
    const double t = su.record.frames[f].t;
    const double sup =
        sup_diff(su.record.frames[f].values, sv.record.frames[f].values);
    const double bound = 1.2e-3 * std::exp(c_pinned * t);
    o.worst = std::max(o.worst, sup / bound);
    if (f + 1 == su.record.frames.size()) sup_final = sup;
  }
  o.pass = o.worst <= 1.0;
  o.detail = "max over frames of sup-gap / (1.2e-3 exp(2t)); final gap=" +
             fmt(sup_final);
  return o;
}

// ---------------------------------------------------------------------------
// 14. Singular drift b = sign.  The one-sided (Filippov) run must preserve
// ordering of a CDF pair to 1e-8, and must be the eta -> 0 limit of runs
// with the smoothed drift clamp(x/eta): sup gap <= 1.0 * eta for
// eta in {0.2, 0.1, 0.05}, with the ratio gap/eta not growing as eta falls.

Outcome criterion_14() {
  const Grid g = make_grid(-4.0, 4.0, 0.01);
  const Semicircle sc(1.0);
  std::vector<double> u0(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    u0[static_cast<std::size_t>(i)] = sc.cdf(g.x(i) - 0.3);
  }
  const CdfGrid init(g, u0);

  CdfProblem psign;
  psign.kernel.drift = DriftSpec::singular_monotone(
      [](double x) { return x <= 0.0 ? -1.0 : 1.0; },
      [](double x) { return x < 0.0 ? -1.0 : 1.0; }, 0.0);
  CdfSolveOptions opt;
  opt.t_end = 0.5;
  opt.record_every = 0;
  const CdfFlowResult sign_run = solve_singular_drift(psign, init, opt);

  Outcome o;
  o.tol = 1.0;
  o.pass = true;
  const double etas[3] = {0.2, 0.1, 0.05};
  double ratio[3];
  std::string d = "gap/eta:";
  for (int k = 0; k < 3; ++k) {
    const double eta = etas[k];
    CdfProblem ps;
    ps.kernel.drift = DriftSpec::lipschitz(
        [eta](double x) { return std::clamp(x / eta, -1.0, 1.0); }, 1.0 / eta);
    const CdfFlowResult r = solve_cdf(ps, init, opt);
    ratio[k] = sup_diff(sign_run.u.values, r.u.values) / eta;
    o.worst = std::max(o.worst, ratio[k]);
    d += " eta=" + fmt(eta) + ":" + fmt(ratio[k]);
  }
  const bool linear = ratio[2] <= 2.0 * ratio[0];
  o.pass = o.worst <= 1.0 && linear;

  // Ordering under the singular drift itself.
  std::vector<double> v0(u0);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    v0[i] += 4e-3 * u0[i] * (1.0 - u0[i]);
  }
  CdfSolver lo(psign, init);
  CdfSolver hi(psign, CdfGrid(g, v0));
  CdfSolveOptions popt;
  popt.t_end = 0.5;
  popt.record_every = 10;
  advance_pair(lo, hi, popt);
  const CheckReport rep = check_comparison(lo.record, hi.record, 1e-8);
  o.pass = o.pass && rep.pass;
  o.detail = d + "  ordering worst=" + fmt(rep.worst) +
             (linear ? "" : "  RATIO GROWING");
  return o;
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* id;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"01_regularizing_bound", criterion_01},
    {"02_cotlar_identity", criterion_02},
    {"03_entropy_identity", criterion_03},
    {"04_lp_decay", criterion_04},
    {"05_w2_contraction", criterion_05},
    {"06_comparison_principle", criterion_06},
    {"07_mp_stationarity", criterion_07},
    {"08_three_way_closure", criterion_08},
    {"09_gap_law", criterion_09},
    {"10_spike_absorption", criterion_10},
    {"11_reflection", criterion_11},
    {"12_sigma_rescaling", criterion_12},
    {"13_gronwall_envelope", criterion_13},
    {"14_singular_drift", criterion_14},
};

int run_one(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("[%s] %-24s worst=%-10.4g tol=%-10.4g %s  [%.1fs]\n",
              o.pass ? "PASS" : "FAIL", c.id, o.worst, o.tol,
              o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 && std::strcmp(argv[1], "--list") == 0) {
    for (const Criterion& c : kCriteria) std::printf("%s\n", c.id);
    return 0;
  }
  if (argc >= 3 && std::strcmp(argv[1], "--run") == 0) {
    for (const Criterion& c : kCriteria) {
      if (std::strcmp(argv[2], c.id) == 0) return run_one(c);
    }
    std::fprintf(stderr, "unknown criterion id: %s\n", argv[2]);
    return 2;
  }
  int failures = 0;
  for (const Criterion& c : kCriteria) failures += run_one(c);
  if (failures > 0) {
    std::printf("%d of %d criteria failed\n", failures,
                static_cast<int>(std::size(kCriteria)));
  }
  return failures == 0 ? 0 : 1;
}
