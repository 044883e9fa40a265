#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <dyson/dyson.hpp>

using namespace dyson;

namespace {

// Exact spread family sqrt(1 + 4 t) written straight into a record, so the
// checks are exercised against data with no scheme error of its own.
FlowRecord family_record(double h, const std::vector<double>& times) {
  Grid g = make_grid(-3.5, 3.5, h);
  FlowRecord rec;
  rec.grid = g;
  rec.kind = "density";
  for (double t : times) {
    GridDensity m = sample_semicircle(g, std::sqrt(1.0 + 4.0 * t));
    FlowFrame f;
    f.t = t;
    f.values = m.values;
    rec.frames.push_back(std::move(f));
    rec.final_time = t;
  }
  return rec;
}

FlowRecord solved_record(double radius, double t_end) {
  GridDensity init = sample_semicircle(make_grid(-3.5, 3.5, 0.02), radius);
  DensityProblem p;
  DensitySolveOptions opt;
  opt.t_end = t_end;
  opt.record_every = 10;
  return solve_density(p, init, opt).record;
}

}  // namespace

TEST_CASE("sup bound and norm decay hold along a solved flow",
          "[diagnostics]") {
  FlowRecord flow = solved_record(1.0, 0.5);

  CheckReport linf = check_linf_bound(flow);
  INFO(linf.summary_line());
  REQUIRE(linf.pass);
  REQUIRE(linf.detail.find("C_fit=") != std::string::npos);
  REQUIRE(linf.summary_line().rfind("[PASS]", 0) == 0);

  CheckReport lp = check_lp_decay(
      flow, {2.0, 3.0, std::numeric_limits<double>::infinity()});
  INFO(lp.summary_line());
  REQUIRE(lp.pass);
  REQUIRE_FALSE(lp.measured.empty());
}

TEST_CASE("sup bound reports the empty-window case", "[diagnostics]") {
  FlowRecord flow = family_record(0.05, {0.0});
  CheckReport r = check_linf_bound(flow);
  REQUIRE_FALSE(r.pass);
  REQUIRE(r.detail == "no frames at t >= t_min");
}

TEST_CASE("norm decay flags an artificial growth", "[diagnostics]") {
  Grid g = make_grid(-1.0, 1.0, 0.1);
  FlowRecord rec;
  rec.grid = g;
  rec.kind = "density";
  FlowFrame a;
  a.t = 0.0;
  a.values.assign(static_cast<size_t>(g.n), 0.5);
  FlowFrame b;
  b.t = 1.0;
  b.values.assign(static_cast<size_t>(g.n), 1.0);
  rec.frames = {a, b};

  CheckReport r = check_lp_decay(rec, {2.0});
  REQUIRE_FALSE(r.pass);
  REQUIRE(r.worst > 0.0);
  REQUIRE(r.summary_line().rfind("[FAIL]", 0) == 0);
  REQUIRE(r.to_json()["worst_violation"].get<double>() > 0.0);
  REQUIRE(r.to_json()["name"] == "lp_decay");
}

TEST_CASE("entropy identity closes on the exact spread family",
          "[diagnostics]") {
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(0.1 + 0.9 * k / 20.0);
  FlowRecord rec = family_record(0.01, times);

  CheckReport r = check_entropy_identity(rec, 0.1, 1.0);
  INFO(r.summary_line());
  REQUIRE(r.pass);

  // The measured series is the energy itself; its increment over the
  // window is log(t1/t0)/4 with t = (1 + 4 tau) / 4.
  const double de = r.measured.back().value - r.measured.front().value;
  REQUIRE(de == Catch::Approx(0.25 * std::log(5.0 / 1.4)).margin(2e-3));
}

TEST_CASE("entropy identity needs two frames in the window",
          "[diagnostics]") {
  FlowRecord rec = family_record(0.05, {0.0, 0.5});
  CheckReport r = check_entropy_identity(rec, 0.4, 0.6);
  REQUIRE_FALSE(r.pass);
  REQUIRE(r.detail == "need two frames inside the window");
}

TEST_CASE("variance growth matches the unit slope", "[diagnostics]") {
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(0.1 * k);
  FlowRecord rec = family_record(0.01, times);
  CheckReport r = check_variance_identity(rec);
  INFO(r.summary_line());
  REQUIRE(r.pass);
}

TEST_CASE("transport distance between two flows contracts", "[diagnostics]") {
  FlowRecord a = solved_record(1.0, 0.5);
  FlowRecord b = solved_record(1.2, 0.5);
  CheckReport r = check_w_contraction(a, b, 2.0);
  INFO(r.summary_line());
  REQUIRE(r.pass);
  REQUIRE(r.measured.size() >= 2);
  // Nested bulks pull together: (sqrt(1.44+4t) - sqrt(1+4t)) / 2 shrinks.
  REQUIRE(r.measured.back().value < r.measured.front().value);
}

TEST_CASE("CDF ordering check accepts lockstep flows and sees tampering",
          "[diagnostics]") {
  Grid g = make_grid(-3.0, 3.0, 0.02);
  auto seeded = [&](double center) {
    Semicircle sc(1.0);
    std::vector<double> u(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
      u[static_cast<size_t>(i)] = sc.cdf(g.x(i) - center);
    }
    return CdfGrid(g, std::move(u));
  };

  CdfProblem p;
  CdfSolver lower(p, seeded(0.3));   // right-shifted measure: smaller CDF
  CdfSolver upper(p, seeded(-0.3));
  CdfSolveOptions opt;
  opt.t_end = 0.4;
  opt.record_every = 20;
  advance_pair(lower, upper, opt);

  CheckReport ok = check_comparison(lower.record, upper.record);
  INFO(ok.summary_line());
  REQUIRE(ok.pass);
  REQUIRE(ok.worst <= 1e-8);

  FlowRecord tampered = upper.record;
  tampered.frames[1].values[5] -= 0.01;
  CheckReport bad = check_comparison(lower.record, tampered);
  REQUIRE_FALSE(bad.pass);
  REQUIRE(bad.worst > 5e-3);

  FlowRecord density_kind = upper.record;
  density_kind.kind = "density";
  REQUIRE_THROWS_AS(check_comparison(lower.record, density_kind),
                    std::invalid_argument);

  FlowRecord short_rec = upper.record;
  short_rec.frames.pop_back();
  REQUIRE_THROWS_AS(check_comparison(lower.record, short_rec),
                    std::invalid_argument);
}

TEST_CASE("frame helpers interpolate and normalize", "[diagnostics]") {
  Grid g = make_grid(-2.0, 2.0, 0.01);
  Semicircle sc(1.0);
  std::vector<double> u(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) u[static_cast<size_t>(i)] = sc.cdf(g.x(i));
  FlowRecord rec;
  rec.grid = g;
  rec.kind = "cdf";
  FlowFrame f;
  f.t = 0.0;
  f.values = u;
  rec.frames.push_back(f);

  GridDensity m = detail::frame_density(rec, 0);
  REQUIRE(m.values[static_cast<size_t>(g.node_index(0.0))] ==
          Catch::Approx(sc.density(0.0)).margin(1e-3));
  REQUIRE_THROWS_AS(detail::frame_density(rec, 3), std::out_of_range);

  FlowRecord two;
  two.grid = g;
  two.kind = "density";
  FlowFrame f0;
  f0.t = 0.0;
  f0.values.assign(static_cast<size_t>(g.n), 0.0);
  FlowFrame f1;
  f1.t = 1.0;
  f1.values.assign(static_cast<size_t>(g.n), 1.0);
  two.frames = {f0, f1};
  REQUIRE(detail::values_at_time(two, 0.25)[7] == Catch::Approx(0.25));
  REQUIRE(detail::values_at_time(two, -1.0)[0] == 0.0);
  REQUIRE(detail::values_at_time(two, 9.0)[0] == 1.0);
  FlowRecord empty;
  REQUIRE_THROWS_AS(detail::values_at_time(empty, 0.5), std::invalid_argument);

  GridDensity heavy(g, std::vector<double>(static_cast<size_t>(g.n), 2.0));
  REQUIRE(detail::unit_mass(heavy).mass() == Catch::Approx(1.0).margin(1e-12));
  GridDensity zero(g, std::vector<double>(static_cast<size_t>(g.n), 0.0));
  REQUIRE_THROWS_AS(detail::unit_mass(zero), std::invalid_argument);
}

TEST_CASE("slope fit is exact on a line and rejects degeneracy",
          "[diagnostics]") {
  std::vector<CheckSample> line = {
      {0.0, 2.0}, {0.5, 3.5}, {1.0, 5.0}, {2.0, 8.0}};
  REQUIRE(detail::fit_slope(line) == Catch::Approx(3.0).margin(1e-12));

  std::vector<CheckSample> one = {{0.0, 2.0}};
  REQUIRE_THROWS_AS(detail::fit_slope(one), std::invalid_argument);
  std::vector<CheckSample> flat = {{1.0, 2.0}, {1.0, 3.0}};
  REQUIRE_THROWS_AS(detail::fit_slope(flat), std::invalid_argument);
}
