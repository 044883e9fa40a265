#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <dyson/dyson.hpp>

using namespace dyson;

namespace {

// Largest |residual| over nodes strictly inside the bulk, edges trimmed.
double bulk_linf(const GridField& r, double lo, double hi) {
  double worst = 0.0;
  for (int i = 0; i < r.grid.n; ++i) {
    const double x = r.grid.x(i);
    if (x < lo || x > hi) continue;
    worst = std::max(worst, std::abs(r.values[static_cast<size_t>(i)]));
  }
  return worst;
}

}  // namespace

TEST_CASE("Marchenko-Pastur closed forms at aspect two", "[wishart]") {
  MarchenkoPastur mp(2.0);
  REQUIRE(mp.q() == Catch::Approx(0.5));

  const auto [lm, lp] = mp.edges();
  REQUIRE(lm == Catch::Approx(1.5 - std::sqrt(2.0)).margin(1e-14));
  REQUIRE(lp == Catch::Approx(1.5 + std::sqrt(2.0)).margin(1e-14));

  REQUIRE(mp.density(lm) == 0.0);
  REQUIRE(mp.density(lp) == 0.0);
  REQUIRE(mp.density(-0.5) == 0.0);
  REQUIRE(mp.density(1.0) ==
          Catch::Approx(std::sqrt((lp - 1.0) * (1.0 - lm)) /
                        std::numbers::pi)
              .margin(1e-14));

  REQUIRE_THROWS_AS(MarchenkoPastur(0.5), std::invalid_argument);
}

TEST_CASE("Marchenko-Pastur CDF quadrature hits frozen references",
          "[wishart]") {
  MarchenkoPastur mp(2.0);
  const auto [lm, lp] = mp.edges();
  REQUIRE(mp.cdf(lm) == 0.0);
  REQUIRE(mp.cdf(lp) == 1.0);
  REQUIRE(mp.cdf(0.0) == 0.0);
  REQUIRE(mp.cdf(5.0) == 1.0);
  REQUIRE(mp.cdf(1.0) == Catch::Approx(0.576004215101848).margin(1e-6));
  REQUIRE(mp.cdf(1.5) == Catch::Approx(0.7542448820629977).margin(1e-6));
  // Strictly increasing across the bulk.
  double prev = 0.0;
  for (double x = 0.2; x <= 2.8; x += 0.2) {
    const double c = mp.cdf(x);
    REQUIRE(c > prev);
    prev = c;
  }
}

TEST_CASE("Marchenko-Pastur transform branches", "[wishart]") {
  MarchenkoPastur mp(2.0);
  // Bulk branch (x + q - 1) / (2 q x) at x = 1.
  REQUIRE(mp.hilbert(1.0) == Catch::Approx(0.5).margin(1e-14));
  // Outside branch at x = 4: (3.5 - sqrt(4.25)) / 4.
  REQUIRE(mp.hilbert(4.0) ==
          Catch::Approx((3.5 - std::sqrt(4.25)) / 4.0).margin(1e-12));
  // Finite limit -1 / (1 - q) = -2 at the origin.
  REQUIRE(mp.hilbert(0.0) == Catch::Approx(-2.0).margin(1e-3));
  // Stieltjes decay 1/x far out.
  REQUIRE(mp.hilbert(100.0) == Catch::Approx(0.01).margin(2e-4));
  // Continuity across the top edge.
  const auto [lm, lp] = mp.edges();
  REQUIRE(mp.hilbert(lp - 1e-10) ==
          Catch::Approx(mp.hilbert(lp + 1e-10)).margin(1e-4));
  REQUIRE(mp_edges(2.0).first == Catch::Approx(lm));
}

TEST_CASE("square aspect ratio has edges zero and four", "[wishart]") {
  MarchenkoPastur mp(1.0);
  const auto [lm, lp] = mp.edges();
  REQUIRE(lm == 0.0);
  REQUIRE(lp == 4.0);
  REQUIRE(mp.density(2.0) ==
          Catch::Approx(1.0 / (2.0 * std::numbers::pi)).margin(1e-14));
}

TEST_CASE("sampled Marchenko-Pastur carries unit mass", "[wishart]") {
  Grid g(0.0025, 0.005, 700);
  MarchenkoPastur mp(2.0);
  GridDensity raw = mp.sample(g, false);
  REQUIRE(raw.mass() == Catch::Approx(1.0).margin(2e-3));
  GridDensity unit = mp.sample(g);
  REQUIRE(unit.mass() == Catch::Approx(1.0).margin(1e-14));

  CdfGrid F = mp.sample_cdf(g);
  REQUIRE(F.values.front() == 0.0);
  REQUIRE(F.values.back() == 1.0);
}

TEST_CASE("stationarity residual vanishes in the raw bracket only",
          "[wishart]") {
  Grid g(0.0025, 0.005, 700);
  MarchenkoPastur mp(2.0);
  CdfGrid F = mp.sample_cdf(g);
  const auto [lm, lp] = mp.edges();

  GridField raw = mp_stationarity_residual(2.0, F);
  REQUIRE(bulk_linf(raw, lm + 0.1, lp - 0.1) < 0.05);

  GridField printed = mp_stationarity_residual(2.0, F, Convention::paper);
  REQUIRE(bulk_linf(printed, lm + 0.1, lp - 0.1) > 0.1);

  Grid bad(-0.5, 0.005, 700);
  CdfGrid Fb(bad, F.values);
  REQUIRE_THROWS_AS(mp_stationarity_residual(2.0, Fb), std::invalid_argument);
  REQUIRE_THROWS_AS(mp_stationarity_residual(0.5, F), std::invalid_argument);
}

TEST_CASE("half-line flow holds the Marchenko-Pastur profile",
          "[wishart]") {
  Grid g(0.005, 0.01, 330);
  MarchenkoPastur mp(2.0);
  CdfGrid init = mp.sample_cdf(g);

  CdfProblem p = wishart_cdf_problem(2.0);
  CdfSolveOptions opt;
  opt.t_end = 0.2;
  CdfFlowResult r = solve_cdf(p, init, opt);

  double drift = 0.0;
  for (size_t i = 0; i < init.values.size(); ++i) {
    drift = std::max(drift, std::abs(r.u.values[i] - init.values[i]));
  }
  REQUIRE(drift < 0.01);
  REQUIRE(r.record.final_time == Catch::Approx(0.2));
}
