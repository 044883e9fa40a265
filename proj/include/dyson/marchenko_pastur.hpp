#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "dyson/half_laplacian.hpp"
#include "dyson/measure.hpp"
#include "dyson/semicircle.hpp"

namespace dyson {

// Marchenko-Pastur family on the positive half-line, parametrized by
// eta >= 1 (aspect ratio q = 1/eta <= 1):
//
//   density  m(x) = eta sqrt((l+ - x)(x - l-)) / (2 pi x)  on [l-, l+],
//   edges    l± = (1 ± sqrt(1/eta))^2.
//
// This is the stationary state of the half-line flow with velocity
// V(x) = (2/eta) x H[m](x) + (eta - 1)/eta - x under the library Hilbert
// convention; in the bulk H[m](x) = (x + q - 1) / (2 q x).

struct MarchenkoPastur {
  double eta = 2.0;

  explicit MarchenkoPastur(double e) : eta(e) {
    if (!(e >= 1.0)) throw std::invalid_argument("MarchenkoPastur: eta >= 1");
  }

  double q() const { return 1.0 / eta; }

  std::pair<double, double> edges() const {
    const double r = std::sqrt(q());
    return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
  }

  double density(double x) const {
    const auto [lm, lp] = edges();
    if (x <= lm || x >= lp || x <= 0.0) return 0.0;
    return eta * std::sqrt((lp - x) * (x - lm)) / (2.0 * std::numbers::pi * x);
  }

  // CDF by quadrature of the closed-form density under the substitution
  // x = l- + (l+ - l-) sin^2(theta), which removes both edge square roots;
  // composite Simpson on the smooth integrand (absolute error ~1e-12).
  double cdf(double x) const {
    const auto [lm, lp] = edges();
    if (x <= lm) return 0.0;
    if (x >= lp) return 1.0;
    const double span = lp - lm;
    const double theta_x = std::asin(std::sqrt((x - lm) / span));
    auto integrand = [&](double th) {
      const double st = std::sin(th), ct = std::cos(th);
      const double xx = lm + span * st * st;
      return eta * span * span * st * st * ct * ct /
             (std::numbers::pi * xx);
    };
    const int npan = 256;
    const double dth = theta_x / npan;
    double s = integrand(0.0) + integrand(theta_x);
    for (int i = 1; i < npan; ++i) {
      s += integrand(i * dth) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return std::min(1.0, s * dth / 3.0);
  }

  // H[m](x) under the library convention, all branches (Stieltjes boundary
  // value; tends to 1/x at infinity, finite at 0+ for eta > 1).
  double hilbert(double x) const {
    const auto [lm, lp] = edges();
    const double qq = q();
    if (x > lm && x < lp) return (x + qq - 1.0) / (2.0 * qq * x);
    if (x == 0.0) {
      // x -> 0 is a 0/0 form on the branch below with finite limit
      // -1 / (1 - q) for eta > 1; evaluate just off zero instead.
      return hilbert(1e-12);
    }
    const double root = std::sqrt((x - lp) * (x - lm));  // > 0 off [l-, l+]
    if (x >= lp) return (x + qq - 1.0 - root) / (2.0 * qq * x);
    return (x + qq - 1.0 + root) / (2.0 * qq * x);  // x < l-, including x < 0
  }

  GridDensity sample(const Grid& g, bool renormalize = true) const {
    std::vector<double> v(static_cast<size_t>(g.n), 0.0);
    for (int i = 0; i < g.n; ++i) v[static_cast<size_t>(i)] = density(g.x(i));
    GridDensity out(g, std::move(v), false);
    if (renormalize) {
      const double mass = out.mass();
      if (mass <= 0.0) throw std::invalid_argument("MarchenkoPastur: grid misses support");
      for (double& y : out.values) y /= mass;
      out.normalized = true;
    }
    return out;
  }

  CdfGrid sample_cdf(const Grid& g) const {
    std::vector<double> v(static_cast<size_t>(g.n), 0.0);
    for (int i = 0; i < g.n; ++i) v[static_cast<size_t>(i)] = cdf(g.x(i));
    return CdfGrid(g, std::move(v));
  }
};

inline std::pair<double, double> mp_edges(double eta) {
  return MarchenkoPastur(eta).edges();
}

// Pointwise residual of the stationarity identity, evaluated with the
// library's split quadrature on the half-line (zero Dirichlet extension).
//
// raw   : dF/dx * [ (2/eta) x A0+[F](x) + (eta - 1)/eta - x ]
// paper : dF/dx * [ eta - 1 - x + x (A0+[F](x) - F(x)/x) ]   (as printed)
//
// A0+ denotes the half-line operator; subtracting F(x)/x converts it to the
// integral over (0, inf) only, which is the form the printed identity uses.
// The raw bracket vanishes on Marchenko-Pastur data; the printed one does
// not (it is retained for comparison).
inline GridField mp_stationarity_residual(double eta, const CdfGrid& F,
                                          Convention conv = Convention::raw) {
  if (!(eta >= 1.0)) throw std::invalid_argument("mp_stationarity_residual: eta >= 1");
  if (F.grid.x0 <= 0.0) {
    throw std::invalid_argument("mp_stationarity_residual: grid must lie in (0, inf)");
  }
  GridField u(F.grid, F.values);
  HalfLaplacianOptions opt;
  opt.half_line = true;
  opt.u_right = 1.0;
  const HalfLaplacianResult a0 = half_laplacian_field(u, opt);

  GridField out(F.grid);
  const int n = F.grid.n;
  const double h = F.grid.h;
  for (int i = 0; i < n; ++i) {
    const double x = F.grid.x(i);
    // Centered density, one-sided at the window ends.
    double dF;
    if (i == 0) {
      dF = (F.values[1] - F.values[0]) / h;
    } else if (i == n - 1) {
      dF = (F.values[static_cast<size_t>(n - 1)] - F.values[static_cast<size_t>(n - 2)]) / h;
    } else {
      dF = (F.values[static_cast<size_t>(i + 1)] - F.values[static_cast<size_t>(i - 1)]) /
           (2.0 * h);
    }
    const double a = a0.values[static_cast<size_t>(i)];
    double bracket;
    if (conv == Convention::raw) {
      bracket = (2.0 / eta) * x * a + (eta - 1.0) / eta - x;
    } else {
      bracket = eta - 1.0 - x + x * a - F.values[static_cast<size_t>(i)];
    }
    out.values[static_cast<size_t>(i)] = dF * bracket;
  }
  return out;
}

}  // namespace dyson
