#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dyson/measure.hpp"

namespace dyson {

// Exact 1-D optimal transport through the quantile coupling:
//
//   W_p(mu, nu) = ( \int_0^1 |Q_mu(s) - Q_nu(s)|^p ds )^{1/p},
//
// where Q is the generalized inverse CDF. Grid densities give piecewise
// linear quantiles (breakpoints at the cell-edge CDF values), ensembles give
// step quantiles (breakpoints at k/N). On each merged segment the difference
// is affine, so every p in [1, inf) integrates in closed form via
// \int |z|^p dz = |z|^p z / (p+1); p = inf is a max over breakpoints.

// Quantile function in enter/exit form: segment k runs linearly from
// (s[k], exit[k]) to (s[k+1], enter[k+1]); jumps are enter[k] != exit[k].
struct QuantileCurve {
  std::vector<double> s;
  std::vector<double> enter;
  std::vector<double> exit;

  double eval(int seg, double at) const {
    const double s0 = s[static_cast<size_t>(seg)];
    const double s1 = s[static_cast<size_t>(seg) + 1];
    const double q0 = exit[static_cast<size_t>(seg)];
    const double q1 = enter[static_cast<size_t>(seg) + 1];
    if (s1 <= s0) return q0;
    return q0 + (q1 - q0) * (at - s0) / (s1 - s0);
  }

  // Index of the native segment containing [a, b].
  int locate(double a, double b) const {
    const double mid = 0.5 * (a + b);
    int lo = 0, hi = static_cast<int>(s.size()) - 2;
    while (lo < hi) {
      const int md = (lo + hi + 1) / 2;
      if (s[static_cast<size_t>(md)] <= mid) {
        lo = md;
      } else {
        hi = md - 1;
      }
    }
    return lo;
  }
};

inline QuantileCurve quantile_curve(const GridDensity& m,
                                    double mass_tol = 1e-8) {
  if (m.exterior_left.mass != 0.0 || m.exterior_right.mass != 0.0) {
    throw std::invalid_argument("quantile_curve: window the measure fully");
  }
  const double total = m.mass();
  if (std::abs(total - 1.0) > mass_tol) {
    throw std::invalid_argument("quantile_curve: measure is not normalized");
  }
  const Grid& g = m.grid;
  QuantileCurve q;
  double acc = 0.0;
  double pending_enter = g.left_edge();
  q.s.push_back(0.0);
  q.enter.push_back(pending_enter);
  q.exit.push_back(pending_enter);
  for (int k = 0; k < g.n; ++k) {
    const double edge = g.left_edge() + (k + 1) * g.h;
    const double cell = g.h * m.values[static_cast<size_t>(k)] / total;
    if (cell > 0.0) {
      acc = std::min(1.0, acc + cell);
      q.s.push_back(acc);
      q.enter.push_back(edge);
      q.exit.push_back(edge);
    } else {
      // Zero cell: the quantile jumps across it; widen the exit position of
      // the current breakpoint.
      q.exit.back() = edge;
    }
  }
  q.s.back() = 1.0;
  return q;
}

inline QuantileCurve quantile_curve(const ParticleEnsemble& e) {
  const int n = e.size();
  if (n < 1) throw std::invalid_argument("quantile_curve: empty ensemble");
  QuantileCurve q;
  q.s.resize(static_cast<size_t>(n) + 1);
  q.enter.resize(static_cast<size_t>(n) + 1);
  q.exit.resize(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    q.s[static_cast<size_t>(k)] = static_cast<double>(k) / n;
    q.enter[static_cast<size_t>(k)] =
        e.positions[static_cast<size_t>(std::max(0, k - 1))];
    q.exit[static_cast<size_t>(k)] =
        e.positions[static_cast<size_t>(std::min(n - 1, k))];
  }
  return q;
}

inline double wasserstein(const QuantileCurve& a, const QuantileCurve& b,
                          double p) {
  if (p < 1.0) throw std::invalid_argument("wasserstein: need p >= 1");
  std::vector<double> breaks;
  breaks.reserve(a.s.size() + b.s.size());
  breaks.insert(breaks.end(), a.s.begin(), a.s.end());
  breaks.insert(breaks.end(), b.s.begin(), b.s.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  if (std::isinf(p)) {
    double mx = 0.0;
    for (size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double s0 = breaks[k], s1 = breaks[k + 1];
      if (s1 <= s0) continue;
      const int ia = a.locate(s0, s1), ib = b.locate(s0, s1);
      mx = std::max(mx, std::abs(a.eval(ia, s0) - b.eval(ib, s0)));
      mx = std::max(mx, std::abs(a.eval(ia, s1) - b.eval(ib, s1)));
    }
    return mx;
  }

  double acc = 0.0;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double s0 = breaks[k], s1 = breaks[k + 1];
    if (s1 <= s0) continue;
    const int ia = a.locate(s0, s1), ib = b.locate(s0, s1);
    const double z0 = a.eval(ia, s0) - b.eval(ib, s0);
    const double z1 = a.eval(ia, s1) - b.eval(ib, s1);
    const double slope = (z1 - z0) / (s1 - s0);
    if (std::abs(slope) < 1e-14) {
      acc += std::pow(std::abs(0.5 * (z0 + z1)), p) * (s1 - s0);
    } else {
      const double t1 = std::pow(std::abs(z1), p) * z1;
      const double t0 = std::pow(std::abs(z0), p) * z0;
      acc += (t1 - t0) / (slope * (p + 1.0));
    }
  }
  return std::pow(std::max(0.0, acc), 1.0 / p);
}

inline double wasserstein(const GridDensity& mu, const GridDensity& nu,
                          double p) {
  return wasserstein(quantile_curve(mu), quantile_curve(nu), p);
}
inline double wasserstein(const ParticleEnsemble& mu, const GridDensity& nu,
                          double p) {
  return wasserstein(quantile_curve(mu), quantile_curve(nu), p);
}
inline double wasserstein(const GridDensity& mu, const ParticleEnsemble& nu,
                          double p) {
  return wasserstein(quantile_curve(mu), quantile_curve(nu), p);
}
inline double wasserstein(const ParticleEnsemble& mu,
                          const ParticleEnsemble& nu, double p) {
  return wasserstein(quantile_curve(mu), quantile_curve(nu), p);
}

}  // namespace dyson
