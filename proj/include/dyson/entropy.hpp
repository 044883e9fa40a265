#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dyson/hilbert.hpp"
#include "dyson/measure.hpp"

namespace dyson {

// Logarithmic energy ("free entropy")
//
//   E(m) = 1/2 \int\int log|x - y| m(dx) m(dy),
//
// computed with exact cell-pair integration of the log kernel against the
// piecewise-constant density: no diagonal cutoff, so the dominant
// discretization bias of naive double quadrature is absent. For the uniform
// density the cell pairs tile the square exactly and E is exact at any h.

namespace detail {

inline double f1_logint(double w) {  // antiderivative of log w, F1(0) = 0
  return (w <= 0.0) ? 0.0 : w * std::log(w) - w;
}

inline double f2_logint(double w) {  // antiderivative of w log w, F2(0) = 0
  return (w <= 0.0) ? 0.0 : 0.5 * w * w * std::log(w) - 0.25 * w * w;
}

// \int_{cell_0}\int_{cell_k} log|x - y| dx dy for cells of width h whose
// centers are kh apart.
inline double cell_pair_log_integral(int k, double h) {
  if (k == 0) return h * h * (std::log(h) - 1.5);
  const double s = k * h;
  const double a = s - h, b = s + h;
  return (h - s) * (f1_logint(s) - f1_logint(a)) +
         (f2_logint(s) - f2_logint(a)) +
         (h + s) * (f1_logint(b) - f1_logint(s)) -
         (f2_logint(b) - f2_logint(s));
}

}  // namespace detail

// Returns -infinity when any single cell carries more than
// `concentration_threshold` of the total mass (the energy of a point mass).
inline double free_entropy(const GridDensity& m,
                           double concentration_threshold = 0.9) {
  m.validate();
  if (m.exterior_left.mass != 0.0 || m.exterior_right.mass != 0.0) {
    throw std::invalid_argument(
        "free_entropy: point masses outside the window have -inf self-energy; "
        "window the measure fully");
  }
  const int n = m.grid.n;
  const double h = m.grid.h;
  for (double v : m.values) {
    if (v * h > concentration_threshold) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  std::vector<double> table(static_cast<size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    table[static_cast<size_t>(k)] = detail::cell_pair_log_integral(k, h);
  }
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mi = m.values[static_cast<size_t>(i)];
    if (mi == 0.0) continue;
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      row += m.values[static_cast<size_t>(j)] *
             table[static_cast<size_t>(std::abs(i - j))];
    }
    e += mi * row;
  }
  return 0.5 * e;
}

// \int H[m]^2 m: the production rate of the free entropy along the flow.
inline double entropy_dissipation(const GridDensity& m) {
  const std::vector<double> hh = hilbert_field(m);
  double s = 0.0;
  for (int i = 0; i < m.grid.n; ++i) {
    s += hh[static_cast<size_t>(i)] * hh[static_cast<size_t>(i)] *
         m.values[static_cast<size_t>(i)];
  }
  return s * m.grid.h;
}

struct CotlarResult {
  double lhs = 0.0;       // \int H[u]^2 u
  double rhs = 0.0;       // (pi^2 / 3) \int u^3
  double residual = 0.0;  // lhs - rhs
};

// Integrated Cotlar identity: \int H[u]^2 u = (pi^2/3) \int u^3 under the
// convolution convention without 1/pi. u need not be normalized.
//
// Both sides are taken for the same piecewise-linear interpolant (including
// its closing ramps), for which the identity is exact: the cubic integral on
// the right is in closed form per cell, H on the left is the exact transform
// of the interpolant, and the only error left is the subdivided midpoint
// quadrature of H^2 u near the slope kinks.
inline CotlarResult cotlar_residual(const GridDensity& u, int subdivisions = 8) {
  if (subdivisions < 1) throw std::invalid_argument("cotlar_residual: subdivisions >= 1");
  CotlarResult r;
  const Grid& g = u.grid;
  const double h = g.h;
  auto node_value = [&u, &g](int i) -> double {
    if (i < 0 || i >= g.n) return 0.0;
    return u.values[static_cast<size_t>(i)];
  };
  const double sub = h / subdivisions;
  for (int cell = -1; cell < g.n; ++cell) {  // cell spans [x_cell, x_cell + h]
    const double a = g.x0 + cell * h;
    const double vl = node_value(cell);
    const double vr = node_value(cell + 1);
    r.rhs += h * (vl * vl * vl + vl * vl * vr + vl * vr * vr + vr * vr * vr) / 4.0;
    for (int q = 0; q < subdivisions; ++q) {
      const double x = a + (q + 0.5) * sub;
      const double uu = vl + (vr - vl) * (q + 0.5) / subdivisions;
      if (uu == 0.0 && vl == 0.0 && vr == 0.0) continue;
      const double hv = hilbert_at(u, x);
      r.lhs += sub * hv * hv * uu;
    }
  }
  r.rhs *= std::numbers::pi * std::numbers::pi / 3.0;
  r.residual = r.lhs - r.rhs;
  return r;
}

}  // namespace dyson
