#pragma once

#include <cmath>
#include <vector>

#include "dyson/measure.hpp"

namespace dyson {

// Hilbert transform in the convolution convention used throughout this
// library:
//
//   H[m](x) = p.v. \int m(y) / (x - y) dy     (no 1/pi factor)
//
// Under this convention the semicircle density of radius R has
// H = 2x/R^2 inside the support and the self-similar solution launched from a
// point mass has radius 2*sqrt(t).

struct HilbertResult {
  double value = 0.0;
  // Set when the evaluation point sits in a boundary cell whose density is
  // large: the principal-value cancellation is then truncated by the window
  // edge and the result should not be trusted.
  bool edge_warning = false;
};

namespace detail {

// Coefficient-safe log term: c * log|d| with the removable limit c -> 0.
inline double log_term(double c, double d) {
  const double ad = std::abs(d);
  if (ad < 1e-300 || c == 0.0) return 0.0;
  return c * std::log(ad);
}

}  // namespace detail

// Exact principal value of the piecewise-linear interpolant of m through the
// nodes, extended by linear ramps to zero over one extra cell at each end
// (the ramps keep the interpolant mass equal to h * sum(values)). Works for
// any x, on or off the grid: the potential log blow-ups at cell edges carry
// coefficients proportional to the interpolant jump there, which vanishes by
// continuity, so each edge log is accumulated once with its net coefficient.
inline HilbertResult hilbert_at_checked(const GridDensity& m, double x) {
  const Grid& g = m.grid;
  const int n = g.n;
  const double h = g.h;
  HilbertResult out;

  // Interpolation nodes: ghost zeros at x0 - h and right() + h.
  // Cells k = 0 .. n: cell k spans [node_{k-1}, node_k] in ghost indexing;
  // simpler to walk n+1 intervals with endpoint values (v_l, v_r).
  double tail_sum = 0.0;  // accumulated slope integrals: -beta * (b - a)
  double prev_coeff = 0.0;
  for (int cell = 0; cell <= n; ++cell) {
    const double a = (cell == 0) ? g.x0 - h : g.x(cell - 1);
    const double b = (cell == n) ? g.right() + h : g.x(cell);
    const double vl = (cell == 0) ? 0.0 : m.values[cell - 1];
    const double vr = (cell == n) ? 0.0 : m.values[cell];
    const double beta = (vr - vl) / (b - a);
    const double alpha_at_x = vl + beta * (x - a);  // interpolant continued to x
    // Cell integral: (alpha_at_x) * [log|x-a| - log|x-b|] - beta * (b - a).
    tail_sum -= beta * (b - a);
    // Edge a: coefficient +alpha_at_x from this cell, -prev from previous.
    out.value += detail::log_term(alpha_at_x - prev_coeff, x - a);
    prev_coeff = alpha_at_x;
  }
  // Closing edge of the last cell.
  out.value += detail::log_term(-prev_coeff, x - (g.right() + h));
  out.value += tail_sum;

  // Declared exterior masses act as point charges.
  for (const ExteriorMass& em : {m.exterior_left, m.exterior_right}) {
    if (em.mass != 0.0) out.value += em.mass / (x - em.location);
  }

  // Edge warning: singular cell at the window boundary with sizeable density.
  const double edge_density_threshold = 1e-3 / h;
  if ((x < g.x0 + 0.5 * h && m.values.front() > edge_density_threshold) ||
      (x > g.right() - 0.5 * h && m.values.back() > edge_density_threshold)) {
    out.edge_warning = true;
  }
  return out;
}

inline double hilbert_at(const GridDensity& m, double x) {
  return hilbert_at_checked(m, x).value;
}

// Grid-wide transform at the nodes. Midpoint quadrature with symmetric-pair
// cancellation: the singular cell contributes -m'(x_i) * h (exact for the
// linearization of m in the cell), every other cell a midpoint term. Declared
// exterior masses enter as point charges. O(n^2).
inline std::vector<double> hilbert_field(const GridDensity& m) {
  const Grid& g = m.grid;
  const int n = g.n;
  const double h = g.h;
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double xi = g.x(i);
    double s = 0.0;
    for (int j = 0; j < i; ++j) s += m.values[j] / (xi - g.x(j));
    for (int j = i + 1; j < n; ++j) s += m.values[j] / (xi - g.x(j));
    // Singular cell: p.v. of the local linearization; slope by centered
    // difference (one-sided at the ends).
    double slope;
    if (i == 0) {
      slope = (m.values[1] - m.values[0]) / h;
    } else if (i == n - 1) {
      slope = (m.values[n - 1] - m.values[n - 2]) / h;
    } else {
      slope = (m.values[i + 1] - m.values[i - 1]) / (2.0 * h);
    }
    double v = s * h - slope * h;
    for (const ExteriorMass& em : {m.exterior_left, m.exterior_right}) {
      if (em.mass != 0.0) v += em.mass / (xi - em.location);
    }
    out[static_cast<size_t>(i)] = v;
  }
  return out;
}

// H of the measure at the cell faces x_{i+1/2}, i = 0 .. n-2, plus the two
// outer faces; used by the conservative density solver. The two cells
// touching a face are handled as one local principal value of the linear
// interpolant between their centers, contributing -2 * (m_{i+1} - m_i).
inline std::vector<double> hilbert_at_faces(const GridDensity& m) {
  const Grid& g = m.grid;
  const int n = g.n;
  const double h = g.h;
  std::vector<double> out(static_cast<size_t>(n + 1), 0.0);
  for (int f = 0; f <= n; ++f) {
    const double xf = g.x0 + (f - 0.5) * h;  // face f sits left of cell f
    double s = 0.0;
    for (int j = 0; j < f - 1; ++j) s += m.values[j] / (xf - g.x(j));
    for (int j = f + 1; j < n; ++j) s += m.values[j] / (xf - g.x(j));
    double v = s * h;
    // The straddling pair (cells f-1 and f): p.v. over [xf - h, xf + h] of
    // the linear interpolant through the two centers.
    const double ml = (f - 1 >= 0) ? m.values[f - 1] : 0.0;
    const double mr = (f < n) ? m.values[f] : 0.0;
    if (f - 1 >= 0 || f < n) v += -2.0 * (mr - ml);
    for (const ExteriorMass& em : {m.exterior_left, m.exterior_right}) {
      if (em.mass != 0.0) v += em.mass / (xf - em.location);
    }
    out[static_cast<size_t>(f)] = v;
  }
  return out;
}

// H of an empirical measure (each particle weight 1/N), evaluated off the
// particle set.
inline double hilbert_of_ensemble(const ParticleEnsemble& e, double x) {
  double s = 0.0;
  for (double p : e.positions) s += 1.0 / (x - p);
  return s / e.size();
}

}  // namespace dyson
