#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dyson/grid.hpp"

namespace dyson {

// Point mass sitting outside the grid window; used for far-field corrections
// of the singular integrals when a measure is deliberately truncated.
struct ExteriorMass {
  double mass = 0.0;
  double location = 0.0;
};

// Probability density sampled at cell centers (mass per unit length, >= 0).
struct GridDensity {
  Grid grid;
  std::vector<double> values;
  bool normalized = false;
  ExteriorMass exterior_left;   // declared mass to the left of the window
  ExteriorMass exterior_right;  // declared mass to the right of the window

  GridDensity() = default;
  GridDensity(Grid g, std::vector<double> v, bool norm = false)
      : grid(g), values(std::move(v)), normalized(norm) {
    validate();
  }

  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.h + exterior_left.mass + exterior_right.mass;
  }

  void validate() const {
    if (static_cast<int>(values.size()) != grid.n) {
      throw std::invalid_argument("GridDensity: size mismatch with grid");
    }
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument("GridDensity: values must be finite and >= 0");
      }
    }
    if (normalized && std::abs(mass() - 1.0) > 1e-8) {
      throw std::invalid_argument("GridDensity: normalized flag set but mass != 1");
    }
  }
};

// Nondecreasing grid function with values in [0, 1]; the integrated form of a
// measure, u(x) = m((-inf, x]).
struct CdfGrid {
  Grid grid;
  std::vector<double> values;

  CdfGrid() = default;
  CdfGrid(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    validate();
  }

  void validate(double boundary_tol = -1.0) const {
    if (static_cast<int>(values.size()) != grid.n) {
      throw std::invalid_argument("CdfGrid: size mismatch with grid");
    }
    for (int i = 0; i < grid.n; ++i) {
      if (!std::isfinite(values[i])) {
        throw std::invalid_argument("CdfGrid: non-finite value");
      }
      if (i > 0 && values[i] < values[i - 1] - 1e-12) {
        throw std::invalid_argument("CdfGrid: values must be nondecreasing");
      }
    }
    if (values.front() < -1e-12 || values.back() > 1.0 + 1e-12) {
      throw std::invalid_argument("CdfGrid: values must lie in [0, 1]");
    }
    if (boundary_tol >= 0.0) {
      if (values.front() > boundary_tol || 1.0 - values.back() > boundary_tol) {
        throw std::invalid_argument(
            "CdfGrid: window does not cover the support (boundary contract)");
      }
    }
  }
};

// Unconstrained grid function (velocity fields, transforms, residuals).
struct GridField {
  Grid grid;
  std::vector<double> values;

  GridField() = default;
  GridField(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.n) {
      throw std::invalid_argument("GridField: size mismatch with grid");
    }
  }
  GridField(Grid g) : grid(g), values(static_cast<size_t>(g.n), 0.0) {}
};

// Sorted finite set of particle positions, each of weight 1/N.
struct ParticleEnsemble {
  std::vector<double> positions;

  ParticleEnsemble() = default;
  explicit ParticleEnsemble(std::vector<double> p) : positions(std::move(p)) {
    std::sort(positions.begin(), positions.end());
  }

  int size() const { return static_cast<int>(positions.size()); }

  bool strictly_increasing() const {
    for (size_t i = 1; i < positions.size(); ++i) {
      if (!(positions[i] > positions[i - 1])) return false;
    }
    return true;
  }
};

// Cumulative trapezoidal integral, clamped to [0, 1]. The running value at
// node i accounts for all mass up to x_i; a one-hot cell therefore produces
// the half/full step straddling that cell.
inline CdfGrid density_to_cdf(const GridDensity& m) {
  m.validate();
  std::vector<double> u(static_cast<size_t>(m.grid.n), 0.0);
  double acc = m.exterior_left.mass + 0.5 * m.grid.h * m.values[0];
  u[0] = std::clamp(acc, 0.0, 1.0);
  for (int i = 1; i < m.grid.n; ++i) {
    acc += 0.5 * m.grid.h * (m.values[i - 1] + m.values[i]);
    u[i] = std::clamp(acc, 0.0, 1.0);
  }
  // Clamping can only be non-monotone through rounding; re-sweep to be safe.
  for (int i = 1; i < m.grid.n; ++i) u[i] = std::max(u[i], u[i - 1]);
  return CdfGrid(m.grid, std::move(u));
}

// Centered finite differences, clipped at zero. When `renormalize` is set the
// result is scaled to unit mass and flagged normalized.
inline GridDensity cdf_to_density(const CdfGrid& u, bool renormalize = false) {
  const int n = u.grid.n;
  const double h = u.grid.h;
  std::vector<double> m(static_cast<size_t>(n), 0.0);
  m[0] = std::max(0.0, (u.values[1] - u.values[0]) / h);
  m[n - 1] = std::max(0.0, (u.values[n - 1] - u.values[n - 2]) / h);
  for (int i = 1; i < n - 1; ++i) {
    m[i] = std::max(0.0, (u.values[i + 1] - u.values[i - 1]) / (2.0 * h));
  }
  GridDensity out(u.grid, std::move(m), false);
  if (renormalize) {
    const double mass = out.mass();
    if (mass <= 0.0) throw std::invalid_argument("cdf_to_density: zero mass");
    for (double& v : out.values) v /= mass;
    out.normalized = true;
  }
  return out;
}

// h * sum x^k m(x); raw moment of order k (k <= 4 is what callers rely on).
inline double moment(const GridDensity& m, int k) {
  if (k < 0) throw std::invalid_argument("moment: negative order");
  double s = 0.0;
  for (int i = 0; i < m.grid.n; ++i) {
    s += std::pow(m.grid.x(i), k) * m.values[i];
  }
  s *= m.grid.h;
  if (k >= 1) {
    s += m.exterior_left.mass * std::pow(m.exterior_left.location, k) +
         m.exterior_right.mass * std::pow(m.exterior_right.location, k);
  } else {
    s += m.exterior_left.mass + m.exterior_right.mass;
  }
  return s;
}

inline double mean(const GridDensity& m) { return moment(m, 1) / m.mass(); }

inline double variance(const GridDensity& m) {
  const double mu = mean(m);
  return moment(m, 2) / m.mass() - mu * mu;
}

// (h * sum |v|^p)^(1/p); p = infinity gives the sup of the sampled values.
inline double lp_norm(const GridDensity& m, double p) {
  if (p < 1.0) throw std::invalid_argument("lp_norm: need p >= 1");
  if (std::isinf(p)) {
    double mx = 0.0;
    for (double v : m.values) mx = std::max(mx, std::abs(v));
    return mx;
  }
  double s = 0.0;
  for (double v : m.values) s += std::pow(std::abs(v), p);
  return std::pow(m.grid.h * s, 1.0 / p);
}

// Gaussian-kernel smoothing of an empirical measure onto a grid, renormalized
// to unit mass. bandwidth <= h/2 degenerates to the plain histogram.
inline GridDensity ensemble_to_density(const ParticleEnsemble& e,
                                       const Grid& grid, double bandwidth) {
  if (e.size() < 1) throw std::invalid_argument("ensemble_to_density: empty");
  std::vector<double> v(static_cast<size_t>(grid.n), 0.0);
  if (bandwidth <= 0.5 * grid.h) {
    for (double p : e.positions) v[static_cast<size_t>(grid.nearest(p))] += 1.0;
    const double cell_mass = 1.0 / (e.size() * grid.h);
    for (double& x : v) x *= cell_mass;
  } else {
    const double inv2s2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double norm =
        1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth * e.size());
    for (double p : e.positions) {
      for (int i = 0; i < grid.n; ++i) {
        const double d = grid.x(i) - p;
        v[static_cast<size_t>(i)] += norm * std::exp(-d * d * inv2s2);
      }
    }
  }
  GridDensity out(grid, std::move(v), false);
  const double mass = out.mass();
  if (mass <= 0.0) throw std::invalid_argument("ensemble_to_density: grid misses all mass");
  for (double& x : out.values) x /= mass;
  out.normalized = true;
  return out;
}

}  // namespace dyson
