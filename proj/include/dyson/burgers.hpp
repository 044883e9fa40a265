#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dyson/measure.hpp"

namespace dyson {

// Complex Burgers oracle for the mean-field flow with velocity H[m].
//
// The Stieltjes transform G(z, t) = int m(t, y) / (z - y) dy satisfies
// d/dt G + G d/dz G = 0, so G is constant along the characteristics
// z(w, t) = w + t G0(w).  Given z in the lower half-plane we recover the
// pre-image w and read off G(z, t) = G0(w).
//
// The fixed-point map w -> z - t G0(w) sends the lower half-plane strictly
// into {Im w <= Im z}, so it has exactly one fixed point there and plain
// iteration converges; Newton is used for speed with the iteration as a
// guaranteed fallback.  Boundary values on z = x - i eta give
//   density(x) ~ Im G / pi,   H[m](x) ~ Re G    as eta -> 0+.

struct AtomicSeed {
  std::vector<double> atoms;
  std::vector<double> weights;  // empty means uniform 1/N

  static AtomicSeed uniform(std::vector<double> a) {
    AtomicSeed s;
    s.atoms = std::move(a);
    return s;
  }

  double weight(size_t j) const {
    return weights.empty() ? 1.0 / static_cast<double>(atoms.size()) : weights[j];
  }
};

namespace detail {

inline std::complex<double> seed_g0(const AtomicSeed& s, std::complex<double> w) {
  std::complex<double> g{0.0, 0.0};
  for (size_t j = 0; j < s.atoms.size(); ++j) g += s.weight(j) / (w - s.atoms[j]);
  return g;
}

inline std::complex<double> seed_g0_prime(const AtomicSeed& s, std::complex<double> w) {
  std::complex<double> g{0.0, 0.0};
  for (size_t j = 0; j < s.atoms.size(); ++j) {
    const std::complex<double> d = w - s.atoms[j];
    g -= s.weight(j) / (d * d);
  }
  return g;
}

}  // namespace detail

// G(z, t) for Im z < 0.  `w_hint` warm-starts the root solve (pass the
// pre-image found at a neighboring z when sweeping a grid).
inline std::complex<double> burgers_characteristics(const AtomicSeed& seed, double t,
                                                    std::complex<double> z,
                                                    std::complex<double>* w_hint = nullptr) {
  if (seed.atoms.empty()) throw std::invalid_argument("burgers_characteristics: empty seed");
  if (!(z.imag() < 0.0)) {
    throw std::invalid_argument("burgers_characteristics: need Im z < 0");
  }
  if (t == 0.0) return detail::seed_g0(seed, z);
  if (!(t > 0.0)) throw std::invalid_argument("burgers_characteristics: need t >= 0");

  auto residual = [&](std::complex<double> w) {
    return w + t * detail::seed_g0(seed, w) - z;
  };

  std::complex<double> w = (w_hint != nullptr && w_hint->imag() < 0.0) ? *w_hint : z;
  double best = std::abs(residual(w));
  const double tol = 1e-13 * std::max(1.0, std::abs(z));

  for (int round = 0; round < 8 && best > tol; ++round) {
    // Newton with step damping; reject steps that leave the half-plane.
    for (int it = 0; it < 60 && best > tol; ++it) {
      const std::complex<double> r = residual(w);
      const std::complex<double> jac = 1.0 + t * detail::seed_g0_prime(seed, w);
      if (std::abs(jac) < 1e-14) break;
      std::complex<double> step = r / jac;
      bool accepted = false;
      for (int halve = 0; halve < 30; ++halve) {
        const std::complex<double> cand = w - step;
        if (cand.imag() < 0.0) {
          const double res = std::abs(residual(cand));
          if (res < best) {
            w = cand;
            best = res;
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    if (best <= tol) break;
    // Contractive fallback: w <- z - t G0(w) stays in {Im w <= Im z}.
    for (int it = 0; it < 300 && best > tol; ++it) {
      w = z - t * detail::seed_g0(seed, w);
      best = std::abs(residual(w));
    }
  }
  if (w_hint != nullptr) *w_hint = w;
  return detail::seed_g0(seed, w);
}

struct BurgersOracle {
  AtomicSeed seed;

  explicit BurgersOracle(AtomicSeed s) : seed(std::move(s)) {}

  double density(double t, double x, double eta) const {
    const std::complex<double> g =
        burgers_characteristics(seed, t, {x, -eta});
    return g.imag() / std::numbers::pi;
  }

  double hilbert(double t, double x, double eta) const {
    return burgers_characteristics(seed, t, {x, -eta}).real();
  }

  // Boundary density on a grid.  The Poisson-smoothed value satisfies
  // m_eta = m + c(x) eta + O(eta^2), so two offsets eta and eta/10
  // extrapolate linearly to the axis; the sweep warm-starts each solve
  // from its left neighbor.
  GridDensity to_density(double t, const Grid& g, bool renormalize = false) const {
    const double eta1 = 0.1 * g.h;
    const double eta2 = 0.01 * g.h;
    std::vector<double> v(static_cast<size_t>(g.n), 0.0);
    std::complex<double> hint1{g.x0, -1.0};
    std::complex<double> hint2{g.x0, -1.0};
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      const double m1 =
          burgers_characteristics(seed, t, {x, -eta1}, &hint1).imag() / std::numbers::pi;
      const double m2 =
          burgers_characteristics(seed, t, {x, -eta2}, &hint2).imag() / std::numbers::pi;
      v[static_cast<size_t>(i)] = std::max(0.0, (10.0 * m2 - m1) / 9.0);
    }
    GridDensity out(g, std::move(v), false);
    if (renormalize) {
      const double mass = out.mass();
      if (mass <= 0.0) throw std::runtime_error("BurgersOracle: zero mass on grid");
      for (double& y : out.values) y /= mass;
      out.normalized = true;
    }
    return out;
  }

  // Integral of the near-axis density over [a, b] by adaptive Simpson;
  // used as an independent mass check on the characteristics solve.
  double mass_check(double t, double a, double b, double eta = 1e-6,
                    double tol = 1e-7) const {
    auto f = [&](double x) { return density(t, x, eta); };
    struct Rec {
      double a, b, fa, fm, fb, whole;
    };
    auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
      return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    };
    // Iterative stack to bound depth deterministically.
    std::vector<std::pair<Rec, int>> stack;
    const double m0 = 0.5 * (a + b);
    stack.push_back({{a, b, f(a), f(m0), f(b), 0.0}, 0});
    stack.back().first.whole =
        simpson(a, b, stack.back().first.fa, stack.back().first.fm, stack.back().first.fb);
    double total = 0.0;
    while (!stack.empty()) {
      auto [rec, depth] = stack.back();
      stack.pop_back();
      const double mid = 0.5 * (rec.a + rec.b);
      const double lm = 0.5 * (rec.a + mid), rm = 0.5 * (mid + rec.b);
      const double flm = f(lm), frm = f(rm);
      const double left = simpson(rec.a, mid, rec.fa, flm, rec.fm);
      const double right = simpson(mid, rec.b, rec.fm, frm, rec.fb);
      if (depth >= 28 || std::abs(left + right - rec.whole) < 15.0 * tol) {
        total += left + right + (left + right - rec.whole) / 15.0;
      } else {
        stack.push_back({{rec.a, mid, rec.fa, flm, rec.fm, left}, depth + 1});
        stack.push_back({{mid, rec.b, rec.fm, frm, rec.fb, right}, depth + 1});
      }
    }
    return total;
  }
};

}  // namespace dyson
