#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dyson/measure.hpp"

namespace dyson {

// Which constant set to use for the self-similar solution launched from a
// point mass. The library-raw family is the one consistent with this
// library's Hilbert convention (radius 2 sqrt(t)); the "printed" family
// (radius sqrt(t)) is retained verbatim for side-by-side comparison and is
// not self-consistent under the library operators.
enum class Convention { raw, paper };

inline Convention parse_convention(const std::string& s) {
  if (s == "raw") return Convention::raw;
  if (s == "paper") return Convention::paper;
  throw std::invalid_argument("convention must be 'raw' or 'paper'");
}

// Semicircle of radius R centered at the origin: density
// (2 / (pi R^2)) sqrt(R^2 - x^2).
struct Semicircle {
  double radius = 2.0;

  explicit Semicircle(double r) : radius(r) {
    if (!(r > 0.0)) throw std::invalid_argument("Semicircle: radius > 0");
  }

  double density(double x) const {
    const double r2 = radius * radius;
    const double v = r2 - x * x;
    return v > 0.0 ? 2.0 * std::sqrt(v) / (std::numbers::pi * r2) : 0.0;
  }

  double cdf(double x) const {
    if (x <= -radius) return 0.0;
    if (x >= radius) return 1.0;
    const double r2 = radius * radius;
    return 0.5 + (x * std::sqrt(r2 - x * x) / r2 + std::asin(x / radius)) /
                     std::numbers::pi;
  }

  // H[m](x) under the library convention: 2x/R^2 inside the support,
  // (2/R^2)(x -+ sqrt(x^2 - R^2)) outside (Stieltjes transform boundary
  // value; decays like 1/x).
  double hilbert(double x) const {
    const double r2 = radius * radius;
    if (std::abs(x) <= radius) return 2.0 * x / r2;
    const double s = std::sqrt(x * x - r2);
    return (x > 0.0) ? 2.0 * (x - s) / r2 : 2.0 * (x + s) / r2;
  }

  double variance() const { return radius * radius / 4.0; }
  double peak() const { return 2.0 / (std::numbers::pi * radius); }

  // Inverse CDF by monotone bisection (closed-form CDF, so this is cheap and
  // robust; accuracy ~1e-14 * radius).
  double quantile(double s) const {
    if (s <= 0.0) return -radius;
    if (s >= 1.0) return radius;
    double lo = -radius, hi = radius;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

// Radius of the self-similar solution at time t.
inline double self_similar_radius(double t, Convention conv) {
  if (!(t > 0.0)) throw std::invalid_argument("self_similar_radius: t > 0");
  return conv == Convention::raw ? 2.0 * std::sqrt(t) : std::sqrt(t);
}

inline Semicircle self_similar_bulk(double t, Convention conv) {
  return Semicircle(self_similar_radius(t, conv));
}

// Transport velocity field of the self-similar family. Under the raw
// convention this is the genuine Hilbert transform of the bulk; under the
// printed convention it reproduces the published formula
// (x - sqrt(x^2 - t)) / (2t) outside the support, x/(2t) inside. Both are
// written in subtraction-free form, so the t -> 0 limit (1/x outside a point
// mass) is exact.
inline double self_similar_hilbert(double t, double x, Convention conv) {
  if (!(t >= 0.0)) throw std::invalid_argument("self_similar_hilbert: t >= 0");
  const double s = (conv == Convention::raw) ? 4.0 * t : t;
  const double z2 = x * x - s;  // squared distance to the edge, signed
  if (t == 0.0) {
    if (x == 0.0) throw std::invalid_argument("self_similar_hilbert: 0/0 at t=0");
    return 1.0 / x;
  }
  if (z2 <= 0.0) return x / (2.0 * t);  // inside the support
  const double root = std::sqrt(z2);
  // (x -+ root) / (2t) without cancellation: multiply by the conjugate.
  if (x > 0.0) return s / (2.0 * t * (x + root));
  return -s / (2.0 * t * (-x + root));
}

// Sample a semicircle (radius R, center mu) onto a grid as cell-center
// values; optionally renormalized to unit grid mass.
inline GridDensity sample_semicircle(const Grid& g, double radius,
                                     double center = 0.0,
                                     bool renormalize = true) {
  Semicircle sc(radius);
  std::vector<double> v(static_cast<size_t>(g.n), 0.0);
  for (int i = 0; i < g.n; ++i) v[static_cast<size_t>(i)] = sc.density(g.x(i) - center);
  GridDensity out(g, std::move(v), false);
  if (renormalize) {
    const double mass = out.mass();
    if (mass <= 0.0) throw std::invalid_argument("sample_semicircle: grid misses support");
    for (double& x : out.values) x /= mass;
    out.normalized = true;
  }
  return out;
}

}  // namespace dyson
