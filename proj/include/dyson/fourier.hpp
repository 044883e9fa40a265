#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "dyson/measure.hpp"

namespace dyson {

// Spectral cross-check routes. Convention: unitary angular-frequency
// transform, uhat(xi) = (2 pi)^{-1/2} \int u(x) e^{-i xi x} dx, under which
// the half-Laplacian A0 has symbol pi * |xi| and the log kernel satisfies
// (log|x|)^ = -pi f.p.(1/|xi|) - 2 pi gamma delta_0 (gamma the
// Euler-Mascheroni constant). These are deliberately independent of the
// real-space quadratures they validate.

inline constexpr double euler_gamma = 0.5772156649015328606;

inline std::complex<double> fourier_at(const Grid& g,
                                       const std::vector<double>& values,
                                       double xi) {
  std::complex<double> s{0.0, 0.0};
  for (int i = 0; i < g.n; ++i) {
    const double phase = -xi * g.x(i);
    s += values[static_cast<size_t>(i)] *
         std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return s * (g.h / std::sqrt(2.0 * std::numbers::pi));
}

namespace detail {

// Composite Simpson over [a, b] of f, npan even panels.
template <typename F>
double simpson(F&& f, double a, double b, int npan) {
  if (npan % 2 == 1) ++npan;
  const double dx = (b - a) / npan;
  double s = f(a) + f(b);
  for (int i = 1; i < npan; ++i) {
    s += f(a + i * dx) * ((i % 2 == 1) ? 4.0 : 2.0);
  }
  return s * dx / 3.0;
}

}  // namespace detail

// Fourier-side evaluation of the quadratic form \int u A0[u] = pi \int |xi|
// |uhat|^2 d xi. xi_max <= 0 selects the Nyquist-capped default.
inline double hhalf_quadratic_form_fourier(const GridField& u,
                                           double xi_max = 0.0,
                                           int panels = 4000) {
  const double cap = std::numbers::pi / u.grid.h;
  const double ximax = (xi_max > 0.0) ? std::min(xi_max, cap) : std::min(40.0, cap);
  auto integrand = [&](double xi) {
    const std::complex<double> c = fourier_at(u.grid, u.values, xi);
    return xi * std::norm(c);
  };
  // Even integrand: 2 * \int_0^ximax.
  return 2.0 * std::numbers::pi * detail::simpson(integrand, 0.0, ximax, panels);
}

// Fourier route to the free entropy:
//
//   E(m) = -(pi/2) f.p. \int |mhat(xi)|^2 / |xi| d xi - (gamma/2) mass^2,
//
// finite part split at |xi| = 1. The far integral is done in s = log(xi).
inline double free_entropy_fourier(const GridDensity& m, double xi_max = 0.0,
                                   int panels_near = 800,
                                   int panels_far = 4000) {
  const double cap = std::numbers::pi / m.grid.h;
  const double ximax = (xi_max > 0.0) ? std::min(xi_max, cap) : cap;
  const double mass = m.mass();
  const double u0 = std::norm(fourier_at(m.grid, m.values, 0.0));
  auto near_integrand = [&](double xi) {
    if (xi < 1e-9) return 0.0;  // difference quotient is O(xi) at the origin
    return (std::norm(fourier_at(m.grid, m.values, xi)) - u0) / xi;
  };
  auto far_integrand = [&](double s) {
    const double xi = std::exp(s);
    return std::norm(fourier_at(m.grid, m.values, xi));
  };
  const double near = detail::simpson(near_integrand, 0.0, 1.0, panels_near);
  const double far =
      detail::simpson(far_integrand, 0.0, std::log(ximax), panels_far);
  // Even symmetry: both half-line integrals doubled.
  const double fp = 2.0 * (near + far);
  return -0.5 * std::numbers::pi * fp - 0.5 * euler_gamma * mass * mass;
}

}  // namespace dyson
