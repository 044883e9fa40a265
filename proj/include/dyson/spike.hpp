#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dyson/semicircle.hpp"

namespace dyson {

// Outlier ("spike") dynamics over the self-similar bulk.  An outlier at
// lambda(t) > R(t) moves with the exterior mean-field velocity
// H[m_t](lambda), which for the self-similar semicircle family has the
// closed form in semicircle.hpp.  The solution is exact:
//
//   raw   : lambda(t) = lambda0 + t / lambda0,        absorbed at t0 = lambda0^2
//   paper : lambda(t) = lambda0 + t / (4 lambda0),    absorbed at t0 = 4 lambda0^2
//
// and the gap closes tangentially, lambda - R = O((t - t0)^2).  For the
// numeric route the ODE is integrated in regularized variables
// tau = sqrt(t), Y = sqrt(lambda - R(t)), where it becomes smooth through
// the absorption time and Y reaches zero with nonzero slope:
//
//   raw   : dY/dtau = -2 / (Y + sqrt(Y^2 + 4 tau))
//   paper : dY/dtau = -1 / (Y + sqrt(Y^2 + 2 tau))

inline double spike_absorption_reference(double lambda0, Convention conv = Convention::raw) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("spike_absorption_reference: lambda0 > 0");
  const double t0 = lambda0 * lambda0;
  return conv == Convention::raw ? t0 : 4.0 * t0;
}

// Exact outlier position; after absorption the outlier travels with the
// bulk edge.
inline double spike_position_reference(double lambda0, double t,
                                       Convention conv = Convention::raw) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("spike_position_reference: lambda0 > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("spike_position_reference: t >= 0");
  if (t >= spike_absorption_reference(lambda0, conv)) return self_similar_radius(t, conv);
  return conv == Convention::raw ? lambda0 + t / lambda0 : lambda0 + t / (4.0 * lambda0);
}

struct SpikeOdeResult {
  bool absorbed = false;
  double t_absorb = 0.0;           // valid when absorbed
  std::vector<double> t;           // accepted sample times (includes endpoints)
  std::vector<double> lambda;      // outlier positions at those times
};

// Adaptive RK4 (step doubling) on the regularized ODE.  `tol` controls the
// per-step relative error in Y; the absorption time comes from linear
// interpolation of Y across the sign change, which is first-order accurate
// in the step because Y has nonzero slope at the root.
inline SpikeOdeResult integrate_spike_self_similar(double lambda0, double t_end,
                                                   Convention conv = Convention::raw,
                                                   double tol = 1e-10) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("integrate_spike_self_similar: lambda0 > 0");
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate_spike_self_similar: t_end > 0");

  auto rhs = [conv](double tau, double y) {
    const double yy = std::max(y, 0.0);
    if (conv == Convention::raw) {
      return -2.0 / (yy + std::sqrt(yy * yy + 4.0 * tau));
    }
    return -1.0 / (yy + std::sqrt(yy * yy + 2.0 * tau));
  };
  auto rk4 = [&rhs](double tau, double y, double h) {
    const double k1 = rhs(tau, y);
    const double k2 = rhs(tau + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = rhs(tau + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = rhs(tau + h, y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  auto to_lambda = [conv](double tau, double y) {
    const double radius = conv == Convention::raw ? 2.0 * tau : tau;
    return y * y + radius;
  };

  SpikeOdeResult out;
  const double tau_end = std::sqrt(t_end);
  double tau = 0.0;
  double y = std::sqrt(lambda0);
  double h = std::min(1e-3, tau_end / 16.0);
  out.t.push_back(0.0);
  out.lambda.push_back(lambda0);

  while (tau < tau_end) {
    h = std::min(h, tau_end - tau);
    const double big = rk4(tau, y, h);
    const double mid = rk4(tau, y, 0.5 * h);
    const double two = rk4(tau + 0.5 * h, mid, 0.5 * h);
    const double err = std::abs(big - two) / 15.0;
    const double scale = tol * std::max(1.0, std::abs(y));
    if (err > scale && h > 1e-12) {
      h *= std::max(0.2, 0.9 * std::pow(scale / std::max(err, 1e-300), 0.2));
      continue;
    }
    const double y_new = two + (two - big) / 15.0;
    const double tau_new = tau + h;
    if (y_new <= 0.0) {
      const double frac = y / std::max(y - y_new, 1e-300);
      const double tau_hit = tau + frac * h;
      out.absorbed = true;
      out.t_absorb = tau_hit * tau_hit;
      out.t.push_back(out.t_absorb);
      out.lambda.push_back(to_lambda(tau_hit, 0.0));
      return out;
    }
    tau = tau_new;
    y = y_new;
    out.t.push_back(tau * tau);
    out.lambda.push_back(to_lambda(tau, y));
    if (err > 0.0) {
      h *= std::min(5.0, 0.9 * std::pow(scale / err, 0.2));
    } else {
      h *= 5.0;
    }
  }
  return out;
}

}  // namespace dyson
