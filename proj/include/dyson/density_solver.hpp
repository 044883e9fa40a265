#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dyson/cdf_solver.hpp"
#include "dyson/flow_record.hpp"
#include "dyson/hilbert.hpp"
#include "dyson/kernel.hpp"
#include "dyson/measure.hpp"

namespace dyson {

// Conservative finite-volume scheme for the density form of the flow,
//
//   d/dt m + d/dx ( m [ sigma(m) K[m] + b ] ) = eps d2/dx2 m,
//
// with zero flux through the outer faces (mass is conserved to roundoff).
// Advective face fluxes are fully upwinded: F = m_up (sigma(m_up) K + b),
// which keeps the update positivity-preserving under
//
//   dt <= cfl / ( 2 max|V| / h + 2 eps / h^2 ).
//
// sigma absent is evaluated as the literal factor 1.0 on the same code
// path, so a constant rescaling is bit-identical to no rescaling.
//
// The optional barrier is the penalized confinement b -= (x - R0)_+ / eps_b;
// it is stiff, and the step is additionally capped at cfl * eps_b * h.

struct BarrierSpec {
  double location = 0.0;
  double eps = 0.0;  // > 0 enables the barrier

  bool enabled() const { return eps > 0.0; }
  double value(double x) const {
    return (enabled() && x > location) ? -(x - location) / eps : 0.0;
  }
};

struct SpikeTrailPoint {
  double t = 0.0;
  double position = 0.0;
  double bulk_edge = 0.0;
};

struct SpikeState {
  bool enabled = false;
  bool absorbed = false;
  double t_absorb = 0.0;
  double position = 0.0;
  std::vector<SpikeTrailPoint> trail;
};

struct DensityProblem {
  InteractionKernel kernel = kernels::dyson();
  ScalarFn sigma;          // mobility rescaling of the interaction part
  double viscosity = 0.0;  // eps
  BarrierSpec barrier;
};

struct DensitySolveOptions {
  double t_end = 0.0;
  double cfl = 0.9;
  double dt_max = std::numeric_limits<double>::infinity();
  int record_every = 0;
  long max_steps = 4000000;
};

class DensitySolver {
 public:
  FlowRecord record;
  SpikeState spike;

  DensitySolver(DensityProblem p, GridDensity init)
      : prob_(std::move(p)), m_(std::move(init)) {
    m_.validate();
    if (m_.exterior_left.mass != 0.0 || m_.exterior_right.mass != 0.0) {
      throw std::invalid_argument("DensitySolver: exterior masses unsupported");
    }
    record.grid = m_.grid;
    record.kind = "density";
  }

  void attach_spike(double lambda0) {
    spike.enabled = true;
    spike.position = lambda0;
  }

  const GridDensity& solution() const { return m_; }
  double time() const { return t_; }

  // Advective velocity at the n+1 faces.
  std::vector<double> face_velocity() const {
    const Grid& g = m_.grid;
    const int n = g.n;
    std::vector<double> K = hilbert_at_faces(m_);
    const InteractionKernel& k = prob_.kernel;
    for (int f = 0; f <= n; ++f) {
      const double xf = g.x0 + (f - 0.5) * g.h;
      double kf = K[static_cast<size_t>(f)];
      if (!k.is_dyson) {
        kf *= k.c(xf);
        if (!k.x_only) {
          // Regular part (f(x,y) - f(x,x)) / (x - y): bounded, plain midpoint.
          double reg = 0.0;
          const double cx = k.c(xf);
          for (int j = 0; j < n; ++j) {
            const double y = g.x(j);
            reg += (k.f(xf, y) - cx) / (xf - y) *
                   m_.values[static_cast<size_t>(j)];
          }
          kf += reg * g.h;
        }
      }
      K[static_cast<size_t>(f)] = kf;
    }
    return K;  // interaction part only; sigma and b are applied per face
  }

  double external_drift(double t, double x) const {
    double b = 0.0;
    if (prob_.kernel.drift.kind != DriftKind::None) {
      b += prob_.kernel.drift.eval(t, x);
    }
    b += prob_.barrier.value(x);
    return b;
  }

  void advance(const DensitySolveOptions& opt) {
    if (!(opt.t_end > t_)) return;
    if (record.frames.empty()) push_frame();
    if (spike.enabled && spike.trail.empty()) note_spike();
    long taken = 0;
    while (t_ < opt.t_end - 1e-15) {
      if (++taken > opt.max_steps) {
        throw std::runtime_error("DensitySolver: step budget exhausted");
      }
      step(opt);
      if (opt.record_every > 0 && record.steps % static_cast<std::uint64_t>(
                                                     opt.record_every) == 0) {
        push_frame();
      }
    }
    push_frame();
  }

 private:
  DensityProblem prob_;
  GridDensity m_;
  double t_ = 0.0;

  void step(const DensitySolveOptions& opt) {
    const Grid& g = m_.grid;
    const int n = g.n;
    const double h = g.h;
    const std::vector<double> K = face_velocity();

    // Assemble per-face upwind velocity and flux.
    std::vector<double> flux(static_cast<size_t>(n + 1), 0.0);
    double vmax = 0.0;
    for (int f = 1; f < n; ++f) {  // outer faces stay at zero flux
      const double xf = g.x0 + (f - 0.5) * h;
      const double kf = K[static_cast<size_t>(f)];
      const double bf = external_drift(t_, xf);
      const double ml = m_.values[static_cast<size_t>(f - 1)];
      const double mr = m_.values[static_cast<size_t>(f)];
      // Provisional sign with sigma at the face average picks the upwind
      // cell; the flux then uses sigma at the upwind value itself.
      const double sig_avg = prob_.sigma ? prob_.sigma(0.5 * (ml + mr)) : 1.0;
      const double v_prov = sig_avg * kf + bf;
      const double m_up = (v_prov >= 0.0) ? ml : mr;
      const double sig_up = prob_.sigma ? prob_.sigma(m_up) : 1.0;
      const double vf = sig_up * kf + bf;
      flux[static_cast<size_t>(f)] = m_up * vf;
      vmax = std::max(vmax, std::abs(vf));
      if (prob_.viscosity > 0.0) {
        flux[static_cast<size_t>(f)] -= prob_.viscosity * (mr - ml) / h;
      }
    }

    double denom = 2.0 * vmax / h + 2.0 * prob_.viscosity / (h * h);
    if (denom <= 0.0) denom = 1.0 / opt.dt_max;
    double dt = opt.cfl / denom;
    dt = std::min(dt, opt.dt_max);
    if (prob_.barrier.enabled()) {
      dt = std::min(dt, opt.cfl * prob_.barrier.eps * h);
    }
    dt = std::min(dt, opt.t_end - t_);
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw std::runtime_error("DensitySolver: step size collapsed");
    }

    if (spike.enabled) advance_spike(dt);

    double clipped = 0.0;
    double peak = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = m_.values[static_cast<size_t>(i)] -
                 dt / h *
                     (flux[static_cast<size_t>(i + 1)] - flux[static_cast<size_t>(i)]);
      if (v < 0.0) {
        clipped += -v * h;
        v = 0.0;
      }
      m_.values[static_cast<size_t>(i)] = v;
      peak = std::max(peak, v);
    }
    record.note_clip(clipped);
    record.max_abs_slope = std::max(record.max_abs_slope, peak);

    t_ += dt;
    record.note_dt(dt);
    record.final_time = t_;
    if (spike.enabled) note_spike();
  }

  double bulk_edge() const {
    const Grid& g = m_.grid;
    double peak = 0.0;
    for (double v : m_.values) peak = std::max(peak, v);
    const double thresh = 1e-3 * peak;
    for (int i = g.n - 1; i >= 0; --i) {
      if (m_.values[static_cast<size_t>(i)] > thresh) return g.x(i) + 0.5 * g.h;
    }
    return g.left_edge();
  }

  void advance_spike(double dt) {
    if (spike.absorbed) {
      spike.position = bulk_edge();
      return;
    }
    const double v = eval_K(prob_.kernel, m_, spike.position) +
                     external_drift(t_, spike.position);
    spike.position += dt * v;
  }

  void note_spike() {
    const double edge = bulk_edge();
    if (!spike.absorbed && spike.position <= edge) {
      spike.absorbed = true;
      // Refine the crossing linearly from the previous gap sample.
      if (!spike.trail.empty()) {
        const SpikeTrailPoint& prev = spike.trail.back();
        const double g_prev = prev.position - prev.bulk_edge;
        const double g_now = spike.position - edge;
        const double den = g_prev - g_now;
        spike.t_absorb =
            (den > 0.0) ? prev.t + (t_ - prev.t) * g_prev / den : t_;
      } else {
        spike.t_absorb = t_;
      }
      spike.position = edge;
    }
    spike.trail.push_back({t_, spike.position, edge});
  }

  void push_frame() {
    FlowFrame f;
    f.t = t_;
    f.values = m_.values;
    record.frames.push_back(std::move(f));
  }
};

struct DensityFlowResult {
  GridDensity m;
  FlowRecord record;
  SpikeState spike;
};

inline DensityFlowResult solve_density(const DensityProblem& p,
                                       const GridDensity& init,
                                       const DensitySolveOptions& opt) {
  DensitySolver s(p, init);
  s.advance(opt);
  return {s.solution(), s.record, s.spike};
}

// Named entry points for the specialized configurations. Each is a thin
// wrapper that checks the configuration it promises.

inline DensityFlowResult solve_sigma(DensityProblem p, ScalarFn sigma,
                                     const GridDensity& init,
                                     const DensitySolveOptions& opt) {
  p.sigma = std::move(sigma);
  return solve_density(p, init, opt);
}

// Half-line flow with a reflecting (zero-flux) wall at x = 0: the window
// must start half a cell above the wall so the wall is exactly the outer
// face.
inline DensityFlowResult solve_reflected(const DensityProblem& p,
                                         const GridDensity& init,
                                         const DensitySolveOptions& opt) {
  const double wall_gap = init.grid.x0 - 0.5 * init.grid.h;
  if (std::abs(wall_gap) > 1e-12) {
    throw std::invalid_argument(
        "solve_reflected: grid must start at h/2 so the wall is a face");
  }
  return solve_density(p, init, opt);
}

inline DensityFlowResult solve_coupled(const DensityProblem& p,
                                       const GridDensity& init, double spike0,
                                       const DensitySolveOptions& opt) {
  DensitySolver s(p, init);
  s.attach_spike(spike0);
  s.advance(opt);
  return {s.solution(), s.record, s.spike};
}

// CDF-route entry points.

inline CdfFlowResult solve_with_B(CdfProblem p, PairFn collision_beta,
                                  const CdfGrid& init,
                                  const CdfSolveOptions& opt) {
  p.split_route = true;
  if (collision_beta) p.collision_beta = std::move(collision_beta);
  return solve_cdf(p, init, opt);
}

inline CdfFlowResult solve_singular_drift(const CdfProblem& p,
                                          const CdfGrid& init,
                                          const CdfSolveOptions& opt) {
  if (p.kernel.drift.kind != DriftKind::SingularMonotone) {
    throw std::invalid_argument(
        "solve_singular_drift: drift must be singular monotone");
  }
  return solve_cdf(p, init, opt);
}

}  // namespace dyson
