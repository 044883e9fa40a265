#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dyson/flow_record.hpp"
#include "dyson/kernel.hpp"
#include "dyson/measure.hpp"

namespace dyson {

// Explicit upwind scheme for the CDF form of the mean-field flow,
//
//   d/dt u + V[u] du/dx = 0,
//   V[u](x) = L[u](x) + b(x),
//   L[u](x) = int g(x,y) (u(x) - u(y)) / (x - y)^2 dy = K[m](x),
//
// on a window with pinned far-field values (0 on the left, 1 on the right;
// half-line problems use the zero extension below 0 instead of a left pin).
//
// V can alternatively be assembled in split form c(x) A0[u] + b - B[u] with
// B[u](x) = int beta(x,y) u(y) dy; for kernels whose d_y f decays this is
// the same velocity by parts, and keeping both routes makes the agreement
// checkable rather than definitional.
//
// Monotonicity: all nonlocal weights multiply (u_i - u_j) with nonnegative
// coefficients when g >= 0, and the upwind choice gives du'_i/du_j >= 0 for
// j != i; the step bound
//
//   dt <= 1 / ( W_i D_i + |V_i| / h ),
//
// with W_i the full row weight of the operator and D_i the local upwind
// slope, keeps du'_i/du_i >= 0 as well.  The split-form B term and kernels
// with sign-changing g fall outside the proof; the clamp counters in the
// FlowRecord report how often the scheme actually left the monotone cone.

struct CdfProblem {
  InteractionKernel kernel = kernels::dyson();
  bool half_line = false;   // zero extension below 0, no left pin
  double delta = -1.0;      // near/far split radius (< 0: 2h)
  double u_left = 0.0;
  double u_right = 1.0;

  // Split assembly of the velocity (c A0 + b - B) instead of the L-form.
  bool split_route = false;
  PairFn collision_beta;          // defaults to the kernel remainder
  double beta_l1_reject = -1.0;   // optional hard bound checked per step
};

struct CdfSolveOptions {
  double t_end = 0.0;
  double cfl = 0.9;
  double dt_max = std::numeric_limits<double>::infinity();
  int record_every = 0;  // 0: keep only start and end frames
  long max_steps = 4000000;
};

namespace detail {

// Row weight sum_j |dL_i/du_j| for the weighted operator, including the
// singular-cell slope correction and the tail closures.
inline std::vector<double> weighted_row_bound(const InteractionKernel& k,
                                              const Grid& g,
                                              const HalfLaplacianOptions& opt) {
  std::vector<double> base = half_laplacian_row_weights(g, opt);
  if (k.is_dyson) return base;
  const int n = g.n;
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  if (k.x_only) {
    for (int i = 0; i < n; ++i) {
      out[static_cast<size_t>(i)] =
          std::abs(k.c(g.x(i))) * base[static_cast<size_t>(i)];
    }
    return out;
  }
  const double h = g.h;
  const double delta = (opt.delta > 0.0) ? opt.delta : 2.0 * h;
  int ks = static_cast<int>(std::floor(delta / h - 0.5 + 1e-12));
  if (delta < h) ks = -1;
  for (int i = 0; i < n; ++i) {
    const double xi = g.x(i);
    double w = 0.0;
    if (ks >= 0) {
      w += std::abs(k.g(xi, xi)) / h + std::abs(k.g_diag_slope(xi));
      for (int kk = 1; kk <= ks; ++kk) {
        const double ww = 1.0 / (static_cast<double>(kk) * kk * h);
        w += std::abs(k.g(xi, xi + kk * h)) * ww;
        w += std::abs(k.g(xi, xi - kk * h)) * ww;
      }
    }
    const int kmin = std::max(1, ks + 1);
    for (int j = i - kmin; j >= 0; --j) {
      const double d = xi - g.x(j);
      w += std::abs(k.g(xi, g.x(j))) * h / (d * d);
    }
    for (int j = i + kmin; j < n; ++j) {
      const double d = xi - g.x(j);
      w += std::abs(k.g(xi, g.x(j))) * h / (d * d);
    }
    const double left_edge = opt.half_line ? 0.0 : g.left_edge();
    if (xi > left_edge) w += std::abs(k.g(xi, g.left())) / (xi - left_edge);
    w += std::abs(k.g(xi, g.right())) / (g.right_edge() - xi);
    out[static_cast<size_t>(i)] = w;
  }
  return out;
}

}  // namespace detail

class CdfSolver {
 public:
  FlowRecord record;

  CdfSolver(CdfProblem p, CdfGrid init) : prob_(std::move(p)), u_(std::move(init)) {
    u_.validate();
    if (prob_.half_line && u_.grid.x0 <= 0.0) {
      throw std::invalid_argument("CdfSolver: half-line window must lie in (0, inf)");
    }
    lap_opt_.delta = prob_.delta;
    lap_opt_.u_left = prob_.u_left;
    lap_opt_.u_right = prob_.u_right;
    lap_opt_.half_line = prob_.half_line;
    pin_left_ = !prob_.half_line;
    pin_right_ = true;

    row_bound_ = detail::weighted_row_bound(prob_.kernel, u_.grid, lap_opt_);
    if (prob_.split_route) {
      // The B part contributes ||beta(x_i, .)||_L1 to the row weight.
      if (!prob_.collision_beta) {
        prob_.collision_beta = [k = prob_.kernel](double x, double y) {
          return k.beta(x, y);
        };
      }
      for (int i = 0; i < u_.grid.n; ++i) {
        row_bound_[static_cast<size_t>(i)] +=
            beta_l1_norm(prob_.collision_beta, u_.grid, u_.grid.x(i));
      }
    }
    record.grid = u_.grid;
    record.kind = "cdf";
  }

  const CdfGrid& solution() const { return u_; }
  double time() const { return t_; }

  GridField velocity() const {
    const Grid& g = u_.grid;
    GridField uf(g, u_.values);
    GridField v(g);
    if (prob_.split_route) {
      HalfLaplacianResult a0 = half_laplacian_field(uf, lap_opt_);
      for (int i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        v.values[static_cast<size_t>(i)] =
            prob_.kernel.c(x) * a0.values[static_cast<size_t>(i)] -
            eval_B(prob_.collision_beta, uf, x, prob_.beta_l1_reject);
      }
    } else {
      HalfLaplacianResult L = eval_L_field(prob_.kernel, uf, lap_opt_);
      v.values = std::move(L.values);
    }
    add_drift(v);
    return v;
  }

  // Largest monotonicity-preserving step for the given velocity field.
  double stable_dt(const GridField& v, double cfl) const {
    const Grid& g = u_.grid;
    const double h = g.h;
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n; ++i) {
      if (pinned(i)) continue;
      const double ui = u_.values[static_cast<size_t>(i)];
      const double um = detail::ghost_value(u_.values, i - 1, g.n, lap_opt_);
      const double up = detail::ghost_value(u_.values, i + 1, g.n, lap_opt_);
      const double slope = std::max(std::abs(ui - um), std::abs(up - ui)) / h;
      const double denom = row_bound_[static_cast<size_t>(i)] * slope +
                           std::abs(v.values[static_cast<size_t>(i)]) / h;
      if (denom > 0.0) bound = std::min(bound, 1.0 / denom);
    }
    return cfl * bound;
  }

  // One explicit step with the given velocity field (normally the fresh
  // velocity(); exposed so two solvers can share a common step size).
  void take_step(const GridField& v, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw std::runtime_error("CdfSolver: step size collapsed");
    }
    apply_step(v, dt);
    t_ += dt;
    record.note_dt(dt);
    record.max_abs_slope = std::max(record.max_abs_slope, max_slope());
    record.final_time = t_;
  }

  void ensure_initial_frame() {
    if (record.frames.empty()) push_frame();
  }

  void snapshot_frame() { push_frame(); }

  void advance(const CdfSolveOptions& opt) {
    if (!(opt.t_end > t_)) return;
    ensure_initial_frame();
    long taken = 0;
    while (t_ < opt.t_end - 1e-15) {
      if (++taken > opt.max_steps) {
        throw std::runtime_error("CdfSolver: step budget exhausted");
      }
      const GridField v = velocity();
      double dt = std::min(stable_dt(v, opt.cfl), opt.dt_max);
      dt = std::min(dt, opt.t_end - t_);
      take_step(v, dt);
      if (opt.record_every > 0 && record.steps % static_cast<std::uint64_t>(
                                                     opt.record_every) == 0) {
        push_frame();
      }
    }
    push_frame();
  }

 private:
  CdfProblem prob_;
  CdfGrid u_;
  double t_ = 0.0;
  HalfLaplacianOptions lap_opt_;
  std::vector<double> row_bound_;
  bool pin_left_ = true;
  bool pin_right_ = true;

  bool pinned(int i) const {
    return (pin_left_ && i == 0) || (pin_right_ && i == u_.grid.n - 1);
  }

  void add_drift(GridField& v) const {
    const DriftSpec& d = prob_.kernel.drift;
    if (d.kind == DriftKind::None) return;
    const Grid& g = u_.grid;
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      double& vi = v.values[static_cast<size_t>(i)];
      if (d.kind == DriftKind::SingularMonotone) {
        // Upwind selection of the one-sided limit: take the branch whose
        // resulting velocity is consistent with its own direction; when the
        // branches point at each other the node is stationary.
        const double vl = vi + d.b_left(x);
        const double vr = vi + d.b_right(x);
        if (vl > 0.0 && vr > 0.0) {
          vi = vl;
        } else if (vl < 0.0 && vr < 0.0) {
          vi = vr;
        } else {
          vi = 0.0;
        }
      } else {
        vi += d.eval(t_, x);
      }
    }
  }

  double max_slope() const {
    const Grid& g = u_.grid;
    double s = 0.0;
    for (int i = 0; i + 1 < g.n; ++i) {
      s = std::max(s, std::abs(u_.values[static_cast<size_t>(i + 1)] -
                               u_.values[static_cast<size_t>(i)]) /
                          g.h);
    }
    return s;
  }

  void apply_step(const GridField& v, double dt) {
    const Grid& g = u_.grid;
    const double h = g.h;
    std::vector<double> next = u_.values;
    for (int i = 0; i < g.n; ++i) {
      if (pinned(i)) continue;
      const double vi = v.values[static_cast<size_t>(i)];
      const double ui = u_.values[static_cast<size_t>(i)];
      double du;
      if (vi >= 0.0) {
        du = (ui - detail::ghost_value(u_.values, i - 1, g.n, lap_opt_)) / h;
      } else {
        du = (detail::ghost_value(u_.values, i + 1, g.n, lap_opt_) - ui) / h;
      }
      next[static_cast<size_t>(i)] = ui - dt * vi * du;
    }
    u_.values = std::move(next);
    clamp_sweep();
  }

  void clamp_sweep() {
    double floor = pin_left_ ? prob_.u_left : 0.0;
    double worst = 0.0;
    for (double& x : u_.values) {
      const double before = x;
      x = std::clamp(before, floor, prob_.u_right);
      floor = x;
      worst = std::max(worst, std::abs(x - before));
    }
    record.note_clamp(worst);
  }

  void push_frame() {
    FlowFrame f;
    f.t = t_;
    f.values = u_.values;
    record.frames.push_back(std::move(f));
  }
};

struct CdfFlowResult {
  CdfGrid u;
  FlowRecord record;
};

inline CdfFlowResult solve_cdf(const CdfProblem& p, const CdfGrid& init,
                               const CdfSolveOptions& opt) {
  CdfSolver s(p, init);
  s.advance(opt);
  return {s.solution(), s.record};
}

// Advance two solvers in lockstep with a shared step size (the minimum of
// the two stability bounds), so their frames land at identical times and
// per-frame comparisons (ordering, transport distance) are meaningful.
inline void advance_pair(CdfSolver& a, CdfSolver& b, const CdfSolveOptions& opt) {
  a.ensure_initial_frame();
  b.ensure_initial_frame();
  long taken = 0;
  double t = std::min(a.time(), b.time());
  while (t < opt.t_end - 1e-15) {
    if (++taken > opt.max_steps) {
      throw std::runtime_error("advance_pair: step budget exhausted");
    }
    const GridField va = a.velocity();
    const GridField vb = b.velocity();
    double dt = std::min(a.stable_dt(va, opt.cfl), b.stable_dt(vb, opt.cfl));
    dt = std::min({dt, opt.dt_max, opt.t_end - t});
    a.take_step(va, dt);
    b.take_step(vb, dt);
    t = std::min(a.time(), b.time());
    if (opt.record_every > 0 &&
        taken % static_cast<long>(opt.record_every) == 0) {
      a.snapshot_frame();
      b.snapshot_frame();
    }
  }
  a.snapshot_frame();
  b.snapshot_frame();
}

// Positive-half-line flow toward the Marchenko-Pastur law: interaction
// f(x,y) = (2/eta) x with linear confinement b(x) = (eta - 1)/eta - x.
inline CdfProblem wishart_cdf_problem(double eta) {
  CdfProblem p;
  p.kernel = kernels::wishart(eta);
  p.kernel.drift = DriftSpec::lipschitz(
      [eta](double x) { return (eta - 1.0) / eta - x; }, 1.0);
  p.half_line = true;
  return p;
}

}  // namespace dyson
