#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyson/half_laplacian.hpp"
#include "dyson/hilbert.hpp"
#include "dyson/measure.hpp"

namespace dyson {

// Generalized pairwise interaction f(x, y) with drift b, and the derived
// quantities used by the solvers:
//
//   c(x)      = f(x, x)                         (local interaction strength)
//   g(x, y)   = f(x, y) + (x - y) d_y f(x, y)   (comparison weight)
//   beta(x,y) = (g(x, y) - c(x)) / (x - y)^2    (bounded remainder kernel)
//
// with the removable diagonal beta(x, x) = -1/2 d_yy f(x, x). Derivatives
// default to centered finite differences with step 1e-5 so a bare f is
// enough to build a kernel.

using PairFn = std::function<double(double, double)>;
using ScalarFn = std::function<double(double)>;

enum class DriftKind { None, Lipschitz, SingularMonotone, TimeDependent };

struct DriftSpec {
  DriftKind kind = DriftKind::None;
  ScalarFn b;                  // pointwise drift (Lipschitz case)
  ScalarFn b_left, b_right;    // one-sided limits (singular monotone case)
  std::function<double(double, double)> b_time;  // b(t, x)
  double lipschitz_constant = 0.0;
  double monotone_constant = 0.0;  // C_b with b + C_b * Id nondecreasing

  static DriftSpec none() { return DriftSpec{}; }

  static DriftSpec lipschitz(ScalarFn f, double lip) {
    DriftSpec d;
    d.kind = DriftKind::Lipschitz;
    d.b = std::move(f);
    d.b_left = d.b;
    d.b_right = d.b;
    d.lipschitz_constant = lip;
    return d;
  }

  static DriftSpec singular_monotone(ScalarFn left, ScalarFn right,
                                     double c_b) {
    DriftSpec d;
    d.kind = DriftKind::SingularMonotone;
    d.b_left = std::move(left);
    d.b_right = std::move(right);
    d.b = [l = d.b_left, r = d.b_right](double x) {
      return 0.5 * (l(x) + r(x));
    };
    d.monotone_constant = c_b;
    return d;
  }

  static DriftSpec time_dependent(std::function<double(double, double)> f) {
    DriftSpec d;
    d.kind = DriftKind::TimeDependent;
    d.b_time = std::move(f);
    return d;
  }

  double eval(double x) const {
    if (kind == DriftKind::None) return 0.0;
    if (kind == DriftKind::TimeDependent) {
      throw std::logic_error("DriftSpec: time-dependent drift needs eval(t,x)");
    }
    return b(x);
  }

  double eval(double t, double x) const {
    if (kind == DriftKind::None) return 0.0;
    if (kind == DriftKind::TimeDependent) return b_time(t, x);
    return b(x);
  }
};

struct InteractionKernel {
  PairFn f;
  PairFn df_dx;    // optional analytic partials; FD fallback otherwise
  PairFn df_dy;
  PairFn df_dxdy;
  DriftSpec drift;
  double c0 = 1.0;  // positivity/regularity constant of the hypotheses
  std::string name = "custom";
  bool is_dyson = false;  // f == 1 fast paths
  bool x_only = false;    // f(x, y) == c(x): L[u] reduces to c(x) A0[u]

  static constexpr double fd_step = 1e-5;

  double eval_f(double x, double y) const { return f(x, y); }

  double d_y(double x, double y) const {
    if (df_dy) return df_dy(x, y);
    return (f(x, y + fd_step) - f(x, y - fd_step)) / (2.0 * fd_step);
  }

  double d_x(double x, double y) const {
    if (df_dx) return df_dx(x, y);
    return (f(x + fd_step, y) - f(x - fd_step, y)) / (2.0 * fd_step);
  }

  double d_xy(double x, double y) const {
    if (df_dxdy) return df_dxdy(x, y);
    return (d_y(x + fd_step, y) - d_y(x - fd_step, y)) / (2.0 * fd_step);
  }

  double d_yy(double x, double y) const {
    return (f(x, y + fd_step) - 2.0 * f(x, y) + f(x, y - fd_step)) /
           (fd_step * fd_step);
  }

  double c(double x) const { return f(x, x); }

  double g(double x, double y) const { return f(x, y) + (x - y) * d_y(x, y); }

  // d/dy g(x, y) at y = x, needed by the singular-cell correction of L.
  // Analytically d_y g = (x - y) d_yy f, which vanishes on the diagonal for
  // twice-differentiable f; the FD form stays meaningful for kernels with
  // kinks (tabulated f), where the one-sided slopes need not cancel.
  double g_diag_slope(double x) const {
    return (g(x, x + fd_step) - g(x, x - fd_step)) / (2.0 * fd_step);
  }

  double beta(double x, double y) const {
    const double d = x - y;
    if (std::abs(d) < 1e-4) return beta_diag(x);
    return (g(x, y) - c(x)) / (d * d);
  }

  double beta_diag(double x) const { return -0.5 * d_yy(x, x); }
};

// Built-in kernels.
namespace kernels {

inline InteractionKernel dyson() {
  InteractionKernel k;
  k.f = [](double, double) { return 1.0; };
  k.df_dx = [](double, double) { return 0.0; };
  k.df_dy = [](double, double) { return 0.0; };
  k.df_dxdy = [](double, double) { return 0.0; };
  k.c0 = 1.0;
  k.name = "dyson";
  k.is_dyson = true;
  k.x_only = true;
  return k;
}

inline InteractionKernel quadratic(double eps) {
  InteractionKernel k;
  k.f = [eps](double x, double y) {
    const double d = x - y;
    return 1.0 + eps * d * d;
  };
  k.df_dy = [eps](double x, double y) { return -2.0 * eps * (x - y); };
  k.df_dx = [eps](double x, double y) { return 2.0 * eps * (x - y); };
  k.df_dxdy = [eps](double, double) { return -2.0 * eps; };
  k.c0 = 1.0;
  k.name = "quadratic";
  return k;
}

inline InteractionKernel gaussian() {
  InteractionKernel k;
  k.f = [](double x, double y) {
    const double d = x - y;
    return std::exp(-d * d);
  };
  k.df_dy = [](double x, double y) {
    const double d = x - y;
    return 2.0 * d * std::exp(-d * d);
  };
  k.df_dx = [](double x, double y) {
    const double d = x - y;
    return -2.0 * d * std::exp(-d * d);
  };
  k.c0 = 3.0;
  k.name = "gaussian";
  return k;
}

// Interaction part of the positive-half-line (Wishart) flow: the transport
// velocity is (2/eta) x H[m](x), i.e. f(x, y) = (2/eta) x.
inline InteractionKernel wishart(double eta) {
  if (!(eta >= 1.0)) throw std::invalid_argument("wishart kernel: eta >= 1");
  InteractionKernel k;
  k.f = [eta](double x, double) { return 2.0 * x / eta; };
  k.df_dy = [](double, double) { return 0.0; };
  k.df_dx = [eta](double, double) { return 2.0 / eta; };
  k.df_dxdy = [](double, double) { return 0.0; };
  k.c0 = 10.0;
  k.name = "wishart";
  k.x_only = true;
  return k;
}

}  // namespace kernels

// K[m](x) = p.v. \int f(x,y)/(x-y) m(dy), evaluated in desingularized form
//
//   K[m](x) = \int (f(x,y) - f(x,x))/(x-y) m(dy) + f(x,x) H[m](x),
//
// where the first integrand is bounded (diagonal value -d_y f(x,x)).
inline double eval_K(const InteractionKernel& k, const GridDensity& m,
                     double x) {
  const double cx = k.c(x);
  double reg = 0.0;
  if (!k.is_dyson) {
    const Grid& g = m.grid;
    for (int j = 0; j < g.n; ++j) {
      const double y = g.x(j);
      const double d = x - y;
      double q;
      if (std::abs(d) < 1e-8) {
        q = -k.d_y(x, x);
      } else {
        q = (k.f(x, y) - cx) / d;
      }
      reg += q * m.values[static_cast<size_t>(j)];
    }
    reg *= g.h;
  }
  return reg + cx * hilbert_at(m, x);
}

// L[u](x) = \int g(x,y) (u(x)-u(y))/(x-y)^2 dy via the same split quadrature
// as the half-Laplacian, with the weight and its diagonal slope supplied by
// the kernel. g == 1 reduces to half_laplacian_field.
inline HalfLaplacianResult eval_L_field(const InteractionKernel& k,
                                        const GridField& u,
                                        const HalfLaplacianOptions& opt) {
  if (k.is_dyson) return half_laplacian_field(u, opt);
  if (k.x_only) {
    // f(x, y) = c(x): the weight factors out of the integral.
    HalfLaplacianResult r = half_laplacian_field(u, opt);
    for (int i = 0; i < u.grid.n; ++i) {
      r.values[static_cast<size_t>(i)] *= k.c(u.grid.x(i));
    }
    return r;
  }
  const std::function<double(double, double)> w = [&k](double x, double y) {
    return k.g(x, y);
  };
  const std::function<double(double)> ws = [&k](double x) {
    return k.g_diag_slope(x);
  };
  return half_laplacian_field(u, opt, &w, &ws);
}

inline double eval_L_at(const InteractionKernel& k, const GridField& u,
                        double x, const HalfLaplacianOptions& opt) {
  const int i = u.grid.node_index(x);
  return eval_L_field(k, u, opt).values[static_cast<size_t>(i)];
}

// B(x; u) = \int beta(x, y) u(y) dy by plain quadrature over the window.
// The sampled L1 norm of beta(x, .) doubles as the Lipschitz certificate:
// |B(x; v) - B(x; w)| <= ||beta(x,.)||_L1 ||v - w||_inf.
inline double eval_B(const PairFn& beta, const GridField& u, double x,
                     double l1_reject = -1.0) {
  const Grid& g = u.grid;
  double s = 0.0, l1 = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double bj = beta(x, g.x(j));
    s += bj * u.values[static_cast<size_t>(j)];
    l1 += std::abs(bj);
  }
  if (l1_reject > 0.0 && l1 * g.h > l1_reject) {
    throw std::invalid_argument("eval_B: sampled L1 bound exceeded");
  }
  return s * g.h;
}

inline double beta_l1_norm(const PairFn& beta, const Grid& g, double x) {
  double l1 = 0.0;
  for (int j = 0; j < g.n; ++j) l1 += std::abs(beta(x, g.x(j)));
  return l1 * g.h;
}

// Hypothesis validation report, sampled on a box lattice. Witnesses are the
// lattice points realizing the worst value of each inequality.
struct HypothesisReport {
  bool hypf_pass = false;
  double inf_c = 0.0;            // min of c on the lattice
  double sup_f = 0.0, sup_d1 = 0.0, sup_d12 = 0.0;
  double hypf_witness_x = 0.0, hypf_witness_y = 0.0;
  bool comparison_pass = false;  // g >= 0 on the lattice
  double min_g = 0.0;
  double comparison_witness_x = 0.0, comparison_witness_y = 0.0;
  double beta_l1_max = 0.0;      // max_x of sampled ||beta(x,.)||_L1
  bool drift_monotone_pass = false;
  double drift_worst = 0.0;      // min of (b(x)-b(y))(x-y) + C_b (x-y)^2
};

inline HypothesisReport validate_hypotheses(const InteractionKernel& k,
                                            double box_lo, double box_hi,
                                            int lattice = 201) {
  if (!(box_hi > box_lo) || lattice < 2) {
    throw std::invalid_argument("validate_hypotheses: bad box");
  }
  HypothesisReport r;
  const double step = (box_hi - box_lo) / (lattice - 1);
  r.inf_c = std::numeric_limits<double>::infinity();
  r.min_g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < lattice; ++i) {
    const double x = box_lo + i * step;
    const double cx = k.c(x);
    if (cx < r.inf_c) {
      r.inf_c = cx;
      r.hypf_witness_x = x;
      r.hypf_witness_y = x;
    }
    double l1 = 0.0;
    for (int j = 0; j < lattice; ++j) {
      const double y = box_lo + j * step;
      r.sup_f = std::max(r.sup_f, std::abs(k.f(x, y)));
      r.sup_d1 = std::max(r.sup_d1, std::abs(k.d_x(x, y)));
      r.sup_d12 = std::max(r.sup_d12, std::abs(k.d_xy(x, y)));
      const double gxy = k.g(x, y);
      if (gxy < r.min_g) {
        r.min_g = gxy;
        r.comparison_witness_x = x;
        r.comparison_witness_y = y;
      }
      l1 += std::abs(k.beta(x, y)) * step;
    }
    r.beta_l1_max = std::max(r.beta_l1_max, l1);
  }
  r.hypf_pass = (r.inf_c >= 1.0 / k.c0 - 1e-12) &&
                (r.sup_f + r.sup_d1 + r.sup_d12 <= k.c0 + 1e-12);
  r.comparison_pass = (r.min_g >= -1e-12);

  // Monotonicity of the drift: (b(x)-b(y))(x-y) >= -C_b (x-y)^2 on pairs.
  r.drift_monotone_pass = true;
  r.drift_worst = std::numeric_limits<double>::infinity();
  if (k.drift.kind == DriftKind::Lipschitz ||
      k.drift.kind == DriftKind::SingularMonotone) {
    const double cb = (k.drift.kind == DriftKind::SingularMonotone)
                          ? k.drift.monotone_constant
                          : k.drift.lipschitz_constant;
    for (int i = 0; i < lattice; ++i) {
      const double x = box_lo + i * step;
      const double bx = k.drift.eval(x);
      for (int j = i + 1; j < lattice; ++j) {
        const double y = box_lo + j * step;
        const double d = x - y;
        const double v = (bx - k.drift.eval(y)) * d + cb * d * d;
        r.drift_worst = std::min(r.drift_worst, v);
        if (v < -1e-10) r.drift_monotone_pass = false;
      }
    }
  }
  return r;
}

}  // namespace dyson
