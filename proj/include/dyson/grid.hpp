#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dyson {

// Uniform 1-D grid of n nodes x_i = x0 + i*h. Grid functions are sampled at
// the nodes; densities additionally own the cell [x_i - h/2, x_i + h/2], so
// masses are h * sum(values) and the covered interval is
// [x0 - h/2, x0 + (n-1)*h + h/2].
struct Grid {
  double x0 = 0.0;
  double h = 1.0;
  int n = 0;

  Grid() = default;
  Grid(double x0_, double h_, int n_) : x0(x0_), h(h_), n(n_) {
    if (!(h > 0.0)) throw std::invalid_argument("Grid: spacing must be > 0");
    if (n < 2) throw std::invalid_argument("Grid: need at least 2 nodes");
    if (!std::isfinite(x0)) throw std::invalid_argument("Grid: x0 not finite");
  }

  double x(int i) const { return x0 + i * h; }
  double left() const { return x0; }
  double right() const { return x0 + (n - 1) * h; }
  // Outer edges of the covered cell range.
  double left_edge() const { return x0 - 0.5 * h; }
  double right_edge() const { return right() + 0.5 * h; }
  double width() const { return right_edge() - left_edge(); }

  // Index of the cell whose node is nearest to x (clamped into range).
  int nearest(double x_query) const {
    int i = static_cast<int>(std::lround((x_query - x0) / h));
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
  }

  // Exact node lookup; throws unless x sits on a node up to a tight tolerance.
  int node_index(double x_query) const {
    const int i = nearest(x_query);
    if (std::abs(x(i) - x_query) > 1e-9 * (1.0 + std::abs(x_query))) {
      throw std::invalid_argument("Grid: x = " + std::to_string(x_query) +
                                  " is not a grid node");
    }
    return i;
  }

  bool same_layout(const Grid& o) const {
    return n == o.n && std::abs(x0 - o.x0) < 1e-12 * (1.0 + std::abs(x0)) &&
           std::abs(h - o.h) < 1e-12 * h;
  }
};

// Grid covering [a, b] with spacing 1/resolution; nodes land on multiples of
// h shifted so that a is a node.
inline Grid make_grid(double a, double b, double h) {
  if (!(b > a)) throw std::invalid_argument("make_grid: need b > a");
  const int n = static_cast<int>(std::lround((b - a) / h)) + 1;
  return Grid(a, h, n);
}

}  // namespace dyson
