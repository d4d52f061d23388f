#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "chemokit/errors.hpp"

namespace chemokit {

// Uniform node-centered grid on [a,b] x [c,d] with periodic wrap.
// Nodes are x_i = a + i*dx, i = 0..nx-1; the point b is identified with a.
struct Grid2D {
  double a = 0, b = 1, c = 0, d = 1;
  int nx = 0, ny = 0;
  double dx = 0, dy = 0;

  double x(int i) const { return a + i * dx; }
  double y(int j) const { return c + j * dy; }
  int size() const { return nx * ny; }
  int index(int i, int j) const { return i + nx * j; }

  int right(int i) const { return i + 1 == nx ? 0 : i + 1; }
  int left(int i) const { return i == 0 ? nx - 1 : i - 1; }
  int up(int j) const { return j + 1 == ny ? 0 : j + 1; }
  int down(int j) const { return j == 0 ? ny - 1 : j - 1; }

  bool same_layout(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && a == o.a && b == o.b && c == o.c && d == o.d;
  }
  bool same_domain(const Grid2D& o) const {
    return a == o.a && b == o.b && c == o.c && d == o.d;
  }
};

inline Grid2D make_grid2d(double a, double b, double c, double d, int nx, int ny) {
  if (!(b > a) || !(d > c)) throw ConfigError("grid extents must be positive");
  if (nx < 3 || ny < 3) throw ConfigError("grid needs at least 3 points per axis");
  Grid2D g;
  g.a = a; g.b = b; g.c = c; g.d = d;
  g.nx = nx; g.ny = ny;
  g.dx = (b - a) / nx;
  g.dy = (d - c) / ny;
  return g;
}

// Offset radial grid on [0, L]: r_j = -dr/2 + j*dr for j = 0..nr.
// r_0 < 0 is a ghost node mirroring j = 1 across the origin.
struct RadialGrid {
  double L = 0;
  int nr = 0;
  double dr = 0;

  double r(int j) const { return (j - 0.5) * dr; }
  int size() const { return nr + 1; }  // including the ghost
};

inline RadialGrid make_radial_grid(double L, int nr) {
  if (!(L > 0)) throw ConfigError("radial grid needs L > 0");
  if (nr < 3) throw ConfigError("radial grid needs at least 3 points");
  RadialGrid g;
  g.L = L;
  g.nr = nr;
  g.dr = L / nr;
  return g;
}

// Scalar values on a Grid2D, stored row-major: (i,j) -> i + nx*j.
struct Field2D {
  Grid2D grid;
  std::vector<double> v;

  Field2D() = default;
  explicit Field2D(const Grid2D& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

  double& operator()(int i, int j) { return v[grid.index(i, j)]; }
  double operator()(int i, int j) const { return v[grid.index(i, j)]; }
  int size() const { return grid.size(); }
};

// Scalar values on a RadialGrid, indexed j = 0..nr; v[0] is the ghost.
struct RadialField {
  RadialGrid grid;
  std::vector<double> v;

  RadialField() = default;
  explicit RadialField(const RadialGrid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

  // Discrete Neumann condition at r = 0.
  void sync_ghost() { v[0] = v[1]; }
};

inline double field_min(const std::vector<double>& v) {
  double m = v.empty() ? 0.0 : v[0];
  for (double x : v) m = std::min(m, x);
  return m;
}

inline double field_max(const std::vector<double>& v) {
  double m = v.empty() ? 0.0 : v[0];
  for (double x : v) m = std::max(m, x);
  return m;
}

inline double field_max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  if (!all_finite(v)) throw InternalError(std::string(what) + ": non-finite values");
}

// Initial profiles used by the experiment drivers.
//   gaussian          amplitude * exp(-rate * r^2)
//   indicator_disc    value on r^2 <= r2_max, 0 outside
//   indicator_annuli  value on two annular shells (r^2 ranges, open intervals)
//   indicator_twobump value on two axis-aligned boxes (closed)
enum class IcKind { gaussian, indicator_disc, indicator_annuli, indicator_twobump };

struct IcParams {
  IcKind kind = IcKind::gaussian;
  double amplitude = 1.0;  // gaussian peak or indicator value
  double rate = 1.0;
  double r2_max = 0.1;
  double ann1_lo = 0.5, ann1_hi = 1.0;
  double ann2_lo = 1.5, ann2_hi = 2.0;
  double box1[4] = {-1.0, -0.1, 0.1, 1.0};  // x_lo, x_hi, y_lo, y_hi
  double box2[4] = {0.0, 1.0, -1.0, 0.0};
};

inline double ic_value_at(const IcParams& p, double x, double y) {
  const double r2 = x * x + y * y;
  switch (p.kind) {
    case IcKind::gaussian:
      return p.amplitude * std::exp(-p.rate * r2);
    case IcKind::indicator_disc:
      return r2 <= p.r2_max ? p.amplitude : 0.0;
    case IcKind::indicator_annuli:
      return ((r2 > p.ann1_lo && r2 < p.ann1_hi) || (r2 > p.ann2_lo && r2 < p.ann2_hi))
                 ? p.amplitude
                 : 0.0;
    case IcKind::indicator_twobump:
      return ((x >= p.box1[0] && x <= p.box1[1] && y >= p.box1[2] && y <= p.box1[3]) ||
              (x >= p.box2[0] && x <= p.box2[1] && y >= p.box2[2] && y <= p.box2[3]))
                 ? p.amplitude
                 : 0.0;
  }
  return 0.0;
}

inline Field2D build_initial_condition(const Grid2D& g, const IcParams& p) {
  if (p.amplitude < 0) throw ConfigError("initial condition amplitude must be nonnegative");
  Field2D f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(i, j) = ic_value_at(p, g.x(i), g.y(j));
  return f;
}

inline RadialField build_initial_condition(const RadialGrid& g, const IcParams& p) {
  if (p.amplitude < 0) throw ConfigError("initial condition amplitude must be nonnegative");
  RadialField f(g);
  for (int j = 1; j <= g.nr; ++j) f.v[j] = ic_value_at(p, g.r(j), 0.0);
  f.sync_ghost();
  return f;
}

// Discrete L2 norm of the centered-difference gradient,
// sqrt( sum_ij |grad_h f|^2 dx dy ), periodic wrap.
inline double discrete_gradient_l2(const Field2D& f) {
  require_finite(f.v, "discrete_gradient_l2");
  const Grid2D& g = f.grid;
  const double sx = 0.5 / g.dx, sy = 0.5 / g.dy;
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const int jn = g.up(j), js = g.down(j);
    for (int i = 0; i < g.nx; ++i) {
      const double gx = (f(g.right(i), j) - f(g.left(i), j)) * sx;
      const double gy = (f(i, jn) - f(i, js)) * sy;
      acc += gx * gx + gy * gy;
    }
  }
  return std::sqrt(acc * g.dx * g.dy);
}

// Radial analogue with the r-weighted quadrature used for masses,
// sqrt( 2 pi sum_{j>=1} r_j (d_r f)_j^2 dr ); one-sided at the ends.
inline double discrete_gradient_l2(const RadialField& f) {
  require_finite(f.v, "discrete_gradient_l2");
  const RadialGrid& g = f.grid;
  double acc = 0.0;
  for (int j = 1; j <= g.nr; ++j) {
    const int jp = std::min(j + 1, g.nr), jm = j - 1;  // ghosts: v[0]=v[1], outer reflected
    const double df = (f.v[jp] - f.v[jm]) / ((jp - jm) * g.dr);
    acc += g.r(j) * df * df;
  }
  return std::sqrt(2.0 * M_PI * acc * g.dr);
}

inline double grid_mean(const Field2D& f) {
  double s = 0.0;
  for (double x : f.v) s += x;
  return s / f.size();
}

}  // namespace chemokit
