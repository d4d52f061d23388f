#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "chemokit/errors.hpp"

namespace chemokit {

struct CgOptions {
  double tol = 1e-10;  // relative residual
  int max_iter = 0;    // 0 means 10*n
  // Optional Jacobi preconditioner: the operator diagonal. Useful when the
  // mobility weights have a large range (late blow-up stages).
  const std::vector<double>* jacobi = nullptr;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // relative
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Conjugate gradient for a symmetric positive definite operator given as a
// matrix-free apply.  Apply has signature void(const vector&, vector&).
// Throws SolverError on stagnation, indefiniteness or NaN.
template <class Apply>
SolveStats cg_solve(Apply&& apply, const std::vector<double>& rhs, std::vector<double>& x,
                    const CgOptions& opt = {}) {
  const std::size_t n = rhs.size();
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(10 * n);
  const double nb = norm2(rhs);
  if (nb == 0.0) {
    x.assign(n, 0.0);
    return {0, 0.0};
  }
  if (x.size() != n) x.assign(n, 0.0);

  std::vector<double> r(n), z(n), p(n), q(n);
  apply(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - q[k];

  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (opt.jacobi) {
      for (std::size_t k = 0; k < n; ++k) out[k] = in[k] / (*opt.jacobi)[k];
    } else {
      out = in;
    }
  };

  double res = norm2(r) / nb;
  if (res <= opt.tol) return {0, res};

  precondition(r, z);
  p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0) || !std::isfinite(pq))
      throw SolverError("cg: operator not positive definite (p'Ap = " + std::to_string(pq) + ")",
                        res, it);
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    res = norm2(r) / nb;
    if (!std::isfinite(res)) throw SolverError("cg: non-finite residual", res, it);
    if (res <= opt.tol) return {it, res};
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  throw SolverError("cg: no convergence in " + std::to_string(max_iter) +
                        " iterations (residual " + std::to_string(res) + ")",
                    res, max_iter);
}

// BiCGStab for the nonsymmetric Jacobians arising in the implicit
// porous-medium step.  Same calling convention as cg_solve.
template <class Apply>
SolveStats bicgstab_solve(Apply&& apply, const std::vector<double>& rhs, std::vector<double>& x,
                          const CgOptions& opt = {}) {
  const std::size_t n = rhs.size();
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(10 * n);
  const double nb = norm2(rhs);
  if (nb == 0.0) {
    x.assign(n, 0.0);
    return {0, 0.0};
  }
  if (x.size() != n) x.assign(n, 0.0);

  std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n);
  apply(x, v);
  for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - v[k];
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);

  double res = norm2(r) / nb;
  for (int it = 1; it <= max_iter; ++it) {
    if (res <= opt.tol) return {it - 1, res};
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0) throw SolverError("bicgstab: breakdown (rho = 0)", res, it);
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    apply(p, v);
    alpha = rho / dot(r0, v);
    for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
    if (norm2(s) / nb <= opt.tol) {
      for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k];
      return {it, norm2(s) / nb};
    }
    apply(s, t);
    const double tt = dot(t, t);
    if (tt == 0.0) throw SolverError("bicgstab: breakdown (t = 0)", res, it);
    omega = dot(t, s) / tt;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k] + omega * s[k];
      r[k] = s[k] - omega * t[k];
    }
    res = norm2(r) / nb;
    if (!std::isfinite(res)) throw SolverError("bicgstab: non-finite residual", res, it);
    if (omega == 0.0) throw SolverError("bicgstab: breakdown (omega = 0)", res, it);
  }
  throw SolverError("bicgstab: no convergence in " + std::to_string(max_iter) +
                        " iterations (residual " + std::to_string(res) + ")",
                    res, max_iter);
}

// sub[i] multiplies x[i-1] in row i (sub[0] unused), super[i] multiplies
// x[i+1] (super[n-1] unused).
struct TridiagonalSystem {
  std::vector<double> sub, diag, super, rhs;
  std::size_t size() const { return diag.size(); }
};

// Thomas elimination.  The schemes only produce diagonally dominant or SPD
// systems, so no pivoting; a vanishing pivot is reported as an error.
inline std::vector<double> tridiag_solve(const TridiagonalSystem& sys) {
  const std::size_t n = sys.size();
  if (sys.sub.size() != n || sys.super.size() != n || sys.rhs.size() != n)
    throw InternalError("tridiag_solve: inconsistent lengths");
  std::vector<double> c(n), d(n), x(n);

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max({scale, std::abs(sys.diag[i]), std::abs(sys.sub[i]), std::abs(sys.super[i])});

  double piv = sys.diag[0];
  if (std::abs(piv) <= 1e-300 * std::max(scale, 1.0))
    throw SolverError("tridiag_solve: zero pivot at row 0", 0.0, 0);
  c[0] = sys.super[0] / piv;
  d[0] = sys.rhs[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = sys.diag[i] - sys.sub[i] * c[i - 1];
    if (std::abs(piv) <= 1e-300 * std::max(scale, 1.0))
      throw SolverError("tridiag_solve: zero pivot at row " + std::to_string(i), 0.0, 0);
    c[i] = sys.super[i] / piv;
    d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / piv;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace chemokit
