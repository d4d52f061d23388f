#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"
#include "chemokit/linalg.hpp"

namespace chemokit {

struct DegenerateConfig {
  double m = 2.0;  // diffusion exponent, > 1
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double mobility_floor = 0.0;  // only used to initialize the Newton iterate
};

// M = exp(c - m/(m-1) rho^(m-1)); at rho = 0 this is exp(c).
inline Field2D degenerate_mobility(const Field2D& rho, const Field2D& conc, double m) {
  if (!(m > 1.0)) throw ConfigError("degenerate_mobility needs m > 1");
  require_finite(rho.v, "degenerate_mobility");
  require_finite(conc.v, "degenerate_mobility");
  const double cmax = field_max(conc.v);
  if (cmax > 700.0)
    throw BlowupError("degenerate_mobility: exp(c) overflow, max c = " + std::to_string(cmax));
  const double kappa = m / (m - 1.0);
  Field2D out(rho.grid);
  for (int k = 0; k < rho.size(); ++k) {
    const double r = std::max(rho.v[k], 0.0);
    out.v[k] = std::exp(conc.v[k] - (r > 0.0 ? kappa * std::pow(r, m - 1.0) : 0.0));
  }
  return out;
}

namespace detail {

// Normalized g = rho^n M^n with the exponent shifted by its max over the
// support; the update is invariant under that scaling.  Cells where the
// exponent underflows act as zero-mobility cells.
inline std::vector<double> degenerate_weights(const Field2D& rho, const Field2D& conc, double m) {
  const double kappa = m / (m - 1.0);
  const int n = rho.size();
  std::vector<double> expo(n, 0.0);
  double ref = -1e308;
  for (int k = 0; k < n; ++k) {
    if (rho.v[k] > 0.0) {
      expo[k] = conc.v[k] - kappa * std::pow(rho.v[k], m - 1.0);
      ref = std::max(ref, expo[k]);
    }
  }
  std::vector<double> g(n, 0.0);
  for (int k = 0; k < n; ++k)
    if (rho.v[k] > 0.0) g[k] = rho.v[k] * std::exp(expo[k] - ref);
  return g;
}

}  // namespace detail

// SPD operator of the semi-implicit porous-medium step, acting on
// u = rho^{n+1} / g over the support of g; off-support rows are identity.
// Face weights are geometric means sqrt(g_P g_Q), zero if either side is 0,
// so the support cannot grow and the M-matrix sign pattern holds.
class SupportOperator {
public:
  SupportOperator(const Grid2D& grid, std::vector<double> g, double dt)
      : grid_(grid), g_(std::move(g)), sq_(g_.size()), dt_(dt) {
    for (std::size_t k = 0; k < g_.size(); ++k) sq_[k] = std::sqrt(g_[k]);
  }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const Grid2D& g = grid_;
    const double ax = dt_ / (g.dx * g.dx), ay = dt_ / (g.dy * g.dy);
    out.resize(u.size());
    for (int j = 0; j < g.ny; ++j) {
      const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
      for (int i = 0; i < g.nx; ++i) {
        const int c = jc + i;
        if (g_[c] <= 0.0) {
          out[c] = u[c];
          continue;
        }
        const int e = jc + g.right(i), w = jc + g.left(i), n = jn + i, s = js + i;
        const double we = sq_[c] * sq_[e], ww = sq_[c] * sq_[w];
        const double wn = sq_[c] * sq_[n], ws = sq_[c] * sq_[s];
        out[c] = (g_[c] + ax * (we + ww) + ay * (wn + ws)) * u[c] -
                 ax * (we * u[e] + ww * u[w]) - ay * (wn * u[n] + ws * u[s]);
      }
    }
  }

  std::vector<double> diagonal() const {
    const Grid2D& g = grid_;
    const double ax = dt_ / (g.dx * g.dx), ay = dt_ / (g.dy * g.dy);
    std::vector<double> d(g_.size(), 1.0);
    for (int j = 0; j < g.ny; ++j) {
      const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
      for (int i = 0; i < g.nx; ++i) {
        const int c = jc + i;
        if (g_[c] <= 0.0) continue;
        const int e = jc + g.right(i), w = jc + g.left(i), n = jn + i, s = js + i;
        d[c] = g_[c] + ax * sq_[c] * (sq_[e] + sq_[w]) + ay * sq_[c] * (sq_[n] + sq_[s]);
      }
    }
    return d;
  }

  const std::vector<double>& weights() const { return g_; }

private:
  Grid2D grid_;
  std::vector<double> g_, sq_;
  double dt_;
};

// Semi-implicit positivity-preserving subcritical step:
//   (rho^{n+1} - rho^n)/dt = div( rho^n M^n grad( rho^{n+1} / (rho^n M^n) ) ),
// concentration solved first by the usual backward step.
inline SimState step_subcritical_semi_implicit(const SimState& state, const SchemeConfig& cfg,
                                               const DegenerateConfig& deg,
                                               StepInfo* info = nullptr) {
  if (!(deg.m > 1.0)) throw ConfigError("step_subcritical_semi_implicit needs m > 1");
  if (!(cfg.dt > 0.0)) throw ConfigError("step_subcritical_semi_implicit needs dt > 0");

  Field2D cnext = cfg.epsilon > 0.0 ? chemo_update(state, cfg, info)
                                    : elliptic_chemo_solve(state.rho, cfg, &state.conc, info);

  SupportOperator op(state.rho.grid, detail::degenerate_weights(state.rho, state.conc, deg.m),
                     cfg.dt);
  const std::vector<double>& g = op.weights();
  const int n = state.rho.size();

  std::vector<double> rhs(n, 0.0), u(n, 0.0);
  for (int k = 0; k < n; ++k) {
    if (g[k] > 0.0) {
      rhs[k] = state.rho.v[k];
      u[k] = 1.0;  // u -> 1 as dt -> 0
    }
  }
  std::vector<double> diag;
  if (cfg.jacobi_precond) diag = op.diagonal();
  const SolveStats st =
      cg_solve([&op](const std::vector<double>& in, std::vector<double>& out) { op.apply(in, out); },
               rhs, u, cg_options(cfg, &diag));
  if (info) info->cg_iterations += st.iterations;

  Field2D rnext(state.rho.grid);
  for (int k = 0; k < n; ++k) rnext.v[k] = g[k] > 0.0 ? g[k] * u[k] : state.rho.v[k];
  require_finite(rnext.v, "semi-implicit degenerate step");

  const double scale = std::max(field_max_abs(state.rho.v), field_max_abs(rnext.v));
  if (field_min(state.rho.v) >= -1e-12 * scale &&
      field_min(rnext.v) < -std::max(cfg.cg_tol, 1e-12) * scale)
    throw InternalError("semi-implicit degenerate step: negative density");
  if (info) info->min_rho = field_min(rnext.v);

  SimState out;
  out.rho = std::move(rnext);
  out.conc = std::move(cnext);
  out.rho_prev = state.rho;
  out.conc_prev = state.conc;
  out.time = state.time + cfg.dt;
  out.step = state.step + 1;
  return out;
}

namespace detail {

// Conservative centered discretization of div(rho grad c): face density is
// the arithmetic mean, face gradient the one-sided difference.
inline void apply_advection(const Grid2D& g, const std::vector<double>& rho,
                            const std::vector<double>& c, std::vector<double>& out) {
  const double ix2 = 1.0 / (g.dx * g.dx), iy2 = 1.0 / (g.dy * g.dy);
  out.resize(rho.size());
  for (int j = 0; j < g.ny; ++j) {
    const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
    for (int i = 0; i < g.nx; ++i) {
      const int cc = jc + i, e = jc + g.right(i), w = jc + g.left(i), n = jn + i, s = js + i;
      const double fe = 0.5 * (rho[cc] + rho[e]) * (c[e] - c[cc]);
      const double fw = 0.5 * (rho[w] + rho[cc]) * (c[cc] - c[w]);
      const double fn = 0.5 * (rho[cc] + rho[n]) * (c[n] - c[cc]);
      const double fs = 0.5 * (rho[s] + rho[cc]) * (c[cc] - c[s]);
      out[cc] = ix2 * (fe - fw) + iy2 * (fn - fs);
    }
  }
}

// F(rho) = rho - rho_n - dt [ Lap(rho^m) - div(rho grad c) ]; negative bases
// are clamped to keep the power real (logged by the caller via min_rho).
inline void newton_residual(const Grid2D& g, const std::vector<double>& rho,
                            const std::vector<double>& rho_n, const std::vector<double>& c,
                            double m, double dt, std::vector<double>& out) {
  const int n = static_cast<int>(rho.size());
  std::vector<double> pm(n), lap(n), adv(n);
  for (int k = 0; k < n; ++k) pm[k] = std::pow(std::max(rho[k], 0.0), m);
  apply_screened_laplacian(g, 0.0, pm, lap);  // lap = -Lap(pm)
  apply_advection(g, rho, c, adv);
  out.resize(n);
  for (int k = 0; k < n; ++k) out[k] = rho[k] - rho_n[k] - dt * (-lap[k] - adv[k]);
}

}  // namespace detail

// Fully implicit subcritical step solved by damped Newton iteration:
//   (rho^{n+1} - rho^n)/dt = Lap (rho^{n+1})^m - div(rho^{n+1} grad c^{n+1}).
// Conservative fluxes keep the mass telescoping exactly; positivity is not
// guaranteed by this scheme (min_rho is reported, not enforced).
inline SimState step_subcritical_newton(const SimState& state, const SchemeConfig& cfg,
                                        const DegenerateConfig& deg, StepInfo* info = nullptr) {
  if (!(deg.m > 1.0)) throw ConfigError("step_subcritical_newton needs m > 1");
  if (!(cfg.dt > 0.0)) throw ConfigError("step_subcritical_newton needs dt > 0");

  Field2D cnext = cfg.epsilon > 0.0 ? chemo_update(state, cfg, info)
                                    : elliptic_chemo_solve(state.rho, cfg, &state.conc, info);

  const Grid2D& g = state.rho.grid;
  const int n = state.rho.size();
  std::vector<double> rho(n);
  for (int k = 0; k < n; ++k) rho[k] = std::max(state.rho.v[k], deg.mobility_floor);

  std::vector<double> f(n), fnew(n), delta(n), trial(n);
  detail::newton_residual(g, rho, state.rho.v, cnext.v, deg.m, cfg.dt, f);
  double fnorm = field_max_abs(f);
  std::string history;

  bool converged = fnorm <= deg.newton_tol;
  for (int it = 0; it < deg.newton_max_iter && !converged; ++it) {
    // Jacobian apply: J d = d - dt [ Lap(m rho^{m-1} d) - div(d grad c) ]
    std::vector<double> dp(n);
    for (int k = 0; k < n; ++k)
      dp[k] = deg.m * std::pow(std::max(rho[k], 0.0), deg.m - 1.0);
    auto jac = [&](const std::vector<double>& d, std::vector<double>& out) {
      std::vector<double> pd(n), lap(n), adv(n);
      for (int k = 0; k < n; ++k) pd[k] = dp[k] * d[k];
      apply_screened_laplacian(g, 0.0, pd, lap);
      detail::apply_advection(g, d, cnext.v, adv);
      out.resize(n);
      for (int k = 0; k < n; ++k) out[k] = d[k] - cfg.dt * (-lap[k] - adv[k]);
    };

    std::vector<double> neg_f(n);
    for (int k = 0; k < n; ++k) neg_f[k] = -f[k];
    delta.assign(n, 0.0);
    CgOptions lin;
    lin.tol = 1e-12;
    lin.max_iter = cfg.cg_max_iter;
    const SolveStats st = bicgstab_solve(jac, neg_f, delta, lin);
    if (info) info->cg_iterations += st.iterations;

    // Damped line search: halve until the residual decreases.
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      for (int k = 0; k < n; ++k) trial[k] = rho[k] + lambda * delta[k];
      detail::newton_residual(g, trial, state.rho.v, cnext.v, deg.m, cfg.dt, fnew);
      const double fn = field_max_abs(fnew);
      if (fn < fnorm) {
        rho.swap(trial);
        f.swap(fnew);
        fnorm = fn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    history += (history.empty() ? "" : " ") + std::to_string(fnorm);
    if (!accepted)
      throw SolverError("newton: line search stalled, residuals " + history, fnorm, it + 1);
    converged = fnorm <= deg.newton_tol;
  }
  if (!converged)
    throw SolverError("newton: no convergence in " + std::to_string(deg.newton_max_iter) +
                          " iterations, residuals " + history,
                      fnorm, deg.newton_max_iter);

  Field2D rnext(g);
  rnext.v = std::move(rho);
  require_finite(rnext.v, "newton degenerate step");
  if (info) info->min_rho = field_min(rnext.v);

  SimState out;
  out.rho = std::move(rnext);
  out.conc = std::move(cnext);
  out.rho_prev = state.rho;
  out.conc_prev = state.conc;
  out.time = state.time + cfg.dt;
  out.step = state.step + 1;
  return out;
}

}  // namespace chemokit
