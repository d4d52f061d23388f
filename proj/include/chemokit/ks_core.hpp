#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "chemokit/grid.hpp"
#include "chemokit/linalg.hpp"

namespace chemokit {

enum class TimeOrder { first, bdf2 };

struct SchemeConfig {
  double epsilon = 0.0;  // relaxation parameter of the concentration equation
  double dt = 0.0;
  TimeOrder order = TimeOrder::first;
  double cg_tol = 1e-10;
  int cg_max_iter = 0;  // 0 -> 10n
  bool jacobi_precond = false;
  bool mass_gauge = true;  // epsilon = 0: subtract the source mean, gauge <c> = 0
};

struct StepInfo {
  long cg_iterations = 0;
  double min_rho = 0.0;  // minimum of the updated density (per species min for two species)
};

struct SimState {
  Field2D rho, conc;
  std::optional<Field2D> rho_prev, conc_prev;  // one step of history, used by bdf2
  double time = 0.0;
  long step = 0;

  bool has_prev() const { return rho_prev.has_value(); }
};

// The h = rho / sqrt(M) update stays finite as long as the mobility exponent
// spread stays below this; past it the density has collapsed to grid scale.
inline constexpr double kMobilityRangeLimit = 400.0;

// Pointwise M = exp(c).  Fails loudly when exp would overflow, which in a
// blow-up run is the honest diagnosis.
inline Field2D mobility(const Field2D& conc) {
  require_finite(conc.v, "mobility");
  const double cmax = field_max(conc.v);
  if (cmax > 700.0)
    throw BlowupError("mobility: exp(c) overflow, max c = " + std::to_string(cmax));
  Field2D m(conc.grid);
  for (int k = 0; k < conc.size(); ++k) m.v[k] = std::exp(conc.v[k]);
  return m;
}

// out = sigma*x - Lap_h x with the periodic five-point Laplacian.
inline void apply_screened_laplacian(const Grid2D& g, double sigma, const std::vector<double>& x,
                                     std::vector<double>& out) {
  const double ix2 = 1.0 / (g.dx * g.dx), iy2 = 1.0 / (g.dy * g.dy);
  const double diag = sigma + 2.0 * (ix2 + iy2);
  out.resize(x.size());
  for (int j = 0; j < g.ny; ++j) {
    const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
    for (int i = 0; i < g.nx; ++i) {
      out[jc + i] = diag * x[jc + i] - ix2 * (x[jc + g.right(i)] + x[jc + g.left(i)]) -
                    iy2 * (x[jn + i] + x[js + i]);
    }
  }
}

// Symmetrized operator (alpha I - dt S) acting on h = rho / sqrt(M).
//
// Only ratios of neighboring mobilities enter S, and the h <-> rho transforms
// carry a common normalization, so M = exp(c) is taken relative to max(c).
// This keeps every weight representable no matter how the mean of c drifts
// (for small epsilon it grows linearly in time on a periodic domain).
class DensityOperator {
public:
  DensityOperator(const Field2D& conc, double dt, double alpha = 1.0)
      : grid_(conc.grid), dt_(dt), alpha_(alpha), s_(conc.size()), is_(conc.size()) {
    require_finite(conc.v, "DensityOperator");
    const double cmax = field_max(conc.v), cmin = field_min(conc.v);
    if (cmax - cmin > kMobilityRangeLimit)
      throw BlowupError("density update: concentration range " + std::to_string(cmax - cmin) +
                        " exceeds mobility limit; density has blown up on this grid");
    for (int k = 0; k < conc.size(); ++k) {
      s_[k] = std::exp(0.5 * (conc.v[k] - cmax));
      is_[k] = 1.0 / s_[k];
    }
  }

  void apply(const std::vector<double>& h, std::vector<double>& out) const {
    const Grid2D& g = grid_;
    const double ax = dt_ / (g.dx * g.dx), ay = dt_ / (g.dy * g.dy);
    out.resize(h.size());
    for (int j = 0; j < g.ny; ++j) {
      const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
      for (int i = 0; i < g.nx; ++i) {
        const int c = jc + i, e = jc + g.right(i), w = jc + g.left(i), n = jn + i, s = js + i;
        const double couple = ax * (s_[e] + s_[w]) + ay * (s_[n] + s_[s]);
        out[c] = (alpha_ + couple * is_[c]) * h[c] - ax * (h[e] + h[w]) - ay * (h[n] + h[s]);
      }
    }
  }

  std::vector<double> diagonal() const {
    const Grid2D& g = grid_;
    const double ax = dt_ / (g.dx * g.dx), ay = dt_ / (g.dy * g.dy);
    std::vector<double> d(s_.size());
    for (int j = 0; j < g.ny; ++j) {
      const int jn = g.nx * g.up(j), js = g.nx * g.down(j), jc = g.nx * j;
      for (int i = 0; i < g.nx; ++i) {
        const int c = jc + i, e = jc + g.right(i), w = jc + g.left(i), n = jn + i, s = js + i;
        d[c] = alpha_ + (ax * (s_[e] + s_[w]) + ay * (s_[n] + s_[s])) * is_[c];
      }
    }
    return d;
  }

  // e^{(c - max c)/2}: the normalized sqrt-mobility used in the transforms.
  const std::vector<double>& half_weights() const { return s_; }

private:
  Grid2D grid_;
  double dt_, alpha_;
  std::vector<double> s_, is_;
};

inline CgOptions cg_options(const SchemeConfig& cfg, const std::vector<double>* jacobi = nullptr) {
  CgOptions opt;
  opt.tol = cfg.cg_tol;
  opt.max_iter = cfg.cg_max_iter;
  opt.jacobi = cfg.jacobi_precond ? jacobi : nullptr;
  return opt;
}

// Solves (alpha I - dt S) h = rhs_density / sqrt(M) and maps back to the
// density; conserves sum(rho) by the telescoping of the weighted stencil.
inline Field2D solve_density(const Field2D& conc_next, const std::vector<double>& rhs_density,
                             double alpha, const SchemeConfig& cfg, StepInfo* info) {
  DensityOperator op(conc_next, cfg.dt, alpha);
  const std::vector<double>& s = op.half_weights();
  const int n = static_cast<int>(rhs_density.size());

  std::vector<double> b(n);
  for (int k = 0; k < n; ++k) b[k] = rhs_density[k] / s[k];
  std::vector<double> h = b;  // initial guess: the dt -> 0 limit

  std::vector<double> diag;
  if (cfg.jacobi_precond) diag = op.diagonal();
  const SolveStats st = cg_solve([&op](const std::vector<double>& in, std::vector<double>& out) { op.apply(in, out); },
                                 b, h, cg_options(cfg, &diag));
  if (info) info->cg_iterations += st.iterations;

  Field2D rho(conc_next.grid);
  for (int k = 0; k < n; ++k) rho.v[k] = h[k] * s[k];
  require_finite(rho.v, "density update");
  return rho;
}

// One backward step of the concentration equation,
// (eps/dt) c^{n+1} - Lap_h c^{n+1} = (eps/dt) c^n + rho^n.
inline Field2D chemo_update(const SimState& state, const SchemeConfig& cfg,
                            StepInfo* info = nullptr) {
  if (!(cfg.epsilon > 0.0))
    throw ConfigError("chemo_update needs epsilon > 0; use elliptic_chemo_solve at epsilon = 0");
  if (!(cfg.dt > 0.0)) throw ConfigError("chemo_update needs dt > 0");
  const Grid2D& g = state.conc.grid;
  const double sigma = cfg.epsilon / cfg.dt;

  std::vector<double> rhs(state.conc.size());
  for (int k = 0; k < state.conc.size(); ++k) rhs[k] = sigma * state.conc.v[k] + state.rho.v[k];

  Field2D c(g);
  c.v = state.conc.v;  // warm start
  const SolveStats st = cg_solve(
      [&g, sigma](const std::vector<double>& in, std::vector<double>& out) {
        apply_screened_laplacian(g, sigma, in, out);
      },
      rhs, c.v, cg_options(cfg));
  if (info) info->cg_iterations += st.iterations;
  require_finite(c.v, "chemo update");
  return c;
}

// Quasi-static concentration: -Lap_h c = rho - <rho> with the gauge <c> = 0.
// On a periodic grid the Laplacian only inverts mean-free data; the gauge
// constant drops out of the density dynamics.
inline Field2D elliptic_chemo_solve(const Field2D& rho, const SchemeConfig& cfg = {},
                                    const Field2D* warm = nullptr, StepInfo* info = nullptr) {
  const Grid2D& g = rho.grid;
  std::vector<double> rhs = rho.v;
  if (cfg.mass_gauge) {
    double mean = 0.0;
    for (double x : rhs) mean += x;
    mean /= rhs.size();
    for (double& x : rhs) x -= mean;
    // kill the round-off mean as well; CG keeps iterates in the mean-free subspace
    mean = 0.0;
    for (double x : rhs) mean += x;
    mean /= rhs.size();
    for (double& x : rhs) x -= mean;
  }

  Field2D c(g);
  if (warm && warm->grid.same_layout(g)) c.v = warm->v;
  if (cfg.mass_gauge && !c.v.empty()) {
    double mean = 0.0;
    for (double x : c.v) mean += x;
    mean /= c.v.size();
    for (double& x : c.v) x -= mean;
  }

  const SolveStats st = cg_solve(
      [&g](const std::vector<double>& in, std::vector<double>& out) {
        apply_screened_laplacian(g, 0.0, in, out);
      },
      rhs, c.v, cg_options(cfg));
  if (info) info->cg_iterations += st.iterations;

  if (cfg.mass_gauge) {
    double mean = 0.0;
    for (double x : c.v) mean += x;
    mean /= c.v.size();
    for (double& x : c.v) x -= mean;
  }
  require_finite(c.v, "elliptic chemo solve");
  return c;
}

// First-order density update: solve (I - dt S) h = rho^n / sqrt(M),
// rho^{n+1} = h sqrt(M), with M built from conc_next.  Nonnegative input
// yields nonnegative output (M-matrix structure); a violation beyond solver
// tolerance is a bug, not a property of the scheme.
inline Field2D density_update(const SimState& state, const Field2D& conc_next,
                              const SchemeConfig& cfg, StepInfo* info = nullptr) {
  if (!(cfg.dt > 0.0)) throw ConfigError("density_update needs dt > 0");
  Field2D rho = solve_density(conc_next, state.rho.v, 1.0, cfg, info);

  const double in_max = field_max_abs(state.rho.v);
  const double in_min = field_min(state.rho.v);
  if (in_min >= -1e-12 * in_max) {
    const double out_min = field_min(rho.v);
    if (out_min < -std::max(cfg.cg_tol, 1e-12) * std::max(in_max, field_max_abs(rho.v)))
      throw InternalError("density_update: negative density " + std::to_string(out_min) +
                          " from nonnegative input");
  }
  if (info) info->min_rho = field_min(rho.v);
  return rho;
}

inline Field2D bdf2_chemo_update(const SimState& state, const SchemeConfig& cfg, StepInfo* info) {
  const Grid2D& g = state.conc.grid;
  const int n = state.conc.size();
  if (cfg.epsilon > 0.0) {
    const double sigma = 1.5 * cfg.epsilon / cfg.dt;
    const double e_dt = cfg.epsilon / cfg.dt;
    std::vector<double> rhs(n);
    for (int k = 0; k < n; ++k)
      rhs[k] = e_dt * (2.0 * state.conc.v[k] - 0.5 * state.conc_prev->v[k]) +
               (2.0 * state.rho.v[k] - state.rho_prev->v[k]);
    Field2D c(g);
    c.v = state.conc.v;
    const SolveStats st = cg_solve(
        [&g, sigma](const std::vector<double>& in, std::vector<double>& out) {
          apply_screened_laplacian(g, sigma, in, out);
        },
        rhs, c.v, cg_options(cfg));
    if (info) info->cg_iterations += st.iterations;
    require_finite(c.v, "bdf2 chemo update");
    return c;
  }
  // epsilon = 0: quasi-static solve with the extrapolated source
  Field2D src(g);
  for (int k = 0; k < n; ++k) src.v[k] = 2.0 * state.rho.v[k] - state.rho_prev->v[k];
  return elliptic_chemo_solve(src, cfg, &state.conc, info);
}

// Advances one step of the first-order scheme: concentration first, then the
// symmetrized positivity-preserving density update.
inline SimState step_first_order(const SimState& state, const SchemeConfig& cfg,
                                 StepInfo* info = nullptr) {
  Field2D cnext = cfg.epsilon > 0.0 ? chemo_update(state, cfg, info)
                                    : elliptic_chemo_solve(state.rho, cfg, &state.conc, info);
  Field2D rnext = density_update(state, cnext, cfg, info);

  SimState out;
  out.rho = std::move(rnext);
  out.conc = std::move(cnext);
  out.rho_prev = state.rho;
  out.conc_prev = state.conc;
  out.time = state.time + cfg.dt;
  out.step = state.step + 1;
  return out;
}

// BDF2 step; the first step (no history yet) falls back to the first-order
// scheme.  Positivity is not guaranteed here: the extrapolated source
// 2 rho^n - rho^{n-1}/2 may change sign.  Negativity is reported via info.
inline SimState step_bdf2(const SimState& state, const SchemeConfig& cfg,
                          StepInfo* info = nullptr) {
  if (!state.has_prev()) return step_first_order(state, cfg, info);

  Field2D cnext = bdf2_chemo_update(state, cfg, info);

  const int n = state.rho.size();
  std::vector<double> rhs(n);
  for (int k = 0; k < n; ++k) rhs[k] = 2.0 * state.rho.v[k] - 0.5 * state.rho_prev->v[k];
  Field2D rnext = solve_density(cnext, rhs, 1.5, cfg, info);
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

inline SimState advance(const SimState& state, const SchemeConfig& cfg, StepInfo* info = nullptr) {
  return cfg.order == TimeOrder::bdf2 ? step_bdf2(state, cfg, info)
                                      : step_first_order(state, cfg, info);
}

}  // namespace chemokit
