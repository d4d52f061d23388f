#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"
#include "chemokit/linalg.hpp"

namespace chemokit {

struct RadialSimState {
  RadialField rho, conc;
  double time = 0.0;
  long step = 0;
};

// Metric weight sqrt(r_j r_{j+1}) of the face between nodes j and j+1.
// The face between the ghost and node 1 sits exactly at r = 0, where the
// geometric weight vanishes (r_0 < 0 would make it imaginary); the outer
// face carries zero flux by reflection.  Both return 0.
inline double radial_face_weight(const RadialGrid& g, int j) {
  if (j <= 0 || j >= g.nr) return 0.0;
  return std::sqrt(g.r(j) * g.r(j + 1));
}

// Solves the conservative radial step
//   (rho^{n+1}_j - rho^n_j)/dt = (1/(r_j dr^2)) [ W_{j+1/2} (u_{j+1}-u_j) - W_{j-1/2} (u_j-u_{j-1}) ]
// in u_j = rho^{n+1}_j / mob_j with face weights W = sqrt(r r') sqrt(mob mob').
// Scaling row j by r_j makes the system a symmetric M-matrix, so the direct
// solve preserves positivity and the r-weighted mass telescopes exactly.
// Cells with mob_j = 0 exchange no flux and keep their density.
inline RadialField radial_mobility_solve(const RadialGrid& g, const std::vector<double>& mob,
                                         const std::vector<double>& rho_n, double dt) {
  const int nr = g.nr;
  const double a = dt / (g.dr * g.dr);

  std::vector<double> sq(nr + 1, 0.0);
  for (int j = 1; j <= nr; ++j) sq[j] = std::sqrt(mob[j]);

  TridiagonalSystem sys;
  sys.sub.assign(nr, 0.0);
  sys.diag.assign(nr, 0.0);
  sys.super.assign(nr, 0.0);
  sys.rhs.assign(nr, 0.0);

  auto w = [&](int j) {  // face between j and j+1
    return radial_face_weight(g, j) * sq[j] * sq[std::min(j + 1, nr)];
  };

  for (int j = 1; j <= nr; ++j) {
    const int row = j - 1;
    if (mob[j] <= 0.0) {  // degenerate cell: no flux in or out this step
      sys.diag[row] = 1.0;
      continue;
    }
    const double wl = w(j - 1), wr = w(j);
    sys.diag[row] = g.r(j) * mob[j] + a * (wl + wr);
    if (row > 0) sys.sub[row] = -a * wl;
    if (row < nr - 1) sys.super[row] = -a * wr;
    sys.rhs[row] = g.r(j) * rho_n[j];
  }

  const std::vector<double> u = tridiag_solve(sys);

  RadialField rho(g);
  for (int j = 1; j <= nr; ++j) rho.v[j] = mob[j] > 0.0 ? mob[j] * u[j - 1] : rho_n[j];
  rho.sync_ghost();
  require_finite(rho.v, "radial density update");
  return rho;
}

// Backward concentration step on the offset grid; for epsilon = 0 the
// quasi-static equation is solved with the r-weighted mean of rho removed
// and c gauged to r-weighted mean zero (grounded tridiagonal solve).
inline RadialField radial_chemo_update(const RadialSimState& state, const SchemeConfig& cfg,
                                       StepInfo* /*info*/ = nullptr) {
  const RadialGrid& g = state.conc.grid;
  const int nr = g.nr;
  const double idr2 = 1.0 / (g.dr * g.dr);

  if (cfg.epsilon > 0.0) {
    if (!(cfg.dt > 0.0)) throw ConfigError("radial_chemo_update needs dt > 0");
    const double sigma = cfg.epsilon / cfg.dt;
    TridiagonalSystem sys;
    sys.sub.assign(nr, 0.0);
    sys.diag.assign(nr, 0.0);
    sys.super.assign(nr, 0.0);
    sys.rhs.assign(nr, 0.0);
    for (int j = 1; j <= nr; ++j) {
      const int row = j - 1;
      const double wl = radial_face_weight(g, j - 1) * idr2 / g.r(j);
      const double wr = radial_face_weight(g, j) * idr2 / g.r(j);
      sys.diag[row] = sigma + wl + wr;
      if (row > 0) sys.sub[row] = -wl;
      if (row < nr - 1) sys.super[row] = -wr;
      sys.rhs[row] = sigma * state.conc.v[j] + state.rho.v[j];
    }
    const std::vector<double> c = tridiag_solve(sys);
    RadialField out(g);
    for (int j = 1; j <= nr; ++j) out.v[j] = c[j - 1];
    out.sync_ghost();
    require_finite(out.v, "radial chemo update");
    return out;
  }

  // epsilon = 0.  Row j scaled by r_j is a singular symmetric system with a
  // constant null vector; ground c_1 = 0, solve rows 2..nr, then shift to the
  // r-weighted gauge.
  double rsum = 0.0, rho_mean = 0.0;
  for (int j = 1; j <= nr; ++j) {
    rsum += g.r(j);
    rho_mean += g.r(j) * state.rho.v[j];
  }
  rho_mean /= rsum;

  const int n = nr - 1;  // unknowns c_2..c_nr
  TridiagonalSystem sys;
  sys.sub.assign(n, 0.0);
  sys.diag.assign(n, 0.0);
  sys.super.assign(n, 0.0);
  sys.rhs.assign(n, 0.0);
  for (int j = 2; j <= nr; ++j) {
    const int row = j - 2;
    const double wl = radial_face_weight(g, j - 1) * idr2;
    const double wr = radial_face_weight(g, j) * idr2;
    sys.diag[row] = wl + wr;
    if (row > 0) sys.sub[row] = -wl;
    if (row < n - 1) sys.super[row] = -wr;
    sys.rhs[row] = g.r(j) * (state.rho.v[j] - rho_mean);
    // c_1 = 0 absorbs the wl coupling of the first row
  }
  const std::vector<double> ci = tridiag_solve(sys);

  RadialField out(g);
  out.v[1] = 0.0;
  for (int j = 2; j <= nr; ++j) out.v[j] = ci[j - 2];
  double gauge = 0.0;
  for (int j = 1; j <= nr; ++j) gauge += g.r(j) * out.v[j];
  gauge /= rsum;
  for (int j = 1; j <= nr; ++j) out.v[j] -= gauge;
  out.sync_ghost();
  require_finite(out.v, "radial chemo solve");
  return out;
}

// Critical-case (m = 1) density update with M = exp(c^{n+1}), normalized by
// max(c) as in the cartesian stepper.
inline RadialField radial_density_update(const RadialSimState& state, const RadialField& conc_next,
                                         const SchemeConfig& cfg, StepInfo* info = nullptr) {
  if (!(cfg.dt > 0.0)) throw ConfigError("radial_density_update needs dt > 0");
  const RadialGrid& g = state.rho.grid;
  const int nr = g.nr;

  double cmax = conc_next.v[1], cmin = conc_next.v[1];
  for (int j = 1; j <= nr; ++j) {
    cmax = std::max(cmax, conc_next.v[j]);
    cmin = std::min(cmin, conc_next.v[j]);
  }
  if (cmax - cmin > kMobilityRangeLimit)
    throw BlowupError("radial density update: concentration range " + std::to_string(cmax - cmin) +
                      " exceeds mobility limit");

  std::vector<double> mob(nr + 1, 0.0);
  for (int j = 1; j <= nr; ++j) mob[j] = std::exp(conc_next.v[j] - cmax);

  RadialField rho = radial_mobility_solve(g, mob, state.rho.v, cfg.dt);

  const double in_max = field_max_abs(state.rho.v);
  const double out_min = field_min(rho.v);
  if (field_min(state.rho.v) >= -1e-12 * in_max &&
      out_min < -1e-12 * std::max(in_max, field_max_abs(rho.v)))
    throw InternalError("radial_density_update: negative density " + std::to_string(out_min));
  if (info) info->min_rho = out_min;
  return rho;
}

// Initial concentration for the blow-up study: (1/r)(r c')' - c + rho = 0,
// zero-flux at both ends.  Strictly positive definite, no gauge needed.
inline RadialField radial_screened_poisson(const RadialField& rho) {
  require_finite(rho.v, "radial_screened_poisson");
  const RadialGrid& g = rho.grid;
  const int nr = g.nr;
  const double idr2 = 1.0 / (g.dr * g.dr);

  TridiagonalSystem sys;
  sys.sub.assign(nr, 0.0);
  sys.diag.assign(nr, 0.0);
  sys.super.assign(nr, 0.0);
  sys.rhs.assign(nr, 0.0);
  for (int j = 1; j <= nr; ++j) {
    const int row = j - 1;
    const double wl = radial_face_weight(g, j - 1) * idr2 / g.r(j);
    const double wr = radial_face_weight(g, j) * idr2 / g.r(j);
    sys.diag[row] = 1.0 + wl + wr;
    if (row > 0) sys.sub[row] = -wl;
    if (row < nr - 1) sys.super[row] = -wr;
    sys.rhs[row] = rho.v[j];
  }
  const std::vector<double> c = tridiag_solve(sys);
  RadialField out(g);
  for (int j = 1; j <= nr; ++j) out.v[j] = c[j - 1];
  out.sync_ghost();
  return out;
}

// One radial step: concentration solve, then the conservative positivity
// preserving density solve.  m = 1 uses mobility exp(c^{n+1}); m > 1 uses the
// degenerate mobility rho^n exp(c^n - m/(m-1) (rho^n)^(m-1)) frozen at step n.
inline RadialSimState step_radial(const RadialSimState& state, const SchemeConfig& cfg,
                                  double m = 1.0, StepInfo* info = nullptr) {
  if (m < 1.0) throw ConfigError("step_radial needs m >= 1");
  RadialField cnext = radial_chemo_update(state, cfg, info);

  RadialField rnext(state.rho.grid);
  if (m == 1.0) {
    rnext = radial_density_update(state, cnext, cfg, info);
  } else {
    const RadialGrid& g = state.rho.grid;
    const double kappa = m / (m - 1.0);
    std::vector<double> expo(g.nr + 1, 0.0), mob(g.nr + 1, 0.0);
    double ref = -1e308;
    for (int j = 1; j <= g.nr; ++j) {
      if (state.rho.v[j] > 0.0) {
        expo[j] = state.conc.v[j] - kappa * std::pow(state.rho.v[j], m - 1.0);
        ref = std::max(ref, expo[j]);
      }
    }
    for (int j = 1; j <= g.nr; ++j)
      mob[j] = state.rho.v[j] > 0.0 ? state.rho.v[j] * std::exp(expo[j] - ref) : 0.0;
    rnext = radial_mobility_solve(g, mob, state.rho.v, cfg.dt);

    const double scale = std::max(field_max_abs(state.rho.v), field_max_abs(rnext.v));
    if (field_min(rnext.v) < -1e-12 * scale)
      throw InternalError("radial degenerate step: negative density");
    if (info) info->min_rho = field_min(rnext.v);
  }

  RadialSimState out;
  out.rho = std::move(rnext);
  out.conc = std::move(cnext);
  out.time = state.time + cfg.dt;
  out.step = state.step + 1;
  return out;
}

}  // namespace chemokit
