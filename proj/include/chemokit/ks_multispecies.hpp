#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"

namespace chemokit {

// Two cell populations coupled through one chemoattractant:
//   d rho_i/dt + chi_i div(rho_i grad c) = mu_i Lap rho_i
//   eps dc/dt = D Lap c + alpha_1 rho_1 + alpha_2 rho_2 - beta c
struct TwoSpeciesConfig {
  double chi1 = 1.0, chi2 = 10.0;
  double mu1 = 1.0, mu2 = 1.0;
  double alpha1 = 1.0, alpha2 = 1.0;
  double beta = 1.0;
  double D = 1.0;
  double epsilon = 0.0;
  double dt = 0.0;
  double cg_tol = 1e-10;
  int cg_max_iter = 0;
  bool jacobi_precond = false;
};

struct TwoSpeciesState {
  Field2D rho1, rho2, conc;
  double time = 0.0;
  long step = 0;
};

// Each species update is the symmetrized first-order step with mobility
// M_i = exp((chi_i/mu_i) c^{n+1}):
//   mu Lap rho - chi div(rho grad c) = mu div(M grad(rho/M)).
// The consumption term beta c makes the concentration operator strictly
// positive definite, so epsilon = 0 needs no gauge.
inline TwoSpeciesState step_two_species(const TwoSpeciesState& state, const TwoSpeciesConfig& cfg,
                                        StepInfo* info = nullptr) {
  if (!(cfg.dt > 0.0)) throw ConfigError("step_two_species needs dt > 0");
  if (!(cfg.beta > 0.0) || !(cfg.D > 0.0) || !(cfg.mu1 > 0.0) || !(cfg.mu2 > 0.0))
    throw ConfigError("step_two_species needs positive beta, D, mu");
  const Grid2D& g = state.conc.grid;
  const int n = state.conc.size();

  const double sigma = cfg.epsilon / cfg.dt + cfg.beta;
  std::vector<double> rhs(n);
  for (int k = 0; k < n; ++k)
    rhs[k] = (cfg.epsilon / cfg.dt) * state.conc.v[k] + cfg.alpha1 * state.rho1.v[k] +
             cfg.alpha2 * state.rho2.v[k];

  Field2D cnext(g);
  cnext.v = state.conc.v;
  SchemeConfig lin;
  lin.dt = cfg.dt;
  lin.cg_tol = cfg.cg_tol;
  lin.cg_max_iter = cfg.cg_max_iter;
  const SolveStats st = cg_solve(
      [&g, sigma, &cfg](const std::vector<double>& in, std::vector<double>& out) {
        apply_screened_laplacian(g, sigma / cfg.D, in, out);
        for (double& x : out) x *= cfg.D;
      },
      rhs, cnext.v, cg_options(lin));
  if (info) info->cg_iterations += st.iterations;
  require_finite(cnext.v, "two-species chemo update");

  auto species_update = [&](const Field2D& rho, double chi, double mu) {
    Field2D scaled(g);
    const double ratio = chi / mu;
    for (int k = 0; k < n; ++k) scaled.v[k] = ratio * cnext.v[k];
    SchemeConfig sp = lin;
    sp.dt = cfg.dt * mu;  // (I - dt mu S) in the h variables
    sp.jacobi_precond = cfg.jacobi_precond;
    StepInfo si;
    Field2D out = solve_density(scaled, rho.v, 1.0, sp, &si);
    if (info) info->cg_iterations += si.cg_iterations;

    const double scale = std::max(field_max_abs(rho.v), field_max_abs(out.v));
    if (field_min(rho.v) >= -1e-12 * scale &&
        field_min(out.v) < -std::max(cfg.cg_tol, 1e-12) * scale)
      throw InternalError("two-species step: negative density");
    return out;
  };

  TwoSpeciesState out;
  out.rho1 = species_update(state.rho1, cfg.chi1, cfg.mu1);
  out.rho2 = species_update(state.rho2, cfg.chi2, cfg.mu2);
  out.conc = std::move(cnext);
  out.time = state.time + cfg.dt;
  out.step = state.step + 1;
  if (info) info->min_rho = std::min(field_min(out.rho1.v), field_min(out.rho2.v));
  return out;
}

}  // namespace chemokit
