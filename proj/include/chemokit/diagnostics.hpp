#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"
#include "chemokit/ks_radial.hpp"

namespace chemokit {

// Per-step measurements recorded by the experiment drivers.
struct DiagnosticsRecord {
  double time = 0.0;
  double mass = 0.0;
  double mass2 = 0.0;  // second species, when present
  double free_energy = 0.0;
  double max_rho = 0.0;
  double min_rho = 0.0;
  double grad_rho_l2 = 0.0;
  double dt_grad_rho = 0.0;         // the step-size monitor dt * ||grad rho||
  double small_data_lhs = 0.0;      // ||rho||^2 + eps ||grad c||^2
  long cg_iterations = 0;
  bool noblowup_ok = true;          // dt * ||grad rho|| <= 1
  bool small_data_ok = true;        // lhs <= 2 e^{-T}
};

inline double total_mass(const Field2D& f) {
  require_finite(f.v, "total_mass");
  double s = 0.0;
  for (double x : f.v) s += x;
  return s * f.grid.dx * f.grid.dy;
}

// Midpoint rule in polar coordinates, 2 pi sum_{j>=1} r_j f_j dr.
inline double total_mass(const RadialField& f) {
  require_finite(f.v, "total_mass");
  const RadialGrid& g = f.grid;
  double s = 0.0;
  for (int j = 1; j <= g.nr; ++j) s += g.r(j) * f.v[j];
  return 2.0 * M_PI * s * g.dr;
}

inline double discrete_l2(const Field2D& f) {
  double s = 0.0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s * f.grid.dx * f.grid.dy);
}

inline double discrete_l2(const RadialField& f) {
  const RadialGrid& g = f.grid;
  double s = 0.0;
  for (int j = 1; j <= g.nr; ++j) s += g.r(j) * f.v[j] * f.v[j];
  return std::sqrt(2.0 * M_PI * s * g.dr);
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

enum class EnergyVariant { pp, pe };

// Free energy along the flow.
//   pp: integral of rho log rho - rho - rho c + |grad c|^2 / 2
//   pe: integral of rho log rho - rho, minus the pairing rho c / 2 with c
//       re-solved from rho (the periodic stand-in for the log-kernel form).
inline double free_energy(const Field2D& rho, const Field2D& conc, double /*epsilon*/,
                          EnergyVariant variant) {
  const Grid2D& g = rho.grid;
  const double w = g.dx * g.dy;
  double f = 0.0;
  if (variant == EnergyVariant::pp) {
    for (int k = 0; k < rho.size(); ++k) f += xlogx(rho.v[k]) - rho.v[k] - rho.v[k] * conc.v[k];
    const double gc = discrete_gradient_l2(conc);
    return f * w + 0.5 * gc * gc;
  }
  const Field2D c = elliptic_chemo_solve(rho);
  for (int k = 0; k < rho.size(); ++k)
    f += xlogx(rho.v[k]) - rho.v[k] - 0.5 * rho.v[k] * c.v[k];
  return f * w;
}

// Relative l1 difference, restricted to coincident nodes when one grid
// refines the other by an integer factor (node-centered layouts share the
// coarse nodes at stride fine/coarse).
inline double l1_rel_error(const Field2D& f, const Field2D& g) {
  const Field2D* fine = &f;
  const Field2D* coarse = &g;
  if (!f.grid.same_domain(g.grid)) throw ConfigError("l1_rel_error: different domains");
  if (fine->grid.nx < coarse->grid.nx) std::swap(fine, coarse);
  if (fine->grid.nx % coarse->grid.nx != 0 || fine->grid.ny % coarse->grid.ny != 0)
    throw ConfigError("l1_rel_error: grids are not nested");
  const int kx = fine->grid.nx / coarse->grid.nx, ky = fine->grid.ny / coarse->grid.ny;

  double num = 0.0, den = 0.0;
  for (int j = 0; j < coarse->grid.ny; ++j)
    for (int i = 0; i < coarse->grid.nx; ++i) {
      const double vf = (*fine)(i * kx, j * ky);
      const double vc = (*coarse)(i, j);
      // the denominator follows the first argument
      const double base = (&f == fine) ? vf : vc;
      num += std::abs(vf - vc);
      den += std::abs(base);
    }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

// Absolute l1 distance sum |f - g| dx dy on identical layouts.
inline double l1_abs_error(const Field2D& f, const Field2D& g) {
  if (!f.grid.same_layout(g.grid)) throw ConfigError("l1_abs_error: layouts differ");
  double s = 0.0;
  for (int k = 0; k < f.size(); ++k) s += std::abs(f.v[k] - g.v[k]);
  return s * f.grid.dx * f.grid.dy;
}

struct StabilityReport {
  double dt_grad_rho = 0.0;
  double small_data_lhs = 0.0;
  bool noblowup_ok = true;
  bool small_data_ok = true;
};

// Evaluates the step-size and small-data monitors.  These are sufficient
// conditions from the stability analysis, evaluated with periodic quadrature;
// violations are reported, never enforced.
inline StabilityReport stability_monitor(const SimState& state, const SchemeConfig& cfg,
                                         double horizon_T = 0.0) {
  StabilityReport r;
  r.dt_grad_rho = cfg.dt * discrete_gradient_l2(state.rho);
  const double nr = discrete_l2(state.rho);
  const double gc = discrete_gradient_l2(state.conc);
  r.small_data_lhs = nr * nr + cfg.epsilon * gc * gc;
  r.noblowup_ok = r.dt_grad_rho <= 1.0;
  r.small_data_ok = r.small_data_lhs <= 2.0 * std::exp(-horizon_T);
  return r;
}

inline StabilityReport stability_monitor(const RadialSimState& state, const SchemeConfig& cfg,
                                         double horizon_T = 0.0) {
  StabilityReport r;
  r.dt_grad_rho = cfg.dt * discrete_gradient_l2(state.rho);
  const double nr = discrete_l2(state.rho);
  const double gc = discrete_gradient_l2(state.conc);
  r.small_data_lhs = nr * nr + cfg.epsilon * gc * gc;
  r.noblowup_ok = r.dt_grad_rho <= 1.0;
  r.small_data_ok = r.small_data_lhs <= 2.0 * std::exp(-horizon_T);
  return r;
}

// Small-data monitor of the second-order scheme, evaluated once after the
// bootstrap step: needs states at steps 1 and 0.
inline double bdf2_small_data_lhs(const SimState& s1, const SchemeConfig& cfg) {
  if (!s1.has_prev()) throw ConfigError("bdf2_small_data_lhs needs one step of history");
  const double r1 = discrete_l2(s1.rho);
  Field2D r0f = *s1.rho_prev;
  const double r0 = discrete_l2(r0f);
  const double gc1 = discrete_gradient_l2(s1.conc);

  Field2D diff_r(s1.rho.grid), diff_c(s1.conc.grid);
  for (int k = 0; k < s1.rho.size(); ++k) {
    diff_r.v[k] = 2.0 * s1.rho.v[k] - s1.rho_prev->v[k];
    diff_c.v[k] = 2.0 * s1.conc.v[k] - s1.conc_prev->v[k];
  }
  const double dr = discrete_l2(diff_r);
  const double gdc = discrete_gradient_l2(diff_c);
  return 0.25 * r1 * r1 + 0.25 * cfg.epsilon * gc1 * gc1 + 0.25 * dr * dr +
         0.25 * cfg.epsilon * gdc * gdc + cfg.dt * r0 * r0;
}

struct PositivityAudit {
  double min_value = 0.0;
  int negative_count = 0;  // entries below -1e-12 * max|f|
};

inline PositivityAudit positivity_audit(const std::vector<double>& v) {
  PositivityAudit a;
  a.min_value = field_min(v);
  const double thresh = -1e-12 * field_max_abs(v);
  for (double x : v)
    if (x < thresh) ++a.negative_count;
  return a;
}

inline PositivityAudit positivity_audit(const Field2D& f) { return positivity_audit(f.v); }
inline PositivityAudit positivity_audit(const RadialField& f) { return positivity_audit(f.v); }

}  // namespace chemokit
