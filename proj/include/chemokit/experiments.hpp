#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chemokit/config.hpp"
#include "chemokit/diagnostics.hpp"
#include "chemokit/io.hpp"
#include "chemokit/ks_core.hpp"
#include "chemokit/ks_degenerate.hpp"
#include "chemokit/ks_multispecies.hpp"
#include "chemokit/ks_radial.hpp"

namespace chemokit {

struct RunOutput {
  std::string label;
  bool ok = true;
  std::string error;
  std::vector<DiagnosticsRecord> series;
  double peak_max_rho = 0.0;      // running maximum over the whole run
  double min_rho_overall = 0.0;   // most negative density seen at any step
  double mass_drift = 0.0;        // max relative drift from the initial mass
  double mass_drift2 = 0.0;       // second species
  int monitor_violations = 0;     // steps with dt ||grad rho|| > 1
  std::optional<Field2D> final_rho, final_rho2, final_conc;
  std::optional<RadialField> final_rho_radial;
};

struct ExperimentResult {
  std::vector<RunOutput> runs;
  std::map<std::string, double> metrics;
  std::string summary;
  bool all_ok = true;
};

namespace detail {

inline std::string num_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Runs land exactly on t_max: the nominal step is shrunk to divide it evenly.
inline int plan_steps(double t_max, double dt_nominal, double& dt_out) {
  int n = static_cast<int>(std::ceil(t_max / dt_nominal - 1e-9));
  n = std::max(n, 1);
  dt_out = t_max / n;
  return n;
}

inline Field2D initial_conc(const ExperimentSpec& s, const Grid2D& g, const Field2D& rho0) {
  switch (s.ic_c) {
    case CIcKind::zero:
      return Field2D(g, 0.0);
    case CIcKind::gaussian: {
      IcParams p;
      p.kind = IcKind::gaussian;
      p.amplitude = s.ic_c_amplitude;
      p.rate = s.ic_c_rate;
      return build_initial_condition(g, p);
    }
    case CIcKind::half_rho: {
      Field2D c = rho0;
      for (double& x : c.v) x *= 0.5;
      return c;
    }
    case CIcKind::screened:
      throw ConfigError("ic_c=screened is only available on radial grids");
  }
  return Field2D(g, 0.0);
}

inline RadialField initial_conc(const ExperimentSpec& s, const RadialGrid& g,
                                const RadialField& rho0) {
  switch (s.ic_c) {
    case CIcKind::zero:
      return RadialField(g, 0.0);
    case CIcKind::gaussian: {
      IcParams p;
      p.kind = IcKind::gaussian;
      p.amplitude = s.ic_c_amplitude;
      p.rate = s.ic_c_rate;
      return build_initial_condition(g, p);
    }
    case CIcKind::half_rho: {
      RadialField c = rho0;
      for (double& x : c.v) x *= 0.5;
      return c;
    }
    case CIcKind::screened:
      return radial_screened_poisson(rho0);
  }
  return RadialField(g, 0.0);
}

inline std::vector<int> snapshot_steps(const ExperimentSpec& s, int nsteps, double dt) {
  std::vector<int> ks{0, nsteps};
  for (double t : s.snap_times) {
    const int k = static_cast<int>(std::llround(t / dt));
    if (k >= 0 && k <= nsteps) ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

inline DiagnosticsRecord measure(const SimState& st, const SchemeConfig& cfg, double horizon,
                                 long cg_iters, bool pe_energy) {
  DiagnosticsRecord r;
  r.time = st.time;
  r.mass = total_mass(st.rho);
  r.max_rho = field_max(st.rho.v);
  r.min_rho = field_min(st.rho.v);
  const StabilityReport sr = stability_monitor(st, cfg, horizon);
  r.grad_rho_l2 = cfg.dt > 0 ? sr.dt_grad_rho / cfg.dt : 0.0;
  r.dt_grad_rho = sr.dt_grad_rho;
  r.small_data_lhs = sr.small_data_lhs;
  r.noblowup_ok = sr.noblowup_ok;
  r.small_data_ok = sr.small_data_ok;
  r.cg_iterations = cg_iters;
  r.free_energy = free_energy(st.rho, st.conc, cfg.epsilon,
                              pe_energy ? EnergyVariant::pe : EnergyVariant::pp);
  return r;
}

inline DiagnosticsRecord measure(const RadialSimState& st, const SchemeConfig& cfg, double horizon,
                                 long cg_iters) {
  DiagnosticsRecord r;
  r.time = st.time;
  r.mass = total_mass(st.rho);
  r.max_rho = field_max(st.rho.v);
  r.min_rho = field_min(st.rho.v);
  const StabilityReport sr = stability_monitor(st, cfg, horizon);
  r.grad_rho_l2 = cfg.dt > 0 ? sr.dt_grad_rho / cfg.dt : 0.0;
  r.dt_grad_rho = sr.dt_grad_rho;
  r.small_data_lhs = sr.small_data_lhs;
  r.noblowup_ok = sr.noblowup_ok;
  r.small_data_ok = sr.small_data_ok;
  r.cg_iterations = cg_iters;
  r.free_energy = 0.0;  // not tracked on radial grids
  return r;
}

inline SchemeConfig scheme_config(const ExperimentSpec& s, double eps, double dt) {
  SchemeConfig cfg;
  cfg.epsilon = eps;
  cfg.dt = dt;
  cfg.order = s.order;
  cfg.cg_tol = s.cg_tol;
  cfg.jacobi_precond = s.jacobi;
  return cfg;
}

// One cartesian simulation: m = 1 first-order/bdf2, m > 1 semi-implicit or
// Newton.  Emits the time series and the requested snapshots.
inline RunOutput run_cartesian_single(const ExperimentSpec& spec, int nx, double eps, double m,
                                      const std::string& label, bool write_files) {
  RunOutput out;
  out.label = label;
  try {
    const Grid2D grid = make_grid2d(spec.a, spec.b, spec.c, spec.d, nx, nx);
    double dt = 0;
    const int nsteps = plan_steps(spec.t_max, spec.dt.resolve(grid.dx), dt);
    const SchemeConfig cfg = scheme_config(spec, eps, dt);
    DegenerateConfig deg;
    deg.m = m;

    SimState st;
    st.rho = build_initial_condition(grid, spec.ic);
    st.conc = initial_conc(spec, grid, st.rho);

    const bool pe_energy = spec.kind == ExperimentKind::energy && !(eps > 0.0);
    const std::vector<int> snaps = snapshot_steps(spec, nsteps, dt);
    const std::string dir = spec.out_dir + "/" + label;

    auto snapshot = [&](const SimState& s, int k) {
      if (!write_files) return;
      if (!std::binary_search(snaps.begin(), snaps.end(), k)) return;
      const std::string t = num_label(s.time);
      write_snapshot(dir + "/rho_t" + t + ".csv", s.rho, s.time);
      write_snapshot(dir + "/conc_t" + t + ".csv", s.conc, s.time);
    };

    DiagnosticsRecord r0 = measure(st, cfg, spec.t_max, 0, pe_energy);
    out.series.push_back(r0);
    const double mass0 = r0.mass;
    out.peak_max_rho = r0.max_rho;
    out.min_rho_overall = r0.min_rho;
    snapshot(st, 0);

    for (int k = 1; k <= nsteps; ++k) {
      StepInfo info;
      if (m > 1.0) {
        st = spec.scheme == Scheme::newton ? step_subcritical_newton(st, cfg, deg, &info)
                                           : step_subcritical_semi_implicit(st, cfg, deg, &info);
      } else {
        st = advance(st, cfg, &info);
      }
      const double maxr = field_max(st.rho.v);
      out.peak_max_rho = std::max(out.peak_max_rho, maxr);
      out.min_rho_overall = std::min(out.min_rho_overall, info.min_rho);
      if (k % spec.record_stride == 0 || k == nsteps) {
        DiagnosticsRecord r = measure(st, cfg, spec.t_max, info.cg_iterations, pe_energy);
        out.mass_drift = std::max(out.mass_drift, std::abs(r.mass - mass0) /
                                                      std::max(std::abs(mass0), 1e-300));
        if (!r.noblowup_ok) ++out.monitor_violations;
        out.series.push_back(r);
      }
      snapshot(st, k);
    }
    if (write_files) write_time_series_csv(dir + "/series.csv", out.series);
    out.final_rho = st.rho;
    out.final_conc = st.conc;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline RunOutput run_radial_single(const ExperimentSpec& spec, int nr, double eps, double m,
                                   const std::string& label, bool write_files) {
  RunOutput out;
  out.label = label;
  try {
    const RadialGrid grid = make_radial_grid(spec.radius, nr);
    double dt = 0;
    const int nsteps = plan_steps(spec.t_max, spec.dt.resolve(grid.dr), dt);
    const SchemeConfig cfg = scheme_config(spec, eps, dt);

    RadialSimState st;
    st.rho = build_initial_condition(grid, spec.ic);
    st.conc = initial_conc(spec, grid, st.rho);

    const std::vector<int> snaps = snapshot_steps(spec, nsteps, dt);
    const std::string dir = spec.out_dir + "/" + label;
    auto snapshot = [&](const RadialSimState& s, int k) {
      if (!write_files) return;
      if (!std::binary_search(snaps.begin(), snaps.end(), k)) return;
      const std::string t = num_label(s.time);
      write_snapshot(dir + "/rho_t" + t + ".csv", s.rho, s.time);
      write_snapshot(dir + "/conc_t" + t + ".csv", s.conc, s.time);
    };

    DiagnosticsRecord r0 = measure(st, cfg, spec.t_max, 0);
    out.series.push_back(r0);
    const double mass0 = r0.mass;
    out.peak_max_rho = r0.max_rho;
    out.min_rho_overall = r0.min_rho;
    snapshot(st, 0);

    for (int k = 1; k <= nsteps; ++k) {
      StepInfo info;
      st = step_radial(st, cfg, m, &info);
      out.peak_max_rho = std::max(out.peak_max_rho, field_max(st.rho.v));
      out.min_rho_overall = std::min(out.min_rho_overall, field_min(st.rho.v));
      if (k % spec.record_stride == 0 || k == nsteps) {
        DiagnosticsRecord r = measure(st, cfg, spec.t_max, info.cg_iterations);
        out.mass_drift = std::max(out.mass_drift, std::abs(r.mass - mass0) /
                                                      std::max(std::abs(mass0), 1e-300));
        if (!r.noblowup_ok) ++out.monitor_violations;
        out.series.push_back(r);
      }
      snapshot(st, k);
    }
    if (write_files) write_time_series_csv(dir + "/series.csv", out.series);
    out.final_rho_radial = st.rho;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline RunOutput run_two_species_single(const ExperimentSpec& spec, int nx, double eps,
                                        const std::string& label, bool write_files) {
  RunOutput out;
  out.label = label;
  try {
    const Grid2D grid = make_grid2d(spec.a, spec.b, spec.c, spec.d, nx, nx);
    double dt = 0;
    const int nsteps = plan_steps(spec.t_max, spec.dt.resolve(grid.dx), dt);

    TwoSpeciesConfig cfg;
    cfg.chi1 = spec.chi1; cfg.chi2 = spec.chi2;
    cfg.mu1 = spec.mu1; cfg.mu2 = spec.mu2;
    cfg.alpha1 = spec.alpha1; cfg.alpha2 = spec.alpha2;
    cfg.beta = spec.beta; cfg.D = spec.D;
    cfg.epsilon = eps; cfg.dt = dt;
    cfg.cg_tol = spec.cg_tol;
    cfg.jacobi_precond = spec.jacobi;

    TwoSpeciesState st;
    st.rho1 = build_initial_condition(grid, spec.ic);
    st.rho2 = st.rho1;
    st.conc = initial_conc(spec, grid, st.rho1);

    const std::vector<int> snaps = snapshot_steps(spec, nsteps, dt);
    const std::string dir = spec.out_dir + "/" + label;
    auto snapshot = [&](const TwoSpeciesState& s, int k) {
      if (!write_files) return;
      if (!std::binary_search(snaps.begin(), snaps.end(), k)) return;
      const std::string t = num_label(s.time);
      write_snapshot(dir + "/rho1_t" + t + ".csv", s.rho1, s.time);
      write_snapshot(dir + "/rho2_t" + t + ".csv", s.rho2, s.time);
      write_snapshot(dir + "/conc_t" + t + ".csv", s.conc, s.time);
    };

    const double mass1_0 = total_mass(st.rho1), mass2_0 = total_mass(st.rho2);
    auto record = [&](const TwoSpeciesState& s, long iters) {
      DiagnosticsRecord r;
      r.time = s.time;
      r.mass = total_mass(s.rho1);
      r.mass2 = total_mass(s.rho2);
      r.max_rho = std::max(field_max(s.rho1.v), field_max(s.rho2.v));
      r.min_rho = std::min(field_min(s.rho1.v), field_min(s.rho2.v));
      r.cg_iterations = iters;
      return r;
    };

    out.series.push_back(record(st, 0));
    out.peak_max_rho = out.series.back().max_rho;
    out.min_rho_overall = out.series.back().min_rho;
    snapshot(st, 0);

    for (int k = 1; k <= nsteps; ++k) {
      StepInfo info;
      st = step_two_species(st, cfg, &info);
      out.peak_max_rho = std::max(out.peak_max_rho, std::max(field_max(st.rho1.v), field_max(st.rho2.v)));
      out.min_rho_overall = std::min(out.min_rho_overall, info.min_rho);
      if (k % spec.record_stride == 0 || k == nsteps) {
        DiagnosticsRecord r = record(st, info.cg_iterations);
        out.mass_drift = std::max(out.mass_drift, std::abs(r.mass - mass1_0) / mass1_0);
        out.mass_drift2 = std::max(out.mass_drift2, std::abs(r.mass2 - mass2_0) / mass2_0);
        out.series.push_back(r);
      }
      snapshot(st, k);
    }
    if (write_files) write_time_series_csv(dir + "/series.csv", out.series);
    out.final_rho = st.rho1;
    out.final_rho2 = st.rho2;
    out.final_conc = st.conc;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= tasks.size()) return;
        tasks[k]();
      }
    });
  for (auto& t : pool) t.join();
}

inline double fit_slope(const std::vector<double>& dx, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(dx.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(dx[i]), y = std::log(err[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// l1 distance of the mean-removed fields; the gauge of the quasi-static
// concentration and the mean drift of the relaxed one cancel here.
inline double l1_mean_removed(const Field2D& a, const Field2D& b) {
  const double ma = grid_mean(a), mb = grid_mean(b);
  double s = 0.0;
  for (int k = 0; k < a.size(); ++k) s += std::abs((a.v[k] - ma) - (b.v[k] - mb));
  return s * a.grid.dx * a.grid.dy;
}

}  // namespace detail

// Paired integration of an epsilon > 0 run against the quasi-static limit on
// the same grid and step; returns the error trajectories.
struct AsymptoticTrace {
  std::vector<double> time, err_rho, err_c;
};

inline AsymptoticTrace asymptotic_trace(const ExperimentSpec& spec, double eps, double dt_nominal,
                                        double t_end) {
  const Grid2D grid = make_grid2d(spec.a, spec.b, spec.c, spec.d, spec.meshes[0], spec.meshes[0]);
  double dt = 0;
  const int nsteps = detail::plan_steps(t_end, dt_nominal, dt);

  SimState se, s0;
  se.rho = build_initial_condition(grid, spec.ic);
  se.conc = detail::initial_conc(spec, grid, se.rho);
  s0.rho = se.rho;
  s0.conc = elliptic_chemo_solve(s0.rho);  // the limit is quasi-static from the start

  SchemeConfig ce = detail::scheme_config(spec, eps, dt);
  SchemeConfig c0 = detail::scheme_config(spec, 0.0, dt);

  AsymptoticTrace tr;
  tr.time.push_back(0.0);
  tr.err_rho.push_back(l1_abs_error(se.rho, s0.rho));
  tr.err_c.push_back(detail::l1_mean_removed(se.conc, s0.conc));
  for (int k = 1; k <= nsteps; ++k) {
    se = advance(se, ce);
    s0 = advance(s0, c0);
    tr.time.push_back(se.time);
    tr.err_rho.push_back(l1_abs_error(se.rho, s0.rho));
    tr.err_c.push_back(detail::l1_mean_removed(se.conc, s0.conc));
  }
  return tr;
}

// First time the concentration error drops to half its initial value.
inline double transient_duration(const AsymptoticTrace& tr) {
  const double threshold = 0.5 * tr.err_c.front();
  for (std::size_t k = 0; k < tr.time.size(); ++k)
    if (tr.err_c[k] <= threshold) return tr.time[k];
  return tr.time.back();
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1,
                                       bool write_files = true) {
  using namespace detail;
  ExperimentResult res;
  std::ostringstream sum;
  const char* kind = experiment_kind_name(spec.kind);
  sum << "experiment: " << kind << "\n";

  auto finish = [&](const char* verdict) {
    for (const RunOutput& r : res.runs)
      if (!r.ok) res.all_ok = false;
    if (verdict && *verdict) sum << verdict << "\n";
    for (const RunOutput& r : res.runs)
      if (!r.ok) sum << "FAILED " << r.label << ": " << r.error << "\n";
    res.summary = sum.str();
    if (write_files) write_text_file(spec.out_dir + "/summary.txt", res.summary);
  };

  switch (spec.kind) {
    case ExperimentKind::run: {
      const double m = spec.m_list[0];
      std::vector<std::function<void()>> tasks;
      res.runs.resize(spec.meshes.size() * spec.epsilons.size());
      std::size_t slot = 0;
      for (int mesh : spec.meshes)
        for (double eps : spec.epsilons) {
          const std::size_t k = slot++;
          const std::string label = (spec.radial ? "nr" : "nx") + std::to_string(mesh) + "_eps" +
                                    num_label(eps) + (m > 1 ? "_m" + num_label(m) : "");
          tasks.push_back([&, mesh, eps, k, label] {
            res.runs[k] = spec.radial
                              ? run_radial_single(spec, mesh, eps, m, label, write_files)
                              : run_cartesian_single(spec, mesh, eps, m, label, write_files);
          });
        }
      run_tasks(tasks, threads);
      sum << "label  final_mass_drift  peak_max_rho  min_rho\n";
      for (const RunOutput& r : res.runs)
        if (r.ok)
          sum << r.label << "  " << fmt_double(r.mass_drift) << "  " << r.peak_max_rho << "  "
              << r.min_rho_overall << "\n";
      finish("");
      break;
    }

    case ExperimentKind::convergence: {
      // one run per (epsilon, mesh); errors between consecutive meshes
      const std::size_t ne = spec.epsilons.size(), nm = spec.meshes.size();
      res.runs.resize(ne * nm);
      std::vector<std::function<void()>> tasks;
      for (std::size_t ie = 0; ie < ne; ++ie)
        for (std::size_t im = 0; im < nm; ++im) {
          const std::size_t k = ie * nm + im;
          const double eps = spec.epsilons[ie];
          const int mesh = spec.meshes[im];
          const std::string label = "eps" + num_label(eps) + "_nx" + std::to_string(mesh);
          tasks.push_back([&, eps, mesh, k, label] {
            res.runs[k] = run_cartesian_single(spec, mesh, eps, 1.0, label, write_files);
          });
        }
      run_tasks(tasks, threads);

      sum << "eps  dx  error  pair_slope\n";
      for (std::size_t ie = 0; ie < ne; ++ie) {
        const double eps = spec.epsilons[ie];
        std::vector<double> dxs, errs;
        double prev_err = 0;
        for (std::size_t im = 1; im < nm; ++im) {
          const RunOutput& coarse = res.runs[ie * nm + im - 1];
          const RunOutput& fine = res.runs[ie * nm + im];
          if (!coarse.ok || !fine.ok) continue;
          const double err = l1_rel_error(*fine.final_rho, *coarse.final_rho);
          const double dx = fine.final_rho->grid.dx;
          res.metrics["err_eps" + num_label(eps) + "_dx" + num_label(dx)] = err;
          double pair_slope = 0;
          if (im > 1 && prev_err > 0 && err > 0)
            pair_slope = std::log(prev_err / err) / std::log(2.0);
          sum << num_label(eps) << "  " << num_label(dx) << "  " << fmt_double(err) << "  "
              << (im > 1 ? num_label(pair_slope) : std::string("-")) << "\n";
          dxs.push_back(dx);
          errs.push_back(err);
          prev_err = err;
        }
        if (dxs.size() >= 2) {
          const double slope = fit_slope(dxs, errs);
          res.metrics["slope_eps" + num_label(eps)] = slope;
          sum << "fitted slope (eps=" << num_label(eps) << "): " << num_label(slope) << "\n";
        }
      }
      finish("");
      break;
    }

    case ExperimentKind::asymptotic: {
      std::vector<double> eps_sorted = spec.epsilons;
      std::sort(eps_sorted.rbegin(), eps_sorted.rend());
      std::vector<AsymptoticTrace> traces(eps_sorted.size());
      AsymptoticTrace fine_trace;
      const double dx0 = (spec.b - spec.a) / spec.meshes[0];
      const double dt_coarse = spec.dt.resolve(dx0);

      std::vector<std::function<void()>> tasks;
      for (std::size_t i = 0; i < eps_sorted.size(); ++i)
        tasks.push_back([&, i, dt_coarse] {
          traces[i] = asymptotic_trace(spec, eps_sorted[i], dt_coarse, spec.t_max);
        });
      const double t_layer = std::min(1.0, spec.t_max);
      tasks.push_back([&] {
        fine_trace = asymptotic_trace(spec, eps_sorted[0], spec.dt_fine, t_layer);
      });
      run_tasks(tasks, threads);

      sum << "eps  err_rho(t_max)  err_c(t_max)\n";
      for (std::size_t i = 0; i < eps_sorted.size(); ++i) {
        const AsymptoticTrace& tr = traces[i];
        res.metrics["err_rho_eps" + num_label(eps_sorted[i])] = tr.err_rho.back();
        res.metrics["err_c_eps" + num_label(eps_sorted[i])] = tr.err_c.back();
        sum << num_label(eps_sorted[i]) << "  " << fmt_double(tr.err_rho.back()) << "  "
            << fmt_double(tr.err_c.back()) << "\n";
        if (i > 0 && tr.err_rho.back() > 0) {
          const double ratio = traces[i - 1].err_rho.back() / tr.err_rho.back();
          res.metrics["ratio_rho_" + num_label(eps_sorted[i - 1]) + "_" +
                      num_label(eps_sorted[i])] = ratio;
          sum << "  rho error ratio vs eps=" << num_label(eps_sorted[i - 1]) << ": "
              << num_label(ratio) << "\n";
        }
        if (write_files) {
          std::ostringstream csv;
          csv << "time,err_rho,err_c\n";
          for (std::size_t k = 0; k < tr.time.size(); ++k)
            csv << fmt_double(tr.time[k]) << ',' << fmt_double(tr.err_rho[k]) << ','
                << fmt_double(tr.err_c[k]) << "\n";
          write_text_file(spec.out_dir + "/errors_eps" + num_label(eps_sorted[i]) + ".csv",
                          csv.str());
        }
      }
      const double d_coarse = transient_duration(traces[0]);
      const double d_fine = transient_duration(fine_trace);
      res.metrics["transient_coarse"] = d_coarse;
      res.metrics["transient_fine"] = d_fine;
      sum << "transient duration (eps=" << num_label(eps_sorted[0])
          << "): dt=" << num_label(dt_coarse) << " -> " << num_label(d_coarse)
          << ", dt=" << num_label(spec.dt_fine) << " -> " << num_label(d_fine) << "\n";
      finish("");
      break;
    }

    case ExperimentKind::energy: {
      res.runs.resize(spec.epsilons.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
        const double eps = spec.epsilons[i];
        const std::string label = "eps" + num_label(eps);
        tasks.push_back([&, i, eps, label] {
          res.runs[i] = run_cartesian_single(spec, spec.meshes[0], eps, 1.0, label, write_files);
        });
      }
      run_tasks(tasks, threads);
      sum << "eps  F(0)  F(t_max)  max_rel_increase\n";
      for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
        const RunOutput& r = res.runs[i];
        if (!r.ok) continue;
        double worst = 0.0;
        for (std::size_t k = 1; k < r.series.size(); ++k) {
          const double prev = r.series[k - 1].free_energy;
          const double inc = (r.series[k].free_energy - prev) / std::max(std::abs(prev), 1e-300);
          worst = std::max(worst, inc);
        }
        res.metrics["energy_max_increase_eps" + num_label(spec.epsilons[i])] = worst;
        sum << num_label(spec.epsilons[i]) << "  " << fmt_double(r.series.front().free_energy)
            << "  " << fmt_double(r.series.back().free_energy) << "  " << fmt_double(worst)
            << "\n";
      }
      finish("");
      break;
    }

    case ExperimentKind::blowup_radial:
    case ExperimentKind::blowup_cartesian: {
      const bool radial = spec.kind == ExperimentKind::blowup_radial;
      res.runs.resize(spec.meshes.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t i = 0; i < spec.meshes.size(); ++i) {
        const int mesh = spec.meshes[i];
        const std::string label = (radial ? "nr" : "nx") + std::to_string(mesh);
        tasks.push_back([&, i, mesh, label] {
          res.runs[i] = radial ? run_radial_single(spec, mesh, spec.epsilons[0], 1.0, label,
                                                   write_files)
                               : run_cartesian_single(spec, mesh, spec.epsilons[0], 1.0, label,
                                                      write_files);
        });
      }
      run_tasks(tasks, threads);
      sum << "mesh  peak_max_rho  min_rho\n";
      for (std::size_t i = 0; i < spec.meshes.size(); ++i) {
        const RunOutput& r = res.runs[i];
        if (!r.ok) continue;
        res.metrics[std::string("peak_") + (radial ? "nr" : "nx") + std::to_string(spec.meshes[i])] =
            r.peak_max_rho;
        sum << spec.meshes[i] << "  " << fmt_double(r.peak_max_rho) << "  "
            << fmt_double(r.min_rho_overall) << "\n";
        if (i > 0 && res.runs[i - 1].ok && res.runs[i - 1].peak_max_rho > 0) {
          const double ratio = r.peak_max_rho / res.runs[i - 1].peak_max_rho;
          res.metrics["peak_ratio_" + std::to_string(spec.meshes[i])] = ratio;
          sum << "  growth vs previous mesh: " << num_label(ratio) << "\n";
        }
      }
      finish("");
      break;
    }

    case ExperimentKind::steady_subcritical: {
      res.runs.resize(spec.m_list.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t i = 0; i < spec.m_list.size(); ++i) {
        const double m = spec.m_list[i];
        const std::string label = "m" + num_label(m);
        tasks.push_back([&, i, m, label] {
          res.runs[i] = run_radial_single(spec, spec.meshes[0], spec.epsilons[0], m, label,
                                          write_files);
        });
      }
      run_tasks(tasks, threads);

      const RadialGrid grid = make_radial_grid(spec.radius, spec.meshes[0]);
      const RadialField rho0 = build_initial_condition(grid, spec.ic);
      sum << "m  l1_distance_to_initial\n";
      double prev = -1;
      bool decreasing = true;
      for (std::size_t i = 0; i < spec.m_list.size(); ++i) {
        const RunOutput& r = res.runs[i];
        if (!r.ok) continue;
        double dist = 0;
        for (int j = 1; j <= grid.nr; ++j)
          dist += grid.r(j) * std::abs(r.final_rho_radial->v[j] - rho0.v[j]);
        dist *= 2.0 * M_PI * grid.dr;
        res.metrics["l1_m" + num_label(spec.m_list[i])] = dist;
        sum << num_label(spec.m_list[i]) << "  " << fmt_double(dist) << "\n";
        if (prev >= 0 && dist >= prev) decreasing = false;
        prev = dist;
      }
      finish(decreasing ? "steady profile approaches the initial indicator as m grows"
                        : "WARNING: l1 distance is not decreasing in m");
      break;
    }

    case ExperimentKind::two_species: {
      res.runs.resize(spec.meshes.size());
      std::vector<std::function<void()>> tasks;
      for (std::size_t i = 0; i < spec.meshes.size(); ++i) {
        const int mesh = spec.meshes[i];
        const std::string label = "nx" + std::to_string(mesh);
        tasks.push_back([&, i, mesh, label] {
          res.runs[i] = run_two_species_single(spec, mesh, spec.epsilons[0], label, write_files);
        });
      }
      run_tasks(tasks, threads);
      sum << "mesh  max_rho1  max_rho2  mass_drift1  mass_drift2\n";
      for (std::size_t i = 0; i < spec.meshes.size(); ++i) {
        const RunOutput& r = res.runs[i];
        if (!r.ok) continue;
        const double m1 = field_max(r.final_rho->v), m2 = field_max(r.final_rho2->v);
        res.metrics["max_rho1_nx" + std::to_string(spec.meshes[i])] = m1;
        res.metrics["max_rho2_nx" + std::to_string(spec.meshes[i])] = m2;
        sum << spec.meshes[i] << "  " << fmt_double(m1) << "  " << fmt_double(m2) << "  "
            << fmt_double(r.mass_drift) << "  " << fmt_double(r.mass_drift2) << "\n";
        if (i > 0 && res.runs[i - 1].ok) {
          const double prev2 = field_max(res.runs[i - 1].final_rho2->v);
          if (prev2 > 0)
            res.metrics["peak2_ratio_nx" + std::to_string(spec.meshes[i])] = m2 / prev2;
        }
      }
      finish("");
      break;
    }
  }
  return res;
}

}  // namespace chemokit
