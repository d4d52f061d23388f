// Acceptance suite: end-to-end checks of the solver properties at the
// documented tolerances.  Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chemokit/config.hpp"
#include "chemokit/diagnostics.hpp"
#include "chemokit/experiments.hpp"
#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"
#include "chemokit/ks_degenerate.hpp"
#include "chemokit/ks_multispecies.hpp"
#include "chemokit/ks_radial.hpp"
#include "support/dense.hpp"

using namespace chemokit;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void guarded(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string out_dir(const char* tag) {
  const auto dir = std::filesystem::temp_directory_path() / (std::string("chemokit_acc_") + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

Field2D gaussian_field(const Grid2D& g, double amp, double rate) {
  IcParams p;
  p.kind = IcKind::gaussian;
  p.amplitude = amp;
  p.rate = rate;
  return build_initial_condition(g, p);
}

// ---------------------------------------------------------------- criterion 1

struct DriftResult {
  double drift = 0.0;
  bool ok = true;
  std::string err;
};

template <class State, class Step, class Mass>
DriftResult mass_drift(State st, Step step, Mass mass, int nsteps) {
  DriftResult r;
  try {
    const double m0 = mass(st);
    for (int k = 0; k < nsteps; ++k) {
      st = step(st);
      r.drift = std::max(r.drift, std::abs(mass(st) - m0) / m0);
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.err = e.what();
  }
  return r;
}

void criterion1() {
  const int nsteps = 1000;
  const double bound = 1e-9;
  std::vector<std::pair<std::string, DriftResult>> results;

  {
    const Grid2D g = make_grid2d(-5, 5, -5, 5, 64, 64);
    SchemeConfig cfg;
    cfg.epsilon = 1.0;
    cfg.dt = 0.01;
    cfg.cg_tol = 1e-12;
    SimState s;
    s.rho = gaussian_field(g, 4.0, 1.0);
    s.conc = gaussian_field(g, 1.0, 0.5);
    results.emplace_back("first-order", mass_drift(
        s, [&](const SimState& x) { return step_first_order(x, cfg); },
        [](const SimState& x) { return total_mass(x.rho); }, nsteps));

    SchemeConfig cb = cfg;
    cb.order = TimeOrder::bdf2;
    results.emplace_back("bdf2", mass_drift(
        s, [&](const SimState& x) { return step_bdf2(x, cb); },
        [](const SimState& x) { return total_mass(x.rho); }, nsteps));
  }
  {
    const RadialGrid g = make_radial_grid(2.0, 128);
    SchemeConfig cfg;
    cfg.epsilon = 0.0;
    cfg.dt = 1e-3;
    IcParams p;
    p.kind = IcKind::gaussian;
    p.amplitude = 600.0;
    p.rate = 60.0;
    RadialSimState s;
    s.rho = build_initial_condition(g, p);
    s.conc = radial_screened_poisson(s.rho);
    results.emplace_back("radial m=1", mass_drift(
        s, [&](const RadialSimState& x) { return step_radial(x, cfg, 1.0); },
        [](const RadialSimState& x) { return total_mass(x.rho); }, nsteps));

    IcParams ind;
    ind.kind = IcKind::indicator_disc;
    ind.amplitude = 1.0;
    ind.r2_max = 0.1;
    RadialSimState sd;
    sd.rho = build_initial_condition(g, ind);
    sd.conc = sd.rho;
    for (double& v : sd.conc.v) v *= 0.5;
    results.emplace_back("radial m=4", mass_drift(
        sd, [&](const RadialSimState& x) { return step_radial(x, cfg, 4.0); },
        [](const RadialSimState& x) { return total_mass(x.rho); }, nsteps));
  }
  {
    const Grid2D g = make_grid2d(-2, 2, -2, 2, 64, 64);
    SchemeConfig cfg;
    cfg.epsilon = 0.0;
    cfg.dt = 1e-3;
    cfg.cg_tol = 1e-12;
    DegenerateConfig deg;
    deg.m = 4.0;
    IcParams ind;
    ind.kind = IcKind::indicator_disc;
    ind.amplitude = 2.0;
    ind.r2_max = 0.5;
    SimState s;
    s.rho = build_initial_condition(g, ind);
    s.conc = s.rho;
    for (double& v : s.conc.v) v *= 0.5;
    results.emplace_back("semi-implicit m=4", mass_drift(
        s, [&](const SimState& x) { return step_subcritical_semi_implicit(x, cfg, deg); },
        [](const SimState& x) { return total_mass(x.rho); }, nsteps));

    DegenerateConfig newton;
    newton.m = 2.0;
    newton.newton_tol = 1e-12;
    SimState sn;
    sn.rho = gaussian_field(g, 1.5, 2.0);
    sn.conc = elliptic_chemo_solve(sn.rho);
    results.emplace_back("newton m=2", mass_drift(
        sn, [&](const SimState& x) { return step_subcritical_newton(x, cfg, newton); },
        [](const SimState& x) { return total_mass(x.rho); }, nsteps));
  }
  {
    const Grid2D g = make_grid2d(-3, 3, -3, 3, 64, 64);
    TwoSpeciesConfig cfg;
    cfg.chi1 = 1.0;
    cfg.chi2 = 10.0;
    cfg.dt = 1e-3;
    cfg.epsilon = 0.0;
    cfg.cg_tol = 1e-12;
    TwoSpeciesState s;
    s.rho1 = gaussian_field(g, 50.0, 100.0);
    s.rho2 = s.rho1;
    s.conc = Field2D(g, 0.0);
    results.emplace_back("two-species", mass_drift(
        s, [&](const TwoSpeciesState& x) { return step_two_species(x, cfg); },
        [](const TwoSpeciesState& x) { return total_mass(x.rho1) + total_mass(x.rho2); },
        nsteps));
  }

  bool ok = true;
  std::ostringstream detail;
  for (const auto& [name, r] : results) {
    const bool this_ok = r.ok && r.drift <= bound;
    ok = ok && this_ok;
    detail << name << "=" << (r.ok ? fmt(r.drift) : "error: " + r.err) << " ";
  }
  report("1. conservation (1000 steps, drift <= 1e-9)", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 2

double field_min_of(const SimState& s) { return field_min(s.rho.v); }
double field_max_of(const SimState& s) { return field_max(s.rho.v); }
double field_min_of(const RadialSimState& s) { return field_min(s.rho.v); }
double field_max_of(const RadialSimState& s) { return field_max(s.rho.v); }
double field_min_of(const TwoSpeciesState& s) {
  return std::min(field_min(s.rho1.v), field_min(s.rho2.v));
}
double field_max_of(const TwoSpeciesState& s) {
  return std::max(field_max(s.rho1.v), field_max(s.rho2.v));
}

void criterion2() {
  bool ok = true;
  std::ostringstream detail;

  auto track = [&](const char* name, auto state, auto step, int nsteps) {
    double worst = 0.0;   // most negative min relative to the running max
    double maxr = 0.0;
    bool this_ok = true;
    try {
      for (int k = 0; k < nsteps; ++k) {
        state = step(state);
        const double mn = field_min_of(state);
        const double mx = field_max_of(state);
        maxr = std::max(maxr, mx);
        if (mn < -1e-12 * maxr) this_ok = false;
        worst = std::min(worst, mn);
      }
    } catch (const std::exception& e) {
      this_ok = false;
      detail << name << " exception: " << e.what() << " ";
    }
    ok = ok && this_ok;
    detail << name << " min=" << fmt(worst) << " peak=" << fmt(maxr) << " ";
  };

  {
    const Grid2D g = make_grid2d(-4, 4, -4, 4, 40, 40);  // dx = 0.2
    SchemeConfig cfg;
    cfg.epsilon = 0.0;
    cfg.dt = 10.0 * g.dx * g.dx;
    cfg.jacobi_precond = true;
    SimState s;
    s.rho = gaussian_field(g, 600.0, 60.0);
    s.conc = gaussian_field(g, 300.0, 30.0);
    track("cartesian", s, [&](const SimState& x) { return step_first_order(x, cfg); }, 100);

    DegenerateConfig deg;
    deg.m = 2.0;
    track("semi-implicit", s,
          [&](const SimState& x) { return step_subcritical_semi_implicit(x, cfg, deg); }, 100);
  }
  {
    const RadialGrid g = make_radial_grid(2.0, 80);  // dr = 0.025
    SchemeConfig cfg;
    cfg.epsilon = 0.0;
    cfg.dt = 10.0 * g.dr * g.dr;
    IcParams p;
    p.kind = IcKind::gaussian;
    p.amplitude = 600.0;
    p.rate = 60.0;
    RadialSimState s;
    s.rho = build_initial_condition(g, p);
    s.conc = radial_screened_poisson(s.rho);
    track("radial", s, [&](const RadialSimState& x) { return step_radial(x, cfg, 1.0); }, 400);
  }
  {
    const Grid2D g = make_grid2d(-3, 3, -3, 3, 100, 100);
    TwoSpeciesConfig cfg;
    cfg.chi1 = 1.0;
    cfg.chi2 = 20.0;
    cfg.dt = 10.0 * g.dx * g.dx;
    cfg.epsilon = 0.0;
    cfg.jacobi_precond = true;
    TwoSpeciesState s;
    s.rho1 = gaussian_field(g, 50.0, 100.0);
    s.rho2 = s.rho1;
    s.conc = Field2D(g, 0.0);
    track("two-species", s, [&](const TwoSpeciesState& x) { return step_two_species(x, cfg); },
          30);
  }

  report("2. positivity at dt = 10 dx^2 in the blow-up setup", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion3() {
  ExperimentSpec spec = parse_config("[convergence]\n");
  spec.t_max = 1.0;
  spec.out_dir = out_dir("conv");
  bool ok = true;
  std::ostringstream detail;

  for (TimeOrder order : {TimeOrder::first, TimeOrder::bdf2}) {
    spec.order = order;
    const double lo = order == TimeOrder::first ? 0.8 : 1.7;
    const double hi = order == TimeOrder::first ? 1.2 : 2.3;
    const ExperimentResult res = run_experiment(spec, 2, false);
    if (!res.all_ok) {
      ok = false;
      detail << "(runs failed) ";
      continue;
    }
    for (double eps : spec.epsilons) {
      const auto it = res.metrics.find("slope_eps" + detail::num_label(eps));
      const double slope = it == res.metrics.end() ? 0.0 : it->second;
      const bool in_window = slope >= lo && slope <= hi;
      ok = ok && in_window;
      detail << (order == TimeOrder::first ? "first" : "bdf2") << "/eps=" << fmt(eps) << ":"
             << fmt(slope) << " ";
    }
  }
  report("3. convergence slopes (first in [0.8,1.2], bdf2 in [1.7,2.3])", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 4

void criterion4() {
  ExperimentSpec spec = parse_config("[asymptotic]\n");
  spec.out_dir = out_dir("asym");
  const ExperimentResult res = run_experiment(spec, 2, false);

  auto metric = [&](const std::string& k) {
    const auto it = res.metrics.find(k);
    return it == res.metrics.end() ? -1.0 : it->second;
  };
  const double e1 = metric("err_rho_eps0.1");
  const double e2 = metric("err_rho_eps0.01");
  const double e3 = metric("err_rho_eps0.001");
  const double r1 = e2 > 0 ? e1 / e2 : -1;
  const double r2 = e3 > 0 ? e2 / e3 : -1;
  const double dc = metric("transient_coarse");
  const double df = metric("transient_fine");

  const bool ratios_ok = r1 >= 5.0 && r1 <= 20.0 && r2 >= 5.0 && r2 <= 20.0;
  const bool transient_ok = dc > 0 && df > 0 && std::abs(dc - df) <= 0.1;
  std::ostringstream detail;
  detail << "rho-error ratios " << fmt(r1) << ", " << fmt(r2)
         << "; c transient: dt=0.05 -> " << fmt(dc) << ", dt=5e-4 -> " << fmt(df);
  report("4. asymptotic preservation (ratios in [5,20]; layer duration dt-insensitive)",
         ratios_ok && transient_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 5

void criterion5() {
  ExperimentSpec spec = parse_config("[energy]\n");
  spec.out_dir = out_dir("energy");
  const ExperimentResult res = run_experiment(spec, 2, false);
  bool ok = res.all_ok;
  std::ostringstream detail;
  for (double eps : spec.epsilons) {
    const auto it = res.metrics.find("energy_max_increase_eps" + detail::num_label(eps));
    const double inc = it == res.metrics.end() ? 1.0 : it->second;
    ok = ok && inc <= 1e-8;
    detail << "eps=" << fmt(eps) << " max increase " << fmt(inc) << " ";
  }
  report("5. free-energy decay (per-step increase <= 1e-8 |F|)", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 6

void criterion6() {
  bool ok = true;
  std::ostringstream detail;

  ExperimentSpec radial = parse_config("[blowup_radial]\n");
  radial.out_dir = out_dir("blowr");
  const ExperimentResult rres = run_experiment(radial, 2, false);
  const auto rit = rres.metrics.find("peak_ratio_320");
  const double rratio = rit == rres.metrics.end() ? -1 : rit->second;
  ok = ok && rres.all_ok && rratio >= 11.0 && rratio <= 21.0;
  detail << "radial peak ratio (dr 0.025 -> 0.00625): " << fmt(rratio) << "; ";

  ExperimentSpec cart = parse_config("[blowup_cartesian]\njacobi=on\n");
  cart.out_dir = out_dir("blowc");
  const ExperimentResult cres = run_experiment(cart, 2, false);
  const auto cit = cres.metrics.find("peak_ratio_160");
  const double cratio = cit == cres.metrics.end() ? -1 : cit->second;
  ok = ok && cres.all_ok && cratio >= 11.0 && cratio <= 21.0;
  detail << "cartesian peak ratio (dx 0.2 -> 0.05): " << fmt(cratio);

  report("6. blow-up peak scaling O(1/dx^2), ratio in [11,21]", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion7() {
  ExperimentSpec spec = parse_config("[steady_subcritical]\ndt=1e-3\n");
  spec.out_dir = out_dir("steady");
  const ExperimentResult res = run_experiment(spec, 2, false);
  auto metric = [&](double m) {
    const auto it = res.metrics.find("l1_m" + detail::num_label(m));
    return it == res.metrics.end() ? -1.0 : it->second;
  };
  const double d4 = metric(4.0), d16 = metric(16.0), d64 = metric(64.0);
  const bool ok = res.all_ok && d4 > d16 && d16 > d64 && d64 >= 0;
  std::ostringstream detail;
  detail << "L1 distance to the indicator: m=4: " << fmt(d4) << ", m=16: " << fmt(d16)
         << ", m=64: " << fmt(d64);
  report("7. steady profile approaches the indicator as m grows", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion8() {
  bool ok = true;
  std::ostringstream detail;

  ExperimentSpec ex1 = parse_config("[two_species]\ncg_tol=1e-12\n");
  ex1.out_dir = out_dir("two1");
  const ExperimentResult r1 = run_experiment(ex1, 2, false);
  const double m1 = r1.metrics.count("max_rho1_nx100") ? r1.metrics.at("max_rho1_nx100") : -1;
  const double m2 = r1.metrics.count("max_rho2_nx100") ? r1.metrics.at("max_rho2_nx100") : -1;
  bool ex1_ok = r1.all_ok && m2 > m1 && std::isfinite(m1) && std::isfinite(m2) && m1 > 0;
  for (const RunOutput& run : r1.runs)
    ex1_ok = ex1_ok && run.mass_drift <= 1e-9 && run.mass_drift2 <= 1e-9;
  ok = ok && ex1_ok;
  detail << "ex1: max rho1 " << fmt(m1) << ", max rho2 " << fmt(m2) << "; ";

  ExperimentSpec ex2 = parse_config("[two_species]\nchi2=20\nmeshes=100,200\n");
  ex2.out_dir = out_dir("two2");
  const ExperimentResult r2 = run_experiment(ex2, 2, false);
  auto get = [&](const char* k) { return r2.metrics.count(k) ? r2.metrics.at(k) : -1.0; };
  const double c1 = get("max_rho1_nx100"), c2 = get("max_rho2_nx100");
  const double f1 = get("max_rho1_nx200"), f2 = get("max_rho2_nx200");
  const double ratio = get("peak2_ratio_nx200");
  const bool ex2_ok = r2.all_ok && c2 > c1 && f2 > f1 && ratio >= 2.5 && ratio <= 6.0;
  ok = ok && ex2_ok;
  detail << "ex2: rho2 peak ratio on refinement " << fmt(ratio) << " (coarse " << fmt(c2)
         << ", fine " << fmt(f2) << ")";

  report("8. two species: sharper species dominates; peak ratio in [2.5,6]", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 9

void criterion9() {
  using testsupport::assemble;
  using testsupport::dense_solve;
  bool ok = true;
  std::ostringstream detail;
  std::mt19937 rng(2024);

  auto check = [&](const char* name, double diff, double scale) {
    const bool this_ok = diff <= 1e-10 * std::max(scale, 1.0);
    ok = ok && this_ok;
    detail << name << "=" << fmt(diff) << " ";
  };

  const Grid2D g = make_grid2d(-1, 1, -1, 1, 8, 8);
  SchemeConfig cfg;
  cfg.epsilon = 0.5;
  cfg.dt = 0.1;
  cfg.cg_tol = 1e-13;

  SimState s;
  s.rho = Field2D(g);
  s.conc = Field2D(g);
  s.rho.v = testsupport::random_vector(rng, g.size(), 0.0, 3.0);
  s.conc.v = testsupport::random_vector(rng, g.size(), -1.0, 1.0);
  s.rho_prev = s.rho;
  s.conc_prev = s.conc;
  for (double& v : s.rho_prev->v) v *= 0.9;
  for (double& v : s.conc_prev->v) v *= 0.8;

  {  // backward concentration step
    const Field2D c = chemo_update(s, cfg);
    const double sigma = cfg.epsilon / cfg.dt;
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
      apply_screened_laplacian(g, sigma, in, out);
    };
    std::vector<double> rhs(g.size());
    for (int k = 0; k < g.size(); ++k) rhs[k] = sigma * s.conc.v[k] + s.rho.v[k];
    const auto ref = dense_solve(assemble(apply, g.size()), rhs);
    check("chemo", testsupport::max_abs_diff(c.v, ref), testsupport::max_abs(ref));
  }
  {  // quasi-static solve against the mean-augmented SPD system
    const Field2D c = elliptic_chemo_solve(s.rho, cfg);
    const int n = g.size();
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
      apply_screened_laplacian(g, 0.0, in, out);
      double mean = 0;
      for (double x : in) mean += x;
      mean /= n;
      for (double& x : out) x += mean;
    };
    double rmean = 0;
    for (double x : s.rho.v) rmean += x;
    rmean /= n;
    std::vector<double> rhs(n);
    for (int k = 0; k < n; ++k) rhs[k] = s.rho.v[k] - rmean;
    const auto ref = dense_solve(assemble(apply, n), rhs);
    check("elliptic", testsupport::max_abs_diff(c.v, ref), testsupport::max_abs(ref));
  }
  {  // first-order density update
    const Field2D r = density_update(s, s.conc, cfg);
    DensityOperator op(s.conc, cfg.dt, 1.0);
    auto apply = [&op](const std::vector<double>& in, std::vector<double>& out) {
      op.apply(in, out);
    };
    const std::vector<double>& sw = op.half_weights();
    std::vector<double> rhs(g.size());
    for (int k = 0; k < g.size(); ++k) rhs[k] = s.rho.v[k] / sw[k];
    const auto h = dense_solve(assemble(apply, g.size()), rhs);
    std::vector<double> ref(g.size());
    for (int k = 0; k < g.size(); ++k) ref[k] = h[k] * sw[k];
    check("density", testsupport::max_abs_diff(r.v, ref), testsupport::max_abs(ref));
  }
  {  // bdf2 step solves
    SchemeConfig cb = cfg;
    cb.order = TimeOrder::bdf2;
    const SimState s1 = step_bdf2(s, cb);
    const double sigma = 1.5 * cb.epsilon / cb.dt, e_dt = cb.epsilon / cb.dt;
    auto apply_c = [&](const std::vector<double>& in, std::vector<double>& out) {
      apply_screened_laplacian(g, sigma, in, out);
    };
    std::vector<double> rhs_c(g.size());
    for (int k = 0; k < g.size(); ++k)
      rhs_c[k] = e_dt * (2.0 * s.conc.v[k] - 0.5 * s.conc_prev->v[k]) +
                 (2.0 * s.rho.v[k] - s.rho_prev->v[k]);
    const auto cref = dense_solve(assemble(apply_c, g.size()), rhs_c);
    check("bdf2-chemo", testsupport::max_abs_diff(s1.conc.v, cref), testsupport::max_abs(cref));

    Field2D cnext(g);
    cnext.v = cref;
    DensityOperator op(cnext, cb.dt, 1.5);
    auto apply_r = [&op](const std::vector<double>& in, std::vector<double>& out) {
      op.apply(in, out);
    };
    const std::vector<double>& sw = op.half_weights();
    std::vector<double> rhs_r(g.size());
    for (int k = 0; k < g.size(); ++k)
      rhs_r[k] = (2.0 * s.rho.v[k] - 0.5 * s.rho_prev->v[k]) / sw[k];
    const auto h = dense_solve(assemble(apply_r, g.size()), rhs_r);
    std::vector<double> rref(g.size());
    for (int k = 0; k < g.size(); ++k) rref[k] = h[k] * sw[k];
    check("bdf2-density", testsupport::max_abs_diff(s1.rho.v, rref), testsupport::max_abs(rref));
  }
  {  // radial solves, nr = 8
    const RadialGrid rg = make_radial_grid(1.0, 8);
    RadialSimState rs;
    rs.rho = RadialField(rg);
    rs.conc = RadialField(rg);
    for (int j = 1; j <= rg.nr; ++j) {
      rs.rho.v[j] = 1.0 + 0.5 * std::sin(1.1 * j);
      rs.conc.v[j] = 0.4 * std::cos(0.7 * j);
    }
    rs.rho.sync_ghost();
    rs.conc.sync_ghost();

    SchemeConfig rc;
    rc.epsilon = 0.7;
    rc.dt = 0.05;
    const RadialField c = radial_chemo_update(rs, rc);
    const double sigma = rc.epsilon / rc.dt, idr2 = 1.0 / (rg.dr * rg.dr);
    const int nr = rg.nr;
    testsupport::Matrix A(nr, std::vector<double>(nr, 0.0));
    std::vector<double> b(nr);
    for (int j = 1; j <= nr; ++j) {
      const double wl = radial_face_weight(rg, j - 1) * idr2 / rg.r(j);
      const double wr = radial_face_weight(rg, j) * idr2 / rg.r(j);
      A[j - 1][j - 1] = sigma + wl + wr;
      if (j > 1) A[j - 1][j - 2] = -wl;
      if (j < nr) A[j - 1][j] = -wr;
      b[j - 1] = sigma * rs.conc.v[j] + rs.rho.v[j];
    }
    const auto cref = dense_solve(A, b);
    double cdiff = 0;
    for (int j = 1; j <= nr; ++j) cdiff = std::max(cdiff, std::abs(c.v[j] - cref[j - 1]));
    check("radial-chemo", cdiff, testsupport::max_abs(cref));

    const RadialField rnext = radial_density_update(rs, rs.conc, rc);
    std::vector<double> M(nr + 1);
    for (int j = 1; j <= nr; ++j) M[j] = std::exp(rs.conc.v[j]);
    auto W = [&](int j) {
      if (j <= 0 || j >= nr) return 0.0;
      return std::sqrt(rg.r(j) * rg.r(j + 1) * M[j] * M[j + 1]);
    };
    testsupport::Matrix Ar(nr, std::vector<double>(nr, 0.0));
    std::vector<double> br(nr);
    for (int j = 1; j <= nr; ++j) {
      Ar[j - 1][j - 1] = 1.0 / rc.dt + (W(j - 1) + W(j)) * idr2 / (rg.r(j) * M[j]);
      if (j > 1) Ar[j - 1][j - 2] = -W(j - 1) * idr2 / (rg.r(j) * M[j - 1]);
      if (j < nr) Ar[j - 1][j] = -W(j) * idr2 / (rg.r(j) * M[j + 1]);
      br[j - 1] = rs.rho.v[j] / rc.dt;
    }
    const auto rref = dense_solve(Ar, br);
    double rdiff = 0;
    for (int j = 1; j <= nr; ++j) rdiff = std::max(rdiff, std::abs(rnext.v[j] - rref[j - 1]));
    check("radial-density", rdiff, testsupport::max_abs(rref));
  }
  {  // degenerate semi-implicit on the support
    DegenerateConfig deg;
    deg.m = 2.0;
    SimState sd = s;
    sd.rho.v[5] = sd.rho.v[11] = 0.0;
    const SimState s1 = step_subcritical_semi_implicit(sd, cfg, deg);
    SupportOperator op(g, detail::degenerate_weights(sd.rho, sd.conc, deg.m), cfg.dt);
    auto apply = [&op](const std::vector<double>& in, std::vector<double>& out) {
      op.apply(in, out);
    };
    const std::vector<double>& w = op.weights();
    std::vector<double> rhs(g.size(), 0.0);
    for (int k = 0; k < g.size(); ++k) rhs[k] = w[k] > 0 ? sd.rho.v[k] : 0.0;
    const auto u = dense_solve(assemble(apply, g.size()), rhs);
    std::vector<double> ref(g.size());
    for (int k = 0; k < g.size(); ++k) ref[k] = w[k] > 0 ? w[k] * u[k] : sd.rho.v[k];
    check("degenerate", testsupport::max_abs_diff(s1.rho.v, ref), testsupport::max_abs(ref));
  }
  {  // newton against a damped fixed-point oracle, 6x6, small dt
    const Grid2D gs = make_grid2d(-1, 1, -1, 1, 6, 6);
    SchemeConfig cn;
    cn.epsilon = 0.0;
    cn.dt = 1e-3;
    cn.cg_tol = 1e-13;
    DegenerateConfig deg;
    deg.m = 2.0;
    deg.newton_tol = 1e-13;
    SimState sn;
    sn.rho = gaussian_field(gs, 1.0, 1.0);
    sn.conc = elliptic_chemo_solve(sn.rho);
    const SimState s1 = step_subcritical_newton(sn, cn, deg);

    // oracle: un-dampened fixed point rho <- rho_n + dt G(rho), independent stencil
    const Field2D cnext = elliptic_chemo_solve(sn.rho, cn, &sn.conc);
    std::vector<double> rho = sn.rho.v;
    const double ix2 = 1.0 / (gs.dx * gs.dx), iy2 = 1.0 / (gs.dy * gs.dy);
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> next(gs.size());
      double delta = 0;
      for (int j = 0; j < gs.ny; ++j)
        for (int i = 0; i < gs.nx; ++i) {
          const int c = gs.index(i, j), e = gs.index(gs.right(i), j), w = gs.index(gs.left(i), j);
          const int n = gs.index(i, gs.up(j)), so = gs.index(i, gs.down(j));
          auto pw = [&](int k) { return std::pow(std::max(rho[k], 0.0), deg.m); };
          const double lap = ix2 * (pw(e) - 2 * pw(c) + pw(w)) + iy2 * (pw(n) - 2 * pw(c) + pw(so));
          const double adv =
              ix2 * (0.5 * (rho[c] + rho[e]) * (cnext.v[e] - cnext.v[c]) -
                     0.5 * (rho[w] + rho[c]) * (cnext.v[c] - cnext.v[w])) +
              iy2 * (0.5 * (rho[c] + rho[n]) * (cnext.v[n] - cnext.v[c]) -
                     0.5 * (rho[so] + rho[c]) * (cnext.v[c] - cnext.v[so]));
          next[c] = sn.rho.v[c] + cn.dt * (lap - adv);
          delta = std::max(delta, std::abs(next[c] - rho[c]));
        }
      rho.swap(next);
      if (delta < 1e-15) break;
    }
    check("newton-vs-fixed-point", testsupport::max_abs_diff(s1.rho.v, rho), 1.0);
  }
  {  // two-species concentration and species solves
    const Grid2D gt = make_grid2d(-1, 1, -1, 1, 8, 8);
    TwoSpeciesConfig tc;
    tc.chi1 = 1.0;
    tc.chi2 = 4.0;
    tc.dt = 0.05;
    tc.epsilon = 0.3;
    tc.beta = 1.2;
    tc.D = 0.7;
    tc.cg_tol = 1e-13;
    TwoSpeciesState ts;
    ts.rho1 = Field2D(gt);
    ts.rho2 = Field2D(gt);
    ts.conc = Field2D(gt);
    ts.rho1.v = testsupport::random_vector(rng, gt.size(), 0.0, 2.0);
    ts.rho2.v = testsupport::random_vector(rng, gt.size(), 0.0, 2.0);
    ts.conc.v = testsupport::random_vector(rng, gt.size(), 0.0, 0.5);
    const TwoSpeciesState t1 = step_two_species(ts, tc);

    const double sigma = tc.epsilon / tc.dt + tc.beta;
    auto apply_c = [&](const std::vector<double>& in, std::vector<double>& out) {
      apply_screened_laplacian(gt, sigma / tc.D, in, out);
      for (double& x : out) x *= tc.D;
    };
    std::vector<double> rhs(gt.size());
    for (int k = 0; k < gt.size(); ++k)
      rhs[k] = (tc.epsilon / tc.dt) * ts.conc.v[k] + tc.alpha1 * ts.rho1.v[k] +
               tc.alpha2 * ts.rho2.v[k];
    const auto cref = dense_solve(assemble(apply_c, gt.size()), rhs);
    check("two-species-chemo", testsupport::max_abs_diff(t1.conc.v, cref),
          testsupport::max_abs(cref));

    Field2D scaled(gt);
    for (int k = 0; k < gt.size(); ++k) scaled.v[k] = (tc.chi2 / tc.mu2) * cref[k];
    DensityOperator op(scaled, tc.dt * tc.mu2, 1.0);
    auto apply_s = [&op](const std::vector<double>& in, std::vector<double>& out) {
      op.apply(in, out);
    };
    const std::vector<double>& sw = op.half_weights();
    std::vector<double> rhs2(gt.size());
    for (int k = 0; k < gt.size(); ++k) rhs2[k] = ts.rho2.v[k] / sw[k];
    const auto h = dense_solve(assemble(apply_s, gt.size()), rhs2);
    std::vector<double> rref(gt.size());
    for (int k = 0; k < gt.size(); ++k) rref[k] = h[k] * sw[k];
    check("two-species-density", testsupport::max_abs_diff(t1.rho2.v, rref),
          testsupport::max_abs(rref));
  }

  report("9. oracle equivalence on small grids (<= 1e-10 relative)", ok, detail.str());
}

// --------------------------------------------------------------- criterion 10

void criterion10() {
  const int n = 256;
  const Grid2D g = make_grid2d(-5, 5, -5, 5, n, n);
  const RadialGrid rg = make_radial_grid(5.0, n);
  SchemeConfig cfg;
  cfg.epsilon = 1.0;
  cfg.dt = 0.01;

  SimState cart;
  cart.rho = gaussian_field(g, 4.0, 1.0);
  cart.conc = gaussian_field(g, 1.0, 0.5);

  RadialSimState rad;
  rad.rho = RadialField(rg);
  rad.conc = RadialField(rg);
  for (int j = 1; j <= rg.nr; ++j) {
    const double r2 = rg.r(j) * rg.r(j);
    rad.rho.v[j] = 4.0 * std::exp(-r2);
    rad.conc.v[j] = std::exp(-0.5 * r2);
  }
  rad.rho.sync_ghost();
  rad.conc.sync_ghost();

  const int nsteps = 50;  // t = 0.5
  for (int k = 0; k < nsteps; ++k) {
    cart = step_first_order(cart, cfg);
    rad = step_radial(rad, cfg, 1.0);
  }

  // compare along y = 0, x >= 0, interpolating the radial profile
  const int jmid = n / 2;  // y = 0 exactly
  double num = 0, den = 0;
  for (int i = n / 2; i < n; ++i) {
    const double x = g.x(i);
    const double pos = x / rg.dr + 0.5;  // fractional node index: r_j = (j-1/2) dr
    const int j0 = std::max(1, std::min(rg.nr - 1, static_cast<int>(pos)));
    const double frac = std::min(1.0, std::max(0.0, pos - j0));
    const double rval = rad.rho.v[j0] * (1.0 - frac) + rad.rho.v[j0 + 1] * frac;
    num += std::abs(cart.rho(i, jmid) - rval);
    den += std::abs(cart.rho(i, jmid));
  }
  const double rel = num / den;
  const double bound = 5.0 * g.dx;
  std::ostringstream detail;
  detail << "relative l1 along the axis " << fmt(rel) << " (bound " << fmt(bound) << ")";
  report("10. radial and cartesian solvers agree along the axis", rel <= bound, detail.str());
}

}  // namespace

int main() {
  std::printf("chemokit acceptance suite\n");
  guarded("1. conservation", criterion1);
  guarded("2. positivity", criterion2);
  guarded("3. convergence slopes", criterion3);
  guarded("4. asymptotic preservation", criterion4);
  guarded("5. energy decay", criterion5);
  guarded("6. blow-up scaling", criterion6);
  guarded("7. steady states in m", criterion7);
  guarded("8. two species", criterion8);
  guarded("9. oracle equivalence", criterion9);
  guarded("10. cross-coordinate consistency", criterion10);
  if (g_failures) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
