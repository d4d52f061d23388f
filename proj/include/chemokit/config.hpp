#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chemokit/errors.hpp"
#include "chemokit/grid.hpp"
#include "chemokit/ks_core.hpp"

namespace chemokit {

enum class ExperimentKind {
  run,
  convergence,
  asymptotic,
  energy,
  blowup_radial,
  blowup_cartesian,
  steady_subcritical,
  two_species
};

enum class Scheme { semi_implicit, newton };
enum class CIcKind { zero, gaussian, half_rho, screened };

struct DtRule {
  enum class Kind { absolute, match_dx, dx_over };
  Kind kind = Kind::absolute;
  double value = 0.0;  // the step itself, or the divisor K of dx_over_K

  double resolve(double dx) const {
    switch (kind) {
      case Kind::absolute: return value;
      case Kind::match_dx: return dx;
      case Kind::dx_over: return dx / value;
    }
    return value;
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::run;
  bool radial = false;
  double a = -5, b = 5, c = -5, d = 5;  // cartesian bounds
  double radius = 2.0;                  // radial outer boundary
  std::vector<int> meshes;              // nx per run (square grids) or nr
  DtRule dt;
  double dt_fine = 5e-4;  // small step of the asymptotic layer study
  double t_max = 0.0;
  std::vector<double> epsilons;
  std::vector<double> m_list{1.0};
  TimeOrder order = TimeOrder::first;
  Scheme scheme = Scheme::semi_implicit;
  IcParams ic;
  CIcKind ic_c = CIcKind::zero;
  double ic_c_amplitude = 1.0, ic_c_rate = 1.0;
  double chi1 = 1, chi2 = 10, mu1 = 1, mu2 = 1, alpha1 = 1, alpha2 = 1, beta = 1, D = 1;
  std::string out_dir = "out";
  std::vector<double> snap_times;
  int record_stride = 1;
  double cg_tol = 1e-10;
  bool jacobi = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& tok, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ConfigError("cannot parse number '" + tok + "' for key '" + key + "'", line);
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& val, int line) {
  std::vector<double> out;
  for (const std::string& tok : split_list(val)) out.push_back(parse_number(key, tok, line));
  return out;
}

inline const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"run", ExperimentKind::run},
      {"convergence", ExperimentKind::convergence},
      {"asymptotic", ExperimentKind::asymptotic},
      {"energy", ExperimentKind::energy},
      {"blowup_radial", ExperimentKind::blowup_radial},
      {"blowup_cartesian", ExperimentKind::blowup_cartesian},
      {"steady_subcritical", ExperimentKind::steady_subcritical},
      {"two_species", ExperimentKind::two_species}};
  return names;
}

inline const char* kind_name(ExperimentKind k) {
  for (const auto& [name, kind] : kind_names())
    if (kind == k) return name.c_str();
  return "?";
}

// Paper-study defaults so that a bare section header reproduces the study.
inline void apply_kind_defaults(ExperimentSpec& s) {
  switch (s.kind) {
    case ExperimentKind::run:
      break;  // fully explicit
    case ExperimentKind::convergence:
      s.a = -5; s.b = 5; s.c = -5; s.d = 5;
      s.meshes = {10, 20, 40, 80};
      s.dt = {DtRule::Kind::match_dx, 0.0};
      s.t_max = 5.0;
      s.epsilons = {1e-4, 1e-2, 1.0};
      s.ic = {IcKind::gaussian, 4.0, 1.0};
      s.ic_c = CIcKind::gaussian; s.ic_c_amplitude = 1.0; s.ic_c_rate = 0.5;
      break;
    case ExperimentKind::asymptotic:
    case ExperimentKind::energy:
      s.a = -1; s.b = 1; s.c = -1; s.d = 1;
      s.meshes = {40};
      s.dt = {DtRule::Kind::absolute, 0.05};
      s.t_max = 2.0;
      s.epsilons = s.kind == ExperimentKind::asymptotic ? std::vector<double>{1e-1, 1e-2, 1e-3}
                                                        : std::vector<double>{0.0, 1.0};
      s.ic = {IcKind::gaussian, 400.0, 100.0};
      s.ic_c = CIcKind::gaussian; s.ic_c_amplitude = 1.0; s.ic_c_rate = 50.0;
      break;
    case ExperimentKind::blowup_radial:
      s.radial = true;
      s.radius = 2.0;
      s.meshes = {80, 320};
      s.dt = {DtRule::Kind::dx_over, 5.0};
      s.t_max = 0.2;
      s.epsilons = {0.0};
      s.ic = {IcKind::gaussian, 600.0, 60.0};
      s.ic_c = CIcKind::screened;
      break;
    case ExperimentKind::blowup_cartesian:
      s.a = -4; s.b = 4; s.c = -4; s.d = 4;
      s.meshes = {40, 160};
      s.dt = {DtRule::Kind::dx_over, 20.0};
      s.t_max = 0.2;
      s.epsilons = {0.0};
      s.ic = {IcKind::gaussian, 600.0, 60.0};
      s.ic_c = CIcKind::gaussian; s.ic_c_amplitude = 300.0; s.ic_c_rate = 30.0;
      break;
    case ExperimentKind::steady_subcritical: {
      s.radial = true;
      s.radius = 2.0;
      s.meshes = {40};  // dr = 0.05
      s.dt = {DtRule::Kind::absolute, 1.25e-4};
      s.t_max = 50.0;
      s.epsilons = {0.0};
      s.m_list = {4.0, 16.0, 64.0};
      IcParams ic;
      ic.kind = IcKind::indicator_disc;
      ic.amplitude = 1.0;
      ic.r2_max = 0.1;
      s.ic = ic;
      s.ic_c = CIcKind::half_rho;
      s.snap_times = {0.0, 4.0, 10.0, 50.0};
      break;
    }
    case ExperimentKind::two_species:
      s.a = -3; s.b = 3; s.c = -3; s.d = 3;
      s.meshes = {100};
      s.dt = {DtRule::Kind::dx_over, 10.0};
      s.t_max = 0.05;
      s.epsilons = {0.0};
      s.ic = {IcKind::gaussian, 50.0, 100.0};
      s.ic_c = CIcKind::zero;
      break;
  }
}

}  // namespace detail

// Parses the key=value experiment format.  A config starts with a [kind]
// section header; '#' starts a comment; lists are comma separated.
inline ExperimentSpec parse_config(const std::string& text) {
  using detail::parse_number;
  using detail::parse_numbers;
  using detail::trim;

  static const std::set<std::string> known_keys = {
      "geometry", "domain", "radius", "nx", "ny", "nr", "meshes", "dt", "dt_fine", "t_max",
      "epsilon", "m", "order", "scheme", "ic", "ic_amplitude", "ic_rate", "ic_r2_max", "ic_ann",
      "ic_box1", "ic_box2", "ic_c", "ic_c_amplitude", "ic_c_rate", "chi1", "chi2", "mu1", "mu2",
      "alpha1", "alpha2", "beta", "D", "out_dir", "snap_times", "record_stride", "cg_tol",
      "jacobi"};

  ExperimentSpec spec;
  bool have_section = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::map<std::string, std::pair<std::string, int>> kv;  // key -> (value, line)

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", lineno);
      if (have_section) throw ConfigError("multiple sections are not supported", lineno);
      const std::string name = trim(line.substr(1, line.size() - 2));
      const auto it = detail::kind_names().find(name);
      if (it == detail::kind_names().end())
        throw ConfigError("unknown experiment kind '" + name + "'", lineno);
      spec.kind = it->second;
      detail::apply_kind_defaults(spec);
      have_section = true;
      continue;
    }
    if (!have_section) throw ConfigError("missing section: expected [kind] header", lineno);

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!known_keys.count(key)) throw ConfigError("unknown key '" + key + "'", lineno);
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
    kv[key] = {val, lineno};
  }
  if (!have_section) throw ConfigError("missing section: empty config");

  auto take = [&](const char* key) -> const std::pair<std::string, int>* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (const auto* p = take("geometry")) {
    if (p->first == "cartesian") spec.radial = false;
    else if (p->first == "radial") spec.radial = true;
    else throw ConfigError("geometry must be cartesian or radial", p->second);
  }
  if (const auto* p = take("domain")) {
    const auto v = parse_numbers("domain", p->first, p->second);
    if (v.size() != 4) throw ConfigError("domain needs a,b,c,d", p->second);
    spec.a = v[0]; spec.b = v[1]; spec.c = v[2]; spec.d = v[3];
    if (!(spec.b > spec.a) || !(spec.d > spec.c))
      throw ConfigError("domain extents must be positive", p->second);
  }
  if (const auto* p = take("radius")) {
    spec.radius = parse_number("radius", p->first, p->second);
    if (!(spec.radius > 0)) throw ConfigError("radius must be positive", p->second);
  }
  if (const auto* p = take("meshes")) {
    spec.meshes.clear();
    for (double v : parse_numbers("meshes", p->first, p->second)) {
      if (v < 3) throw ConfigError("mesh sizes must be at least 3", p->second);
      spec.meshes.push_back(static_cast<int>(v));
    }
  }
  if (const auto* p = take("nx")) spec.meshes = {static_cast<int>(parse_number("nx", p->first, p->second))};
  if (const auto* p = take("nr")) {
    spec.meshes = {static_cast<int>(parse_number("nr", p->first, p->second))};
    spec.radial = true;
  }
  if (const auto* p = take("ny")) {
    const int ny = static_cast<int>(parse_number("ny", p->first, p->second));
    if (!spec.meshes.empty() && ny != spec.meshes[0])
      throw ConfigError("only square grids are supported: ny must equal nx", p->second);
  }

  if (const auto* p = take("dt")) {
    if (p->first == "match_dx") {
      spec.dt = {DtRule::Kind::match_dx, 0.0};
    } else if (p->first.rfind("dx_over_", 0) == 0) {
      const double k = parse_number("dt", p->first.substr(8), p->second);
      if (!(k > 0)) throw ConfigError("dt divisor must be positive", p->second);
      spec.dt = {DtRule::Kind::dx_over, k};
    } else {
      const double v = parse_number("dt", p->first, p->second);
      if (!(v > 0)) throw ConfigError("dt must be positive", p->second);
      spec.dt = {DtRule::Kind::absolute, v};
    }
  }
  if (const auto* p = take("dt_fine")) {
    spec.dt_fine = parse_number("dt_fine", p->first, p->second);
    if (!(spec.dt_fine > 0)) throw ConfigError("dt_fine must be positive", p->second);
  }
  if (const auto* p = take("t_max")) {
    spec.t_max = parse_number("t_max", p->first, p->second);
    if (!(spec.t_max > 0)) throw ConfigError("t_max must be positive", p->second);
  }
  if (const auto* p = take("epsilon")) {
    spec.epsilons = parse_numbers("epsilon", p->first, p->second);
    for (double e : spec.epsilons)
      if (e < 0) throw ConfigError("epsilon must be nonnegative", p->second);
  }
  if (const auto* p = take("m")) {
    spec.m_list = parse_numbers("m", p->first, p->second);
    for (double m : spec.m_list)
      if (m < 1) throw ConfigError("m must be at least 1", p->second);
  }
  if (const auto* p = take("order")) {
    if (p->first == "first") spec.order = TimeOrder::first;
    else if (p->first == "bdf2") spec.order = TimeOrder::bdf2;
    else throw ConfigError("order must be first or bdf2", p->second);
  }
  if (const auto* p = take("scheme")) {
    if (p->first == "semi_implicit") spec.scheme = Scheme::semi_implicit;
    else if (p->first == "newton") spec.scheme = Scheme::newton;
    else throw ConfigError("scheme must be semi_implicit or newton", p->second);
  }
  if (const auto* p = take("ic")) {
    if (p->first == "gaussian") spec.ic.kind = IcKind::gaussian;
    else if (p->first == "indicator_disc") spec.ic.kind = IcKind::indicator_disc;
    else if (p->first == "indicator_annuli") spec.ic.kind = IcKind::indicator_annuli;
    else if (p->first == "indicator_twobump") spec.ic.kind = IcKind::indicator_twobump;
    else throw ConfigError("unknown ic kind '" + p->first + "'", p->second);
  }
  if (const auto* p = take("ic_amplitude")) {
    spec.ic.amplitude = parse_number("ic_amplitude", p->first, p->second);
    if (spec.ic.amplitude < 0) throw ConfigError("ic_amplitude must be nonnegative", p->second);
  }
  if (const auto* p = take("ic_rate")) spec.ic.rate = parse_number("ic_rate", p->first, p->second);
  if (const auto* p = take("ic_r2_max"))
    spec.ic.r2_max = parse_number("ic_r2_max", p->first, p->second);
  if (const auto* p = take("ic_ann")) {
    const auto v = parse_numbers("ic_ann", p->first, p->second);
    if (v.size() != 4) throw ConfigError("ic_ann needs lo1,hi1,lo2,hi2", p->second);
    spec.ic.ann1_lo = v[0]; spec.ic.ann1_hi = v[1]; spec.ic.ann2_lo = v[2]; spec.ic.ann2_hi = v[3];
  }
  if (const auto* p = take("ic_box1")) {
    const auto v = parse_numbers("ic_box1", p->first, p->second);
    if (v.size() != 4) throw ConfigError("ic_box1 needs x_lo,x_hi,y_lo,y_hi", p->second);
    for (int i = 0; i < 4; ++i) spec.ic.box1[i] = v[i];
  }
  if (const auto* p = take("ic_box2")) {
    const auto v = parse_numbers("ic_box2", p->first, p->second);
    if (v.size() != 4) throw ConfigError("ic_box2 needs x_lo,x_hi,y_lo,y_hi", p->second);
    for (int i = 0; i < 4; ++i) spec.ic.box2[i] = v[i];
  }
  if (const auto* p = take("ic_c")) {
    if (p->first == "zero") spec.ic_c = CIcKind::zero;
    else if (p->first == "gaussian") spec.ic_c = CIcKind::gaussian;
    else if (p->first == "half_rho") spec.ic_c = CIcKind::half_rho;
    else if (p->first == "screened") spec.ic_c = CIcKind::screened;
    else throw ConfigError("unknown ic_c kind '" + p->first + "'", p->second);
  }
  if (const auto* p = take("ic_c_amplitude"))
    spec.ic_c_amplitude = parse_number("ic_c_amplitude", p->first, p->second);
  if (const auto* p = take("ic_c_rate"))
    spec.ic_c_rate = parse_number("ic_c_rate", p->first, p->second);

  for (auto [key, ptr] : std::initializer_list<std::pair<const char*, double*>>{
           {"chi1", &spec.chi1}, {"chi2", &spec.chi2}, {"mu1", &spec.mu1}, {"mu2", &spec.mu2},
           {"alpha1", &spec.alpha1}, {"alpha2", &spec.alpha2}, {"beta", &spec.beta},
           {"D", &spec.D}}) {
    if (const auto* p = take(key)) {
      *ptr = parse_number(key, p->first, p->second);
      if (!(*ptr > 0)) throw ConfigError(std::string(key) + " must be positive", p->second);
    }
  }

  if (const auto* p = take("out_dir")) spec.out_dir = p->first;
  if (const auto* p = take("snap_times")) spec.snap_times = parse_numbers("snap_times", p->first, p->second);
  if (const auto* p = take("record_stride")) {
    spec.record_stride = static_cast<int>(parse_number("record_stride", p->first, p->second));
    if (spec.record_stride < 1) throw ConfigError("record_stride must be at least 1", p->second);
  }
  if (const auto* p = take("cg_tol")) {
    spec.cg_tol = parse_number("cg_tol", p->first, p->second);
    if (!(spec.cg_tol > 0)) throw ConfigError("cg_tol must be positive", p->second);
  }
  if (const auto* p = take("jacobi")) {
    if (p->first == "on" || p->first == "true") spec.jacobi = true;
    else if (p->first == "off" || p->first == "false") spec.jacobi = false;
    else throw ConfigError("jacobi must be on or off", p->second);
  }

  // cross-field validation
  if (spec.meshes.empty()) throw ConfigError("missing required key 'meshes' (or nx/nr)");
  if (!(spec.t_max > 0)) throw ConfigError("missing required key 't_max'");
  if (spec.dt.kind == DtRule::Kind::absolute && !(spec.dt.value > 0))
    throw ConfigError("missing required key 'dt'");
  if (spec.epsilons.empty()) spec.epsilons = {0.0};
  if (spec.kind == ExperimentKind::steady_subcritical || spec.kind == ExperimentKind::run) {
    for (double m : spec.m_list)
      if (m < 1) throw ConfigError("m must be at least 1");
  }
  return spec;
}

inline const char* experiment_kind_name(ExperimentKind k) { return detail::kind_name(k); }

}  // namespace chemokit
