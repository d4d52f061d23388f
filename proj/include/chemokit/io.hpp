#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chemokit/diagnostics.hpp"
#include "chemokit/errors.hpp"
#include "chemokit/grid.hpp"

namespace chemokit {

// 17 significant digits: doubles round-trip exactly.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw ConfigError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ConfigError("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace detail

inline const char* kTimeSeriesHeader =
    "time,mass,free_energy,max_rho,min_rho,dt_grad_rho,small_data_lhs,cg_iters";

inline void write_time_series_csv(const std::string& path,
                                  const std::vector<DiagnosticsRecord>& series) {
  std::ostringstream out;
  out << kTimeSeriesHeader << "\n";
  for (const DiagnosticsRecord& r : series) {
    out << fmt_double(r.time) << ',' << fmt_double(r.mass) << ',' << fmt_double(r.free_energy)
        << ',' << fmt_double(r.max_rho) << ',' << fmt_double(r.min_rho) << ','
        << fmt_double(r.dt_grad_rho) << ',' << fmt_double(r.small_data_lhs) << ','
        << r.cg_iterations << "\n";
  }
  detail::write_file_atomic(path, out.str());
}

// Snapshot layout: a 4-line header (format tag, sizes, spacings, time)
// followed by the values, row-major, one grid row per line.
inline void write_snapshot(const std::string& path, const Field2D& f, double time) {
  std::ostringstream out;
  out << "format,chemokit-field-2d\n";
  out << "size," << f.grid.nx << ',' << f.grid.ny << "\n";
  out << "spacing," << fmt_double(f.grid.dx) << ',' << fmt_double(f.grid.dy) << "\n";
  out << "time," << fmt_double(time) << "\n";
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) out << ',';
      out << fmt_double(f(i, j));
    }
    out << "\n";
  }
  detail::write_file_atomic(path, out.str());
}

// Radial snapshot includes the ghost value (index 0).
inline void write_snapshot(const std::string& path, const RadialField& f, double time) {
  std::ostringstream out;
  out << "format,chemokit-field-radial\n";
  out << "size," << f.grid.nr << "\n";
  out << "spacing," << fmt_double(f.grid.dr) << "\n";
  out << "time," << fmt_double(time) << "\n";
  for (int j = 0; j <= f.grid.nr; ++j) out << fmt_double(f.v[j]) << "\n";
  detail::write_file_atomic(path, out.str());
}

struct SnapshotData {
  bool radial = false;
  int nx = 0, ny = 0, nr = 0;
  double dx = 0, dy = 0, dr = 0;
  double time = 0;
  std::vector<double> values;
};

inline SnapshotData read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot: " + path);
  SnapshotData s;
  std::string line;

  auto split = [](const std::string& str) {
    std::vector<std::string> parts;
    std::stringstream ss(str);
    std::string tok;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
    return parts;
  };

  if (!std::getline(in, line)) throw ConfigError("snapshot truncated: " + path);
  if (line == "format,chemokit-field-2d")
    s.radial = false;
  else if (line == "format,chemokit-field-radial")
    s.radial = true;
  else
    throw ConfigError("unknown snapshot format: " + line);

  std::getline(in, line);
  auto size = split(line);
  std::getline(in, line);
  auto spacing = split(line);
  std::getline(in, line);
  auto time = split(line);
  if (size.size() < 2 || spacing.size() < 2 || time.size() < 2)
    throw ConfigError("snapshot header malformed: " + path);

  if (s.radial) {
    s.nr = std::stoi(size[1]);
    s.dr = std::stod(spacing[1]);
  } else {
    if (size.size() < 3 || spacing.size() < 3)
      throw ConfigError("snapshot header malformed: " + path);
    s.nx = std::stoi(size[1]);
    s.ny = std::stoi(size[2]);
    s.dx = std::stod(spacing[1]);
    s.dy = std::stod(spacing[2]);
  }
  s.time = std::stod(time[1]);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (const std::string& tok : split(line)) s.values.push_back(std::stod(tok));
  }
  const std::size_t expect = s.radial ? static_cast<std::size_t>(s.nr + 1)
                                      : static_cast<std::size_t>(s.nx) * s.ny;
  if (s.values.size() != expect)
    throw ConfigError("snapshot value count mismatch in " + path);
  return s;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  detail::write_file_atomic(path, content);
}

}  // namespace chemokit
