#pragma once

#include <stdexcept>
#include <string>

namespace chemokit {

// Linear or nonlinear solver did not reach its tolerance.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

// The concentration field grew past what the mobility weights can represent.
// In practice this means the density has blown up on the current grid.
class BlowupError : public std::runtime_error {
public:
  explicit BlowupError(const std::string& what) : std::runtime_error(what) {}
};

// A guaranteed scheme property (positivity, finiteness) failed; indicates a bug.
class InternalError : public std::logic_error {
public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

// Experiment configuration problem; carries the offending line when known.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line(line) {}
  int line;
};

}  // namespace chemokit
