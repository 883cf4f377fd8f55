#pragma once

#include <stdexcept>
#include <string>

namespace robreg {

// Bad inputs: shapes, non-finite parameters, violated preconditions that can be checked.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A spectral filter could not certify its operator-norm bound within the round limit.
class FilterFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Multiplicative downweighting never met its stopping rule within the analytic K bound.
class DownweightDivergence : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An iterative solver hit its cap before certifying the requested accuracy.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(const std::string& what, double achieved_gradient_norm)
      : std::runtime_error(what), gradient_norm(achieved_gradient_norm) {}
  double gradient_norm;
};

// A phase of an outer driver exceeded its loop cap or a nested failure occurred in it.
class PhaseFailure : public std::runtime_error {
public:
  PhaseFailure(const std::string& what, int phase_index)
      : std::runtime_error(what), phase(phase_index) {}
  int phase;
};

// No boosted estimate reached the agreement quorum.
class BoostFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Configuration text that cannot be parsed or validated; line is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line_number)
      : std::runtime_error(line_number > 0 ? "line " + std::to_string(line_number) + ": " + what : what),
        line(line_number) {}
  int line;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace robreg
