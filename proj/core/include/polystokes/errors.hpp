#ifndef POLYSTOKES_ERRORS_HPP
#define POLYSTOKES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace polystokes {

/// Base class of everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A cell admits no interior star point (kernel sampling came up empty).
struct NotStarShaped : Error {
  using Error::Error;
};

/// Mesh file could not be parsed; carries the 1-based line number.
struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& what_)
      : Error("parse error at line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

/// Mesh connectivity is broken (non-manifold edge, bad vertex index, ...).
struct TopologyError : Error {
  using Error::Error;
};

/// A Gram factorization found an unexpected dimension or rank.
struct RankError : Error {
  using Error::Error;
};

/// Quadrature exactness above the supported limit.
struct UnsupportedDegree : Error {
  using Error::Error;
};

/// Projection or reconstruction order outside the mode's reach.
struct OrderTooHigh : Error {
  using Error::Error;
};

/// A local projector system is numerically singular (degenerate cell).
struct SingularLocalSystem : Error {
  using Error::Error;
};

/// The constrained minimizer failed to satisfy its own constraints.
struct InfeasibleConstraints : Error {
  using Error::Error;
};

struct AssemblyError : Error {
  using Error::Error;
};

struct SolverFailure : Error {
  using Error::Error;
};

/// The harness got an experiment spec it cannot run.
struct InvalidSpec : Error {
  using Error::Error;
};

}  // namespace polystokes

#endif
