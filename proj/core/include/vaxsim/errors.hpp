#pragma once

#include <stdexcept>
#include <string>

namespace vaxsim {

/// Bad input data or configuration: malformed rows, broken invariants,
/// infeasible marginals. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &what) : std::runtime_error(what) {}
};

/// Filesystem problems: missing files, unwritable output. Exit code 2.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

/// A broken internal invariant; indicates a bug, not bad input. Exit code 3.
class InternalError : public std::logic_error {
  public:
    explicit InternalError(const std::string &what) : std::logic_error(what) {}
};

} // namespace vaxsim
