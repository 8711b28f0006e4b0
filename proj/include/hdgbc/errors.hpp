#pragma once

#include <stdexcept>
#include <string>

namespace hdgbc {

/// Requested quadrature or polynomial degree outside the implemented range.
class UnsupportedDegreeError : public std::invalid_argument {
public:
  explicit UnsupportedDegreeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Direct factorization hit a structurally or numerically singular pivot.
class SingularSystemError : public std::runtime_error {
public:
  explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

/// An element-local solve failed during static condensation.
class CondensationError : public std::runtime_error {
public:
  CondensationError(int element, const std::string& what)
      : std::runtime_error("element " + std::to_string(element) + ": " + what), element_(element) {}
  int element() const { return element_; }

private:
  int element_;
};

/// Config file could not be parsed or violates an invariant.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

}  // namespace hdgbc
