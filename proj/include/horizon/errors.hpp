#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace horizon {

// Argument outside the domain of a deformed exp/log or of a closed-form
// risk measure. Carries the offending point and the bound it crossed.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, double x, double q, double bound)
      : std::domain_error(what), x_(x), q_(q), bound_(bound) {}

  double x() const noexcept { return x_; }
  double q() const noexcept { return q_; }
  double bound() const noexcept { return bound_; }

 private:
  double x_;
  double q_;
  double bound_;
};

// Raised only when the ridge fallback cannot rescue the normal equations.
class SingularRegression : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A driver's domain guard rejected a y value during a backward solve.
class DomainGuardViolation : public std::runtime_error {
 public:
  DomainGuardViolation(const std::string& what, std::size_t path,
                       std::size_t node, double y)
      : std::runtime_error(what), path_(path), node_(node), y_(y) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t node() const noexcept { return node_; }
  double y() const noexcept { return y_; }

 private:
  std::size_t path_;
  std::size_t node_;
  double y_;
};

class NonFiniteValue : public std::runtime_error {
 public:
  NonFiniteValue(const std::string& what, std::size_t path, std::size_t node)
      : std::runtime_error(what), path_(path), node_(node) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t path_;
  std::size_t node_;
};

// Importance weights collapsed (effective sample size below the floor).
class DegenerateWeights : public std::runtime_error {
 public:
  DegenerateWeights(const std::string& what, double ess_fraction)
      : std::runtime_error(what), ess_fraction_(ess_fraction) {}

  double ess_fraction() const noexcept { return ess_fraction_; }

 private:
  double ess_fraction_;
};

// Config text errors, annotated with 1-based line and column.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(annotate(what, line, column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string annotate(const std::string& what, std::size_t line,
                              std::size_t column) {
    return "config:" + std::to_string(line) + ":" + std::to_string(column) +
           ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

// Unknown registry label (driver, family, claim or measure spec string).
class UnknownLabel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace horizon
