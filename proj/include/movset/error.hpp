#pragma once

#include <stdexcept>
#include <string>

namespace movset {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A vertex list that cannot be a ClosedCurve (too few vertices, clockwise,
// self-intersecting, coincident neighbours, non-finite coordinates).
class InvalidCurve : public Error {
 public:
  enum class Reason { too_few_vertices, non_finite, coincident_vertices, clockwise, self_intersecting, not_convex };

  InvalidCurve(Reason reason, const std::string& what) : Error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Effort model for which a requested quantity is undefined (e.g. E'(beta) = 0
// where the adjoint coefficient needs E/E').
class SingularModel : public Error {
 public:
  using Error::Error;
};

// A control policy could not produce a speed field.
class PolicyError : public Error {
 public:
  using Error::Error;
};

// Scenario configuration problem; carries the offending field and line.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& message)
      : Error(format(field, line, message)), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& message) {
    std::string out = "config error";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + message;
  }

  std::string field_;
  int line_;
};

}  // namespace movset
