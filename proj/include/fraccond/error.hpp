#pragma once

#include <stdexcept>
#include <string>

namespace fraccond {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (bad shapes, spacing, missing keys).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions that do not match the grid or window.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Numerical assembly produced an invalid object (e.g. a Gram matrix that is not SPD).
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds the configured dense-memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Interior block of a form is singular or numerically close to it.
class DirichletEigenvalueError : public Error {
 public:
  explicit DirichletEigenvalueError(const std::string& what, double relative_margin)
      : Error(what), relative_margin_(relative_margin) {}
  double relative_margin() const noexcept { return relative_margin_; }

 private:
  double relative_margin_;
};

/// A hypothesis of the stability theorems is violated by the supplied data.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. combining forms built on different kernel weights.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace fraccond
