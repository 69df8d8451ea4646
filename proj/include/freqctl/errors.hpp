#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace freqctl {

/// Base class for every domain error raised by the library. The CLI maps
/// anything derived from it to exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

/// An argument outside the domain of a cost or response function.
class DomainError : public Error {
  public:
    using Error::Error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    using Error::Error;
};

/// The aggregate capacity cannot cover the net demand.
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

class NumericalError : public Error {
  public:
    using Error::Error;
};

class NonConvergenceError : public NumericalError {
  public:
    NonConvergenceError(const std::string& what, double last_residual)
        : NumericalError(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

  private:
    double last_residual_;
};

class AlgebraicSolveError : public NumericalError {
  public:
    AlgebraicSolveError(const std::string& what, std::size_t worst_bus, double residual)
        : NumericalError(what), worst_bus_(worst_bus), residual_(residual) {}
    std::size_t worst_bus() const noexcept { return worst_bus_; }
    double residual() const noexcept { return residual_; }

  private:
    std::size_t worst_bus_;
    double residual_;
};

/// Power-flow Jacobian became singular: the state left the security region.
class SecurityViolation : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class UnsupportedDiagnostic : public Error {
  public:
    using Error::Error;
};

}  // namespace freqctl
