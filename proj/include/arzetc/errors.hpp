#ifndef ARZETC_ERRORS_HPP_
#define ARZETC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace arzetc
{

/// Input outside the domain of a model formula (negative density, bad parameter).
struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

/// The requested equilibrium cannot be reproduced by the fundamental diagram.
struct CalibrationError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Linearization does not satisfy the structural assumptions of the controller.
struct RegimeError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Successive approximation did not reach the requested tolerance.
struct ConvergenceError : std::runtime_error
{
  ConvergenceError(const std::string & what, double last_residual, int iterations)
  : std::runtime_error(what), residual(last_residual), iterations(iterations) {}

  double residual;
  int iterations;
};

/// Time stepping failed (CFL violation, blow-up, shape mismatch).
struct NumericalError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Invalid configuration document; the message names the offending key path.
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

}  // namespace arzetc

#endif  // ARZETC_ERRORS_HPP_
