#pragma once

#include <stdexcept>
#include <string>

namespace ermlimits {

// Domain / usage errors (CLI exit code 2).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedSampling : DomainError {
  explicit UnsupportedSampling(const std::string& msg) : DomainError(msg) {}
};

struct AssumptionViolated : DomainError {
  explicit AssumptionViolated(const std::string& msg) : DomainError(msg) {}
};

// Numerical failures (CLI exit code 3).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct QuadratureFailure : NumericalError {
  explicit QuadratureFailure(const std::string& msg) : NumericalError(msg) {}
};

struct NoConvergence : NumericalError {
  explicit NoConvergence(const std::string& msg) : NumericalError(msg) {}
};

struct MultipleSolutions : NumericalError {
  explicit MultipleSolutions(const std::string& msg) : NumericalError(msg) {}
};

struct NonCoercive : NumericalError {
  explicit NonCoercive(const std::string& msg) : NumericalError(msg) {}
};

struct DegenerateEta : NumericalError {
  explicit DegenerateEta(const std::string& msg) : NumericalError(msg) {}
};

struct InfeasibleX : NumericalError {
  explicit InfeasibleX(const std::string& msg) : NumericalError(msg) {}
};

struct GlobalInfeasible : NumericalError {
  explicit GlobalInfeasible(const std::string& msg) : NumericalError(msg) {}
};

struct Diverged : NumericalError {
  explicit Diverged(const std::string& msg) : NumericalError(msg) {}
};

struct ZeroEstimate : NumericalError {
  explicit ZeroEstimate(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace ermlimits
