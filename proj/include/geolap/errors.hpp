#pragma once

#include <stdexcept>
#include <string>

namespace geolap {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested order/rank/dimension beyond what the dense kernels support.
struct CapabilityError : Error {
  using Error::Error;
};

// Division by a jet whose constant term vanishes.
struct SingularJetError : Error {
  using Error::Error;
};

// Function evaluated outside its domain (log of nonpositive jet, tau <= 0, ...).
struct DomainError : Error {
  using Error::Error;
};

// Mixed Hessian c_{i jbar} is numerically singular or too ill-conditioned.
struct NonDegeneracyError : Error {
  using Error::Error;
};

// Induced metric g = u_ij fails to be positive definite.
struct MetricSignatureError : Error {
  using Error::Error;
};

// Newton solve for the graph y(x) did not converge.
struct GraphSolveError : Error {
  using Error::Error;
};

// Expression or config text could not be parsed; carries a byte offset.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Candidate u violates nonnegativity / convexity sampling.
struct NotADivergenceError : Error {
  using Error::Error;
};

// Coefficient fit is ill-conditioned (eps grid too narrow or too short).
struct FitError : Error {
  using Error::Error;
};

// Oracle tail audit exceeded the requested tolerance.
struct TailBoundExceeded : Error {
  using Error::Error;
};

}  // namespace geolap
