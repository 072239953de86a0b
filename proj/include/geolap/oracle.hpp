#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "geolap/cost.hpp"
#include "geolap/expansion.hpp"

namespace geolap {

// Inner quadrature rule for the y-integral at one outer node.
enum class InnerScheme {
  gauss_hermite,  // Gaussian proposal centered at y(x), reweighted exactly
  adaptive,       // slow fallback, d = 1 only: adaptive Simpson over the
                  // y-box, split at y(x); CapabilityError for d >= 2
};

struct OracleConfig {
  // Epsilon grid for coefficient fits: positive, strictly decreasing.
  std::vector<double> eps_list = {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};
  InnerScheme inner_scheme = InnerScheme::gauss_hermite;
  int hermite_nodes = 40;  // inner Gauss-Hermite nodes per y-axis (>= 8)
  int outer_nodes = 64;    // outer Gauss-Legendre nodes per x-axis
  // Proposal truncation radius in proposal standard deviations; inner nodes
  // beyond it are dropped.  The default leaves headroom so that even halved
  // the clipped mass stays below 1e-8 of the total on potentials that
  // flatten away from the surface (the proposal width understates their
  // spread).
  double sigma_cut = 16.0;
  double adaptive_tol = 1e-10;  // absolute tolerance of the adaptive fallback
  // integrate_full raises TailBoundExceeded when tail_bound() exceeds this;
  // the default (infinity) keeps the audit advisory, which the exact builtin
  // examples require at the large end of the default epsilon grid.
  double tail_tol = std::numeric_limits<double>::infinity();
  int fit_degree = 2;  // fixed by the first-order model c0 + c1 e + c2 e^2

  void validate() const;  // DomainError on malformed input
};

// A-priori bound on the mass neglected outside the tube of radius delta:
// (2 pi eps)^{-d/2} e^{-lambda delta^2/(2 eps)} vol(X) vol(Y), from the
// quadratic lower bound on u.  Requires the cost's y-box.
double tail_bound(const CostFunction& cost, double eps);

// Brute-force evaluation of
//   I(eps) = int_X int e^{-u/eps} (2 pi eps)^{-d/2} rho dy dx
// by outer Gauss-Legendre over the x-box and the configured inner scheme.
// The Gauss-Hermite proposal has covariance eps * u_yy(x, y(x))^{-1}; nodes
// where the integrand is not finite (outside the cost's domain of
// definition, where u -> +infinity) contribute zero.  Outer nodes run in
// parallel across GEOLAPLACE_WORKERS; sums reduce pairwise in fixed order,
// so results are bit-stable for a given configuration.
double integrate_full(const CostFunction& cost, const FieldXY& rho, double eps,
                      const OracleConfig& cfg = {});

// Least-squares fit I(eps) ~ I0 + I1 eps + c2 eps^2 with weights eps^{-2};
// fit_residual is |c2|, the remainder proxy.
struct EmpiricalFit {
  double I0_hat = 0.0;
  double I1_hat = 0.0;
  double fit_residual = 0.0;
};

// Fit the model to precomputed (eps, value) pairs.  FitError when fewer than
// four points are given, the grid spans less than a decade, or the weighted
// Vandermonde is numerically rank-deficient.
EmpiricalFit fit_coefficients(std::span<const double> eps,
                              std::span<const double> values);

// integrate_full over cfg.eps_list, then fit_coefficients.
EmpiricalFit empirical_coeffs(const CostFunction& cost, const FieldXY& rho,
                              const OracleConfig& cfg = {});

// Classical single-integral reference for d = 1:
//   int_box e^{-u/eps} (2 pi eps)^{-1/2} r dx
// by adaptive quadrature split at the minimizer, which Newton locates from
// x_seed.  DomainError when Newton fails or the minimizer is not interior;
// MetricSignatureError when u'' <= 0 there.
double single_laplace_oracle(const FieldX& u, const FieldX& r,
                             std::array<double, 2> box, double x_seed,
                             double eps, const OracleConfig& cfg = {});

// Sampled check of the quadratic lower bound u(x, y) >= lambda/2 |y - y(x)|^2
// inside the tube |y - y(x)| <= delta and outside it (within the y-box).
// Violations are max lambda/2 |z|^2 - u over the sweep (<= 0 means the bound
// holds on every sample); empirical_lambda = min 2 u / |z|^2 is the best
// rate the samples support.  Advisory: nothing throws on a violation.
struct AssumptionAudit {
  double max_violation_tube = 0.0;
  double max_violation_outside = 0.0;
  double empirical_lambda = std::numeric_limits<double>::infinity();
  int samples = 0;
};
AssumptionAudit audit_assumptions(const CostFunction& cost,
                                  const OracleConfig& cfg = {});

}  // namespace geolap
