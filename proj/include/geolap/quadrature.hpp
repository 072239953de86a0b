#pragma once

#include <functional>
#include <span>
#include <vector>

#include "geolap/errors.hpp"

namespace geolap {

// One-dimensional quadrature rule: nodes and matching weights.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss–Legendre rule on [-1, 1] (weight 1), exact through degree 2n-1.
// Cached process-wide; computed by Golub–Welsch from the Jacobi matrix.
const Rule1D& gauss_legendre(int n);

// Gauss–Hermite rule for the physicists' weight e^{-t^2} on the line,
// exact through degree 2n-1.  Cached process-wide.
const Rule1D& gauss_hermite(int n);

// Gauss–Legendre rule affinely mapped onto [a, b].
Rule1D legendre_on(double a, double b, int n);

// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth = 48);

// Sum in a fixed pairwise tree order; deterministic for a given vector.
double pairwise_sum(std::span<const double> v);

}  // namespace geolap
