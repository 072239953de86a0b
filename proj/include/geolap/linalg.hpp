#pragma once

#include <vector>

#include "geolap/jet.hpp"

namespace geolap {

// Small dense kernels for the d x d systems that appear throughout the
// geometry pipeline (d <= 8).  Matrices are row-major flat vectors; all
// routines take their arguments by value because the sizes are tiny and
// every caller wants to keep the original.

// Gaussian elimination with partial pivoting.  Throws GraphSolveError when
// a pivot vanishes, since every call site sits inside a Newton or implicit
// solve.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n);

// Inverse by Gauss-Jordan with partial pivoting; NonDegeneracyError on a
// vanishing pivot.
std::vector<double> invert_dense(std::vector<double> a, int n);

// Determinant by LU with partial pivoting; returns 0 for singular input.
double det_dense(std::vector<double> a, int n);

// Cholesky feasibility test (symmetric input assumed).
bool is_pd(std::vector<double> a, int n);

// Lower Cholesky factor L with A = L L^T; NonDegeneracyError when A is not
// positive definite.
std::vector<double> cholesky_lower(std::vector<double> a, int n);

// Jet-valued analogues.  Jets form a commutative ring whose units are the
// jets with nonzero constant term, so elimination pivoted on constant terms
// works verbatim; both throw NonDegeneracyError when the value-level matrix
// is singular.
Jet det_jet(std::vector<Jet> a, int n);
std::vector<Jet> invert_jet(std::vector<Jet> a, int n);

}  // namespace geolap
