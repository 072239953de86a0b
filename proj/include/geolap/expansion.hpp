#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "geolap/cost.hpp"
#include "geolap/expr.hpp"
#include "geolap/geometry.hpp"
#include "geolap/graph.hpp"
#include "geolap/tensor.hpp"

namespace geolap {

// Scalar function of x alone with jet evaluation: a plain expression, or a
// two-argument field with y frozen.
struct FieldX {
  int d = 0;
  std::function<double(std::span<const double> x)> value;
  std::function<Jet(std::span<const Jet> x)> jets;

  explicit operator bool() const { return static_cast<bool>(value); }
};

// Build a FieldX from an expression mentioning only x-variables.
FieldX field_x_from_expr(const Expr& e);
// Slice a two-argument field at fixed y.
FieldX freeze_y(const FieldXY& f, std::vector<double> y);
// Exchange the roles of the two argument blocks: returns (x, y) -> f(y, x).
FieldXY swap_roles(const FieldXY& f);

// Zeroth and first coefficients of the Laplace expansion of
// int e^{-u/eps} (2 pi eps)^{-d/2} r dx at an interior critical point of u:
// I(eps) = c0 + eps c1 + O(eps^2).
struct LaplaceCoefficients {
  double c0 = 0.0;
  double c1 = 0.0;
};
LaplaceCoefficients coord_first_order(const FieldX& u, const FieldX& r,
                                      std::span<const double> x_star);

// Gaussian moment E[z_{i1} ... z_{ik}] for covariance eps * cov, summed over
// pair partitions; odd orders return zero exactly.
double isserlis_moment(const Tensor& cov, std::span<const int> indices,
                       double eps);
double isserlis_moment(const Tensor& cov, std::initializer_list<int> indices,
                       double eps);

// Interior integrands at one surface point (curvature form and inner-Laplace
// coordinate form); thin wrappers over the shared pointwise kernel.
double geometric_interior_integrand(const FieldXY& rho, const SigmaPoint& sp);
double coordinate_interior_integrand(const FieldXY& rho, const SigmaPoint& sp);

// (1/4) g(W, nu) at a boundary point of the surface lying over the face
// x_axis = const of the x-box; side is +1 for the upper face, -1 for the
// lower.  The (d-1)-dimensional face measure is not included here.
double boundary_integrand(const FieldXY& rho, const SigmaPoint& sp, int axis,
                          int side);

struct QuadratureSpec {
  int interior_nodes = 32;  // Gauss-Legendre nodes per interior axis
  int boundary_nodes = 32;  // nodes per boundary face axis
};

// First-order expansion of the double integral over the x-box of the cost's
// domain:  I(eps) ~ I0 + eps (I1_interior + I1_boundary).
struct ExpansionResult {
  double I0 = 0.0;
  double I1_interior = 0.0;
  double I1_boundary = 0.0;
  double I1_total = 0.0;

  struct Sample {
    std::vector<double> x;
    double m = 0.0, f = 0.0, L_geom = 0.0, L_coord = 0.0;
  };
  std::vector<Sample> samples;  // one per interior node, row-major grid order

  int interior_nodes = 0;
  int boundary_nodes = 0;
  std::vector<std::array<double, 2>> x_box;
};

// Surface quadrature of f dm and the first-order integrands over the x-box.
// Interior nodes are a tensor-product Gauss-Legendre grid with the surface
// density m(x) = sqrt(det u_ij); the boundary term integrates facewise with
// the induced (d-1)-volume.  Node work parallelizes across
// GEOLAPLACE_WORKERS threads; sums are reduced pairwise in a fixed order, so
// results are bit-stable for a given node count.  A graph solve failure
// aborts with the offending node location appended.
ExpansionResult expand(const CostFunction& cost, const FieldXY& rho,
                       const QuadratureSpec& quad = {});

// Convolution kernel K_tau(z) = tau^{-d/2} exp(-|z|^2/(4 tau)) / |z/sqrt(tau)|^{d-1}.
// Returns +infinity at z = 0 for d >= 2 (integrable pole); DomainError for
// tau <= 0.
double remainder_kernel(std::span<const double> z, double tau);

// C(d, n, k) = int_0^inf s^{k+n+d-2} e^{-s^2/4} ds / (2 pi)^{d/2}, by
// adaptive quadrature; the Gamma-function closed form is exposed separately
// as a cross-check.
double taylor_constant(int d, int n, int k);
double taylor_constant_closed(int d, int n, int k);

}  // namespace geolap
