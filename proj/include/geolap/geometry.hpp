#pragma once

#include <span>
#include <utility>

#include "geolap/cost.hpp"
#include "geolap/graph.hpp"
#include "geolap/tensor.hpp"

namespace geolap {

// Pointwise description of the product-space geometry at a SigmaPoint.
// Tensor layouts, row-major throughout:
//   gamma_*[k][i][j]      connection coefficient, upper slot first;
//   h[i][j][k]            fully covariant second fundamental form;
//   h_up[k][i][j]         upper slot first;
//   Rt_tensor[i][j][k][l] ambient curvature, slots j and k barred.
// Sign conventions are fixed once here: the ambient metric is -1/2 times
// the mixed Hessian of u on the off-diagonal blocks, curvature follows the
// R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y] sign, and the angle brackets
// <h,h>, <H,H> are pseudo-norms: the plain g-contractions negated (the raw
// contractions are kept alongside for debugging).
struct GeometryReport {
  int d = 0;

  Tensor c_mixed;    // c_{i jbar} on Sigma
  Tensor c_inv;      // plain matrix inverse of c_mixed
  double mt = 0.0;   // |det c_mixed|
  double mt_sign = 1.0;

  Tensor g, g_inv;   // induced metric u_{ij} and its inverse
  double m = 0.0;    // sqrt(det g)

  Tensor gamma_ambient_x;  // ambient Christoffels, unbarred block
  Tensor gamma_ambient_y;  // ambient Christoffels, barred block
  Tensor h, h_up;          // second fundamental form
  Tensor H_up, H_low;      // mean curvature, both slots
  Tensor gamma_sigma;      // Levi-Civita connection of g

  Tensor Rt_tensor;             // ambient curvature components
  double Rt_scalar = 0.0;       // ambient scalar curvature
  Tensor R_tensor;              // intrinsic curvature R_{ijkl}
  double R_scalar = 0.0;        // intrinsic scalar, Christoffel route
  double R_scalar_gauss = 0.0;  // same scalar via the contracted Gauss route

  double hh_bracket = 0.0, HH_bracket = 0.0;  // pseudo-norms
  double hh_raw = 0.0, HH_raw = 0.0;          // unnegated contractions

  double gauss_residual = 0.0;       // |R_scalar - R_scalar_gauss|
  double gauss_residual_full = 0.0;  // max-norm of the uncontracted identity
  double h_sym_residual = 0.0;       // worst asymmetry of h over permutations
  double gamma_residual = 0.0;       // gamma_sigma vs metric-route Christoffels
};

// Everything above in one pass.  Requires order-4 u-jets and the full set
// of graph derivatives; throws NonDegeneracyError when c_mixed is singular
// and MetricSignatureError when the induced metric is not positive definite.
GeometryReport geometry_report(const SigmaPoint& sp);

// Stage slices for callers that need less than the full report (these do
// not perform the positive-definiteness check on g).
std::pair<Tensor, double> ambient_metric(const SigmaPoint& sp);
std::pair<Tensor, Tensor> ambient_christoffels(const SigmaPoint& sp);
std::pair<Tensor, double> ambient_curvature(const SigmaPoint& sp);

// Decomposition of the raised ambient differential of f in the surface
// frame (t_i, n_i): grad f = G^i t_i + N^i n_i, solved as a 2d x 2d linear
// system.  dif_residual checks d_i f = (G_i - N_i)/2 and recon_residual
// rebuilds the barred partials from the frame coordinates.
struct GradientSplit {
  Tensor G_up, N_up;
  Tensor G_low, N_low;
  double dif_residual = 0.0;
  double recon_residual = 0.0;
};
GradientSplit gradient_split(const FieldXY& f, const SigmaPoint& sp);

// Ambient Laplace-Beltrami of f: -4 c^{ibar j} f_{ibar j} at the point.
double ambient_laplacian(const FieldXY& f, const SigmaPoint& sp);

// Residuals of the on-Sigma formulas expressing pure-x third and fourth
// derivatives of u through h, its surface derivative, and mixed c-terms.
std::pair<double, double> u_derivative_check(const SigmaPoint& sp);

// Residuals of the closed-form first and second ambient x-derivatives of
// mt against jet differentiation of |det c|.
std::pair<double, double> mt_derivative_check(const SigmaPoint& sp);

// One interior quadrature node of the first-order expansion term: both the
// curvature form L_geom and the inner-Laplace coordinate form L_coord of
// the integrand, the exact divergence term that separates them, and the
// boundary vector field W.  The divergence identity holds for
// W = G + N - f H; W_up_flipped carries the combination G - N + f H (the
// same field with its normal components reflected, which is the shape the
// identity takes in the swapped parametrization) for diagnostics.
struct IntegrandPoint {
  double m = 0.0, mt = 0.0, f = 0.0;
  double L_geom = 0.0;
  double L_coord = 0.0;
  double div_term = 0.0;           // (1/4) div_g W
  double identity_residual = 0.0;  // L_coord - L_geom - div_term
  double lap_f = 0.0;              // ambient Laplacian of f = rho/mt
  double NH = 0.0;                 // <N, H> pseudo-pairing
  Tensor W_up;
  Tensor W_up_flipped;
};
IntegrandPoint integrand_point(const SigmaPoint& sp, const FieldXY& rho);

// First-order coefficient of the classical Laplace expansion of
// int e^{-u/eps} (2 pi eps)^{-d/2} r dx around a nondegenerate interior
// minimum, given the inverse Hessian B of u and the flattened derivative
// arrays r1 (d), r2 (d^2), u3 (d^3), u4 (d^4) at that minimum:
//   c1 = 1/2 B^{ij} r_{ij} - 1/2 u_{ijk} B^{ij} B^{kl} r_l
//        + r0 (-1/8 u_{ijkl} B^{ij} B^{kl}
//              + 1/8 u_{ijk} u_{lmn} B^{ij} B^{kl} B^{mn}
//              + 1/12 u_{ijk} u_{lmn} B^{il} B^{jm} B^{kn}).
double laplace_c1(int d, std::span<const double> B, double r0,
                  std::span<const double> r1, std::span<const double> r2,
                  std::span<const double> u3, std::span<const double> u4);

}  // namespace geolap
