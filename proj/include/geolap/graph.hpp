#pragma once

#include <optional>
#include <span>
#include <vector>

#include "geolap/cost.hpp"
#include "geolap/jet.hpp"

namespace geolap {

// A point of the vanishing surface Sigma together with everything the
// geometry kernels need there: the full ambient jet of u at (x, y(x)) and
// the graph derivatives of y(x).
//
// Flat layouts (row-major over x-slots, trailing slot is the y-component):
//   dy [i*d + m]                  = d y^m / d x_i
//   d2y[(i*d + j)*d + m]          = d^2 y^m / d x_i d x_j   (symmetric i,j)
//   d3y[((i*d + j)*d + k)*d + m]  = d^3 y^m / dx_i dx_j dx_k (symmetric ijk)
struct SigmaPoint {
  int d = 0;
  std::vector<double> x, y;
  Jet u_jets;               // jet of u at (x, y) in all 2d variables
  std::vector<Jet> y_jets;  // y^m(x) as jets in the d x-variables
  std::vector<double> dy, d2y, d3y;
  double graph_residual = 0.0;  // max |du/dy_i| at the solved point
};

// Damped Newton for the stationarity condition du/dy = 0 defining y(x).
// Starts from y0 when given, else from the family's y_guess.  On success
// max_i |du/dy_i| <= tol, u(x,y) <= tol, and the y-Hessian of u is positive
// definite; any other outcome raises GraphSolveError.
std::vector<double> solve_graph(const CostFunction& cost,
                                std::span<const double> x,
                                std::optional<std::vector<double>> y0 = {},
                                double tol = 1e-11, int max_iter = 60);

// Ambient jet plus implicit differentiation of y(x) at an already-solved
// Sigma point.  order is the u-jet order (>= 4 for curvature work); the
// y-jets carry one order less.  NonDegeneracyError when the mixed Hessian
// c_{ij} is singular at the point.
SigmaPoint graph_jets(const CostFunction& cost, std::span<const double> x,
                      std::span<const double> y, int order = 4);

// Convenience chain: solve_graph from the family guess, then graph_jets.
SigmaPoint sigma_point(const CostFunction& cost, std::span<const double> x,
                       int order = 4);

}  // namespace geolap
