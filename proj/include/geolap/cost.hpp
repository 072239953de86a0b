#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geolap/expr.hpp"
#include "geolap/jet.hpp"

namespace geolap {

// A scalar field on X x Y with two evaluation paths: plain doubles (hot
// loops) and jets (exact derivatives).  The jet path accepts arbitrary
// argument jets in a common space, so fields compose.
struct FieldXY {
  int d = 0;
  std::function<double(std::span<const double> x, std::span<const double> y)>
      value;
  std::function<Jet(std::span<const Jet> x, std::span<const Jet> y)> jets;

  explicit operator bool() const { return static_cast<bool>(value); }
};

// Build a field from a parsed expression (both evaluation paths).
FieldXY field_from_expr(const Expr& e);

// Working region: the x-box X, the tube half-width delta, the quadratic
// lower-bound rate lambda, and an optional y-box for oracle truncation.
struct DomainSpec {
  std::vector<std::array<double, 2>> x_box;
  double tubular_radius = 0.0;    // delta of the tube around Sigma
  double convexity_lambda = 0.0;  // lambda in u >= lambda/2 |y - y(x)|^2
  std::optional<std::vector<std::array<double, 2>>> y_box;

  void validate(int d) const;  // throws DomainError on malformed input
};

// A cost with its c-divergence u and optional presentation u = c - phi - psi.
// phi depends on x only and psi on y only; both are stored as FieldXY for
// uniformity.  y_guess supplies the per-family analytic starting point for
// the graph solver.
struct CostFunction {
  int d = 0;
  std::string family;
  DomainSpec domain;
  FieldXY u;
  std::optional<FieldXY> c, phi, psi;
  std::function<std::vector<double>(std::span<const double> x)> y_guess;
};

// General c-divergence u = c - phi - psi; validates the presentation
// identity, the agreement of mixed second derivatives, and nonnegativity at
// 32 sampled points (NotADivergenceError on failure).
CostFunction make_c_divergence(const Expr& c, const Expr& phi, const Expr& psi,
                               int d, DomainSpec domain);

// Builtin families.
CostFunction make_quadratic(int d, DomainSpec domain);
// u(x,y) = U(x - y); U is parsed over variables x1..xd read as z = x - y.
CostFunction make_translation(const Expr& U, int d, DomainSpec domain);
// Bregman divergence of a strictly convex f (variables x1..xd).
CostFunction make_bregman(const Expr& f, int d, DomainSpec domain);
// Fenchel-Young gap f(x) + f*(y) - <x,y>.  When fstar is absent the
// conjugate is computed numerically (Newton for values, Taylor solve for
// jets).
CostFunction make_fenchel_young(const Expr& f, const std::optional<Expr>& fstar,
                                int d, DomainSpec domain);
// Log-divergence with the built-in potential f(x) = |x|^2/2:
// u = f(x) - f(y) - (1/alpha) log(1 + alpha <y, x - y>).
CostFunction make_log_divergence(double alpha, int d, DomainSpec domain);
// Bayes / model cost u = |y - F(x)|^2 / 2 for a smooth map F: X -> Y.
CostFunction make_bayes(std::span<const Expr> F, int d, DomainSpec domain);

// The same cost with the roles of X and Y exchanged.  The caller supplies
// the swapped x-box (the image y(X) of the original graph) unless the graph
// is the diagonal, in which case the original box is reused.
CostFunction swapped(const CostFunction& cost,
                     std::optional<std::vector<std::array<double, 2>>>
                         new_x_box = std::nullopt);

// Swap loss delta = [u(x+xi, y) + u(x, y+eta)] - [u(x,y) + u(x+xi, y+eta)].
double cross_difference(const CostFunction& cost, std::span<const double> x,
                        std::span<const double> y, std::span<const double> xi,
                        std::span<const double> eta);

}  // namespace geolap
