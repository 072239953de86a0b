#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "geolap/errors.hpp"

namespace geolap {

// Hard caps for the dense truncated-Taylor kernels.
inline constexpr int kMaxJetOrder = 6;
inline constexpr int kMaxJetVars = 16;  // 2d with d <= 8

// Shared combinatorial tables for jets with a fixed (num_vars, order)
// truncation: the graded multi-index enumeration, index ranking, and the
// flattened multiplication table.  Instances are cached process-wide.
class JetSpace {
 public:
  struct MulTriple {
    std::uint32_t a, b, c;  // coeff[c] += lhs[a] * rhs[b]
  };

  static const JetSpace& get(int num_vars, int order);

  int num_vars() const { return num_vars_; }
  int order() const { return order_; }
  std::size_t size() const {
    return index_.size() / static_cast<std::size_t>(num_vars_);
  }

  std::span<const std::uint8_t> multi_index(std::size_t i) const {
    return {index_.data() + i * static_cast<std::size_t>(num_vars_),
            static_cast<std::size_t>(num_vars_)};
  }
  int degree(std::size_t i) const { return degree_[i]; }
  double factorial(std::size_t i) const { return factorial_[i]; }

  // Rank of a multi-index in the graded enumeration; throws CapabilityError
  // when |alpha| exceeds the truncation order.
  std::size_t index_of(std::span<const int> alpha) const;

  std::span<const MulTriple> mul_table() const { return mul_table_; }

 private:
  JetSpace(int num_vars, int order);

  int num_vars_, order_;
  std::vector<std::uint8_t> index_;  // size() * num_vars entries
  std::vector<int> degree_;          // |alpha| per coefficient
  std::vector<double> factorial_;    // alpha! per coefficient
  std::vector<MulTriple> mul_table_;
  // Sorted (packed multi-index, rank) pairs; 3 bits per variable suffice for
  // order <= 6, so 16 variables fit in one 64-bit key.
  std::vector<std::pair<std::uint64_t, std::uint32_t>> packed_;
};

// Dense truncated multivariate Taylor expansion ("jet") of a scalar function
// around a base point.  Coefficients follow the Taylor convention
//   coeff(alpha) = d^alpha f / alpha!,
// so multiplication is the truncated Cauchy product and partial() recovers
// raw derivatives by multiplying with alpha!.
//
// Mixed (x, y) jets use 2d variables with x mapped to slots 0..d-1 and y to
// slots d..2d-1.
class Jet {
 public:
  Jet() = default;

  // f(base) = value with all derivatives zero.
  static Jet constant(double value, int num_vars, int order,
                      std::span<const double> base);
  // Identity jets of the coordinates: one jet per variable.
  static std::vector<Jet> seed_vars(std::span<const double> point, int order);
  // Single coordinate jet (variable `var` seeded at point[var]).
  static Jet seed_var(std::span<const double> point, int var, int order);
  // Raw coefficient constructor (test and table use).
  static Jet from_coeffs(int num_vars, int order, std::span<const double> base,
                         std::vector<double> coeffs);

  int num_vars() const { return space_->num_vars(); }
  int order() const { return space_->order(); }
  const JetSpace& space() const { return *space_; }
  std::span<const double> base() const { return base_; }

  double value() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }
  std::span<const double> coeffs() const { return coeffs_; }
  double coeff(std::size_t i) const { return coeffs_[i]; }

  // alpha! * coeff(alpha), i.e. the raw partial derivative d^alpha f.
  double partial(std::span<const int> alpha) const;
  // Convenience: partial derivative by a list of variable ids (repetitions
  // allowed), e.g. partial_vars({0, 1, 1}) = d^3 f / dx0 dx1^2.
  double partial_vars(std::span<const int> vars) const;
  double partial_vars(std::initializer_list<int> vars) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator-(const Jet& a);
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator/(double s, const Jet& b);

  // Taylor composition with a univariate series sum_k series[k] * (f - f0)^k.
  Jet compose_series(std::span<const double> series) const;

  // Derivative with respect to one variable; result order drops by one.
  Jet deriv(int var) const;

  // Truncate to a lower order (same variables).
  Jet truncated(int new_order) const;

  // Re-embed into a larger space: variable v of *this becomes variable
  // v + var_offset of the target space.  Orders must satisfy
  // new_order >= 0; coefficients beyond the source order are zero.
  Jet embedded(int new_num_vars, int new_order, int var_offset,
               std::span<const double> new_base) const;

  // Evaluate this jet, viewed as a truncated polynomial in (z - base), at
  // the given argument jets (one per variable, all in a common space).
  // Composition is exact up to the argument space's truncation order.
  Jet composed_at(std::span<const Jet> args) const;

  bool same_space(const Jet& o) const { return space_ == o.space_; }

 private:
  Jet(const JetSpace* space, std::vector<double> base, std::vector<double> c)
      : space_(space), base_(std::move(base)), coeffs_(std::move(c)) {}

  void check_compatible(const Jet& o) const;

  const JetSpace* space_ = nullptr;
  std::vector<double> base_;
  std::vector<double> coeffs_;
};

// Unary functions via univariate Taylor composition.
Jet exp(const Jet& f);
Jet log(const Jet& f);
Jet sqrt(const Jet& f);
Jet cosh(const Jet& f);
Jet sinh(const Jet& f);
Jet sin(const Jet& f);
Jet cos(const Jet& f);
// Real exponent: requires positive constant term unless the exponent is an
// integer, in which case repeated multiplication handles any base.
Jet pow(const Jet& f, double exponent);

// Solve G(w, p) = 0 for w(p) as jets in the p-variables.  `G` is evaluated
// on argument jets (w first, then p), must return num_w components, and the
// caller provides the invertible Jacobian dG/dw at (w0, p0) in row-major
// order.  One iteration per Taylor order, all linear solves reuse the same
// factorization.  Throws GraphSolveError when the residual fails to vanish.
std::vector<Jet> implicit_jet_solve(
    const std::function<std::vector<Jet>(std::span<const Jet> w,
                                         std::span<const Jet> p)>& G,
    std::span<const double> w0, std::span<const double> p0, int order,
    std::span<const double> jacobian, double tol = 1e-11);

}  // namespace geolap
