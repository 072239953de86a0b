#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "geolap/errors.hpp"

namespace geolap {

// Hard cap on the spatial dimension of tensor slots.
inline constexpr int kMaxTensorDim = 8;
inline constexpr int kMaxTensorRank = 4;

// Bookkeeping for the two index alphabets (plain x-indices vs barred
// y-indices).  Classes ride along through contractions and are verified in
// debug builds; storage and arithmetic ignore them.
enum class IndexClass : std::uint8_t { unbarred, barred };

// Dense real tensor of rank 0..4 with all slot dimensions equal to d,
// row-major storage.  Value semantics throughout.
class Tensor {
 public:
  Tensor() = default;  // rank-0 zero scalar

  Tensor(int d, int rank);
  Tensor(int d, int rank, std::vector<IndexClass> classes);

  static Tensor scalar(double v);

  int d() const { return d_; }
  int rank() const { return rank_; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const IndexClass> classes() const { return classes_; }

  double& at(std::initializer_list<int> idx) { return data_[offset(idx)]; }
  double at(std::initializer_list<int> idx) const { return data_[offset(idx)]; }
  double& operator()(std::initializer_list<int> idx) { return at(idx); }

  // Scalar access for rank-0 tensors.
  double value() const { return data_.empty() ? 0.0 : data_[0]; }

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  // Average over all slot permutations; idempotent.
  Tensor symmetrized() const;

 private:
  std::size_t offset(std::initializer_list<int> idx) const;

  int d_ = 0;
  int rank_ = 0;
  std::vector<double> data_;
  std::vector<IndexClass> classes_;
};

// Einstein contraction: sum over the given (slot of A, slot of B) pairs;
// remaining slots keep their order, A's free slots before B's.  Throws
// CapabilityError when the result rank would exceed 4 and DomainError on a
// slot mismatch.
Tensor contract(const Tensor& A, const Tensor& B,
                std::span<const std::pair<int, int>> pairs);
Tensor contract(const Tensor& A, const Tensor& B,
                std::initializer_list<std::pair<int, int>> pairs);

// Trace over two slots of a single tensor.
Tensor trace(const Tensor& A, int slot_a, int slot_b);

// Inverse of a rank-2 tensor by LU with partial pivoting.  The infinity-norm
// condition estimate kappa = |M| |M^-1| must stay below cond_limit, else
// NonDegeneracyError: an unusable inverse here means the problem's
// non-degeneracy assumption failed at this point.
Tensor invert_sym(const Tensor& M, double cond_limit = 1e12);

// Determinant of a rank-2 tensor by LU factorization; zero is a legal return.
double det(const Tensor& M);

}  // namespace geolap
