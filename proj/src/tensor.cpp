#include "geolap/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>

namespace geolap {

namespace {

std::size_t pow_int(int d, int rank) {
  std::size_t n = 1;
  for (int k = 0; k < rank; ++k) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

Tensor::Tensor(int d, int rank) : Tensor(d, rank, {}) {}

Tensor::Tensor(int d, int rank, std::vector<IndexClass> classes)
    : d_(d), rank_(rank), classes_(std::move(classes)) {
  if (rank < 0 || rank > kMaxTensorRank)
    throw CapabilityError("tensor rank " + std::to_string(rank) +
                          " outside supported range 0.." +
                          std::to_string(kMaxTensorRank));
  if (rank > 0 && (d < 1 || d > kMaxTensorDim))
    throw CapabilityError("tensor dimension " + std::to_string(d) +
                          " outside supported range 1.." +
                          std::to_string(kMaxTensorDim));
  if (!classes_.empty() && static_cast<int>(classes_.size()) != rank)
    throw CapabilityError("index class list length does not match rank");
  data_.assign(pow_int(d_, rank_), 0.0);
}

Tensor Tensor::scalar(double v) {
  Tensor t(0, 0);
  t.data_ = {v};
  return t;
}

std::size_t Tensor::offset(std::initializer_list<int> idx) const {
  assert(static_cast<int>(idx.size()) == rank_);
  std::size_t off = 0;
  for (int i : idx) {
    assert(i >= 0 && i < d_);
    off = off * static_cast<std::size_t>(d_) + static_cast<std::size_t>(i);
  }
  return off;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (d_ != o.d_ || rank_ != o.rank_)
    throw DomainError("tensor shape mismatch in addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  if (d_ != o.d_ || rank_ != o.rank_)
    throw DomainError("tensor shape mismatch in subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor Tensor::symmetrized() const {
  if (rank_ <= 1) return *this;
  Tensor out(d_, rank_, classes_);
  std::vector<int> perm(rank_);
  std::iota(perm.begin(), perm.end(), 0);
  int nperm = 0;
  std::vector<int> idx(rank_), pidx(rank_);
  do {
    ++nperm;
    // Walk all index tuples with an odometer.
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      std::size_t src = 0, dst = 0;
      for (int s = 0; s < rank_; ++s) {
        src = src * d_ + idx[s];
        dst = dst * d_ + idx[perm[s]];
      }
      out.data_[dst] += data_[src];
      int s = rank_ - 1;
      while (s >= 0 && ++idx[s] == d_) idx[s--] = 0;
      if (s < 0) break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  out *= 1.0 / nperm;
  return out;
}

Tensor contract(const Tensor& A, const Tensor& B,
                std::span<const std::pair<int, int>> pairs) {
  const int ra = A.rank(), rb = B.rank();
  const int np = static_cast<int>(pairs.size());
  std::vector<bool> used_a(ra, false), used_b(rb, false);
  for (auto [sa, sb] : pairs) {
    if (sa < 0 || sa >= ra || sb < 0 || sb >= rb)
      throw DomainError("contract: slot index out of range");
    if (used_a[sa] || used_b[sb])
      throw DomainError("contract: slot used twice");
    if (A.d() != B.d())
      throw DomainError("contract: slot dimension mismatch");
    used_a[sa] = used_b[sb] = true;
#ifndef NDEBUG
    // Bars are bookkeeping: a contraction joins a slot with its dual bar
    // class (u^{ij} against u_{jk}, c^{jbar i} against c_{k jbar}), so when
    // both operands carry classes the paired slots must agree.
    if (!A.classes().empty() && !B.classes().empty())
      assert(A.classes()[sa] == B.classes()[sb] &&
             "contract: paired slots have different index classes");
#endif
  }
  const int rout = ra + rb - 2 * np;
  if (rout > kMaxTensorRank)
    throw CapabilityError("contract: result rank exceeds 4");
  const int d = (rout > 0 || np > 0) ? (ra > 0 ? A.d() : B.d()) : 0;

  std::vector<int> free_a, free_b;
  for (int s = 0; s < ra; ++s)
    if (!used_a[s]) free_a.push_back(s);
  for (int s = 0; s < rb; ++s)
    if (!used_b[s]) free_b.push_back(s);

  std::vector<IndexClass> out_classes;
  if (!A.classes().empty() && !B.classes().empty()) {
    for (int s : free_a) out_classes.push_back(A.classes()[s]);
    for (int s : free_b) out_classes.push_back(B.classes()[s]);
  }
  Tensor out(rout > 0 ? d : 0, rout, std::move(out_classes));

  std::vector<int> ia(ra, 0), ib(rb, 0), ifree(rout, 0), isum(np, 0);
  auto run_sum = [&]() {
    double s = 0.0;
    std::fill(isum.begin(), isum.end(), 0);
    for (;;) {
      for (int k = 0; k < np; ++k) {
        ia[pairs[k].first] = isum[k];
        ib[pairs[k].second] = isum[k];
      }
      std::size_t oa = 0, ob = 0;
      for (int k = 0; k < ra; ++k) oa = oa * d + ia[k];
      for (int k = 0; k < rb; ++k) ob = ob * d + ib[k];
      s += A.data()[oa] * B.data()[ob];
      int k = np - 1;
      while (k >= 0 && ++isum[k] == d) isum[k--] = 0;
      if (k < 0) break;
    }
    return s;
  };

  std::fill(ifree.begin(), ifree.end(), 0);
  std::size_t oidx = 0;
  for (;;) {
    for (int k = 0; k < static_cast<int>(free_a.size()); ++k)
      ia[free_a[k]] = ifree[k];
    for (int k = 0; k < static_cast<int>(free_b.size()); ++k)
      ib[free_b[k]] = ifree[free_a.size() + k];
    out.data()[oidx++] = run_sum();
    if (rout == 0) break;
    int k = rout - 1;
    while (k >= 0 && ++ifree[k] == d) ifree[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

Tensor contract(const Tensor& A, const Tensor& B,
                std::initializer_list<std::pair<int, int>> pairs) {
  return contract(A, B, std::span<const std::pair<int, int>>(pairs.begin(),
                                                             pairs.size()));
}

Tensor trace(const Tensor& A, int slot_a, int slot_b) {
  // Contract against the identity matrix.
  Tensor id(A.d(), 2);
  for (int i = 0; i < A.d(); ++i) id.at({i, i}) = 1.0;
  std::vector<std::pair<int, int>> pairs = {{slot_a, 0}, {slot_b, 1}};
  return contract(A, id, pairs);
}

namespace {

// LU factorization with partial pivoting; returns false when singular.
bool lu_factor(std::vector<double>& a, std::vector<int>& piv, int n,
               int& sign) {
  sign = 1;
  for (int k = 0; k < n; ++k) {
    int imax = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[imax * n + k])) imax = i;
    if (a[imax * n + k] == 0.0) return false;
    piv[k] = imax;
    if (imax != k) {
      sign = -sign;
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[imax * n + j]);
    }
    for (int i = k + 1; i < n; ++i) {
      a[i * n + k] /= a[k * n + k];
      for (int j = k + 1; j < n; ++j)
        a[i * n + j] -= a[i * n + k] * a[k * n + j];
    }
  }
  return true;
}

double norm_inf(std::span<const double> a, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(a[i * n + j]);
    m = std::max(m, row);
  }
  return m;
}

}  // namespace

Tensor invert_sym(const Tensor& M, double cond_limit) {
  if (M.rank() != 2) throw DomainError("invert_sym: rank-2 tensor required");
  const int n = M.d();
  std::vector<double> lu(M.data().begin(), M.data().end());
  std::vector<int> piv(n);
  int sign;
  if (!lu_factor(lu, piv, n, sign))
    throw NonDegeneracyError("invert_sym: matrix is singular");

  std::vector<IndexClass> classes(M.classes().begin(), M.classes().end());
  Tensor inv(n, 2, std::move(classes));
  std::vector<double> col(n);
  for (int c = 0; c < n; ++c) {
    std::fill(col.begin(), col.end(), 0.0);
    col[c] = 1.0;
    for (int k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(col[k], col[piv[k]]);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) col[i] -= lu[i * n + j] * col[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) col[i] -= lu[i * n + j] * col[j];
      col[i] /= lu[i * n + i];
    }
    for (int r = 0; r < n; ++r) inv.at({r, c}) = col[r];
  }

  const double cond = norm_inf(M.data(), n) * norm_inf(inv.data(), n);
  if (!(cond <= cond_limit))
    throw NonDegeneracyError("invert_sym: condition estimate " +
                             std::to_string(cond) + " exceeds limit " +
                             std::to_string(cond_limit));
  return inv;
}

double det(const Tensor& M) {
  if (M.rank() != 2) throw DomainError("det: rank-2 tensor required");
  const int n = M.d();
  std::vector<double> lu(M.data().begin(), M.data().end());
  std::vector<int> piv(n);
  int sign;
  if (!lu_factor(lu, piv, n, sign)) return 0.0;
  double d = sign;
  for (int k = 0; k < n; ++k) d *= lu[k * n + k];
  return d;
}

}  // namespace geolap
