#include "geolap/linalg.hpp"

#include <cmath>
#include <utility>

#include "geolap/errors.hpp"

namespace geolap {

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
    if (std::fabs(a[piv * n + k]) < 1e-300)
      throw GraphSolveError("singular Newton system");
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(a[piv * n + j], a[k * n + j]);
      std::swap(b[piv], b[k]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double m = a[i * n + k] / a[k * n + k];
      for (int j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
      b[i] -= m * b[k];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    double v = b[k];
    for (int j = k + 1; j < n; ++j) v -= a[k * n + j] * b[j];
    b[k] = v / a[k * n + k];
  }
  return b;
}

std::vector<double> invert_dense(std::vector<double> a, int n) {
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
    if (std::fabs(a[piv * n + k]) < 1e-300)
      throw NonDegeneracyError("matrix inverse: singular pivot");
    if (piv != k)
      for (int j = 0; j < n; ++j) {
        std::swap(a[piv * n + j], a[k * n + j]);
        std::swap(inv[piv * n + j], inv[k * n + j]);
      }
    const double p = a[k * n + k];
    for (int j = 0; j < n; ++j) {
      a[k * n + j] /= p;
      inv[k * n + j] /= p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const double m = a[i * n + k];
      if (m == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a[i * n + j] -= m * a[k * n + j];
        inv[i * n + j] -= m * inv[k * n + j];
      }
    }
  }
  return inv;
}

double det_dense(std::vector<double> a, int n) {
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
    if (a[piv * n + k] == 0.0) return 0.0;
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(a[piv * n + j], a[k * n + j]);
      det = -det;
    }
    det *= a[k * n + k];
    for (int i = k + 1; i < n; ++i) {
      const double m = a[i * n + k] / a[k * n + k];
      for (int j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
    }
  }
  return det;
}

bool is_pd(std::vector<double> a, int n) {
  // In-place Cholesky; any non-positive pivot disqualifies the matrix.
  for (int k = 0; k < n; ++k) {
    double pivot = a[k * n + k];
    for (int s = 0; s < k; ++s) pivot -= a[k * n + s] * a[k * n + s];
    if (!(pivot > 0.0)) return false;
    const double root = std::sqrt(pivot);
    a[k * n + k] = root;
    for (int i = k + 1; i < n; ++i) {
      double v = a[i * n + k];
      for (int s = 0; s < k; ++s) v -= a[i * n + s] * a[k * n + s];
      a[i * n + k] = v / root;
    }
  }
  return true;
}

std::vector<double> cholesky_lower(std::vector<double> a, int n) {
  for (int k = 0; k < n; ++k) {
    double pivot = a[k * n + k];
    for (int s = 0; s < k; ++s) pivot -= a[k * n + s] * a[k * n + s];
    if (!(pivot > 0.0))
      throw NonDegeneracyError("Cholesky: matrix is not positive definite");
    const double root = std::sqrt(pivot);
    a[k * n + k] = root;
    for (int i = k + 1; i < n; ++i) {
      double v = a[i * n + k];
      for (int s = 0; s < k; ++s) v -= a[i * n + s] * a[k * n + s];
      a[i * n + k] = v / root;
    }
  }
  for (int k = 0; k < n; ++k)
    for (int j = k + 1; j < n; ++j) a[k * n + j] = 0.0;
  return a;
}

Jet det_jet(std::vector<Jet> a, int n) {
  double sign = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k].value()) > std::fabs(a[piv * n + k].value()))
        piv = i;
    if (std::fabs(a[piv * n + k].value()) < 1e-300)
      throw NonDegeneracyError("jet determinant: singular pivot");
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(a[piv * n + j], a[k * n + j]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      const Jet m = a[i * n + k] / a[k * n + k];
      for (int j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
    }
  }
  Jet det = a[0];
  for (int k = 1; k < n; ++k) det = det * a[k * n + k];
  return det * sign;
}

std::vector<Jet> invert_jet(std::vector<Jet> a, int n) {
  const Jet zero = a[0] * 0.0;
  std::vector<Jet> inv(static_cast<std::size_t>(n) * n, zero);
  for (int i = 0; i < n; ++i) inv[i * n + i] = zero + 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k].value()) > std::fabs(a[piv * n + k].value()))
        piv = i;
    if (std::fabs(a[piv * n + k].value()) < 1e-300)
      throw NonDegeneracyError("jet matrix inverse: singular pivot");
    if (piv != k)
      for (int j = 0; j < n; ++j) {
        std::swap(a[piv * n + j], a[k * n + j]);
        std::swap(inv[piv * n + j], inv[k * n + j]);
      }
    const Jet p = a[k * n + k];
    for (int j = 0; j < n; ++j) {
      a[k * n + j] = a[k * n + j] / p;
      inv[k * n + j] = inv[k * n + j] / p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const Jet m = a[i * n + k];
      for (int j = 0; j < n; ++j) {
        a[i * n + j] -= m * a[k * n + j];
        inv[i * n + j] -= m * inv[k * n + j];
      }
    }
  }
  return inv;
}

}  // namespace geolap
