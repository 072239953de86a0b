#include "geolap/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>

namespace geolap {

namespace {

// Golub–Welsch: nodes are the eigenvalues of the symmetric tridiagonal
// Jacobi matrix, weights are mu0 * (first eigenvector component)^2.
Rule1D golub_welsch(int n, const std::vector<double>& offdiag, double mu0) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    J(k, k + 1) = offdiag[k];
    J(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v0 * v0;
  }
  return rule;
}

const Rule1D& cached(int n, bool hermite) {
  if (n < 1) throw CapabilityError("quadrature rule needs at least one node");
  static std::mutex mu;
  static std::map<std::pair<int, bool>, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, hermite);
  auto it = cache.find(key);
  if (it == cache.end()) {
    std::vector<double> b(n - 1);
    double mu0;
    if (hermite) {
      for (int k = 1; k < n; ++k) b[k - 1] = std::sqrt(k / 2.0);
      mu0 = std::sqrt(M_PI);
    } else {
      for (int k = 1; k < n; ++k)
        b[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
      mu0 = 2.0;
    }
    it = cache.emplace(key, golub_welsch(n, b, mu0)).first;
  }
  return it->second;
}

}  // namespace

const Rule1D& gauss_legendre(int n) { return cached(n, false); }

const Rule1D& gauss_hermite(int n) { return cached(n, true); }

Rule1D legendre_on(double a, double b, int n) {
  const Rule1D& base = gauss_legendre(n);
  Rule1D out;
  out.nodes.resize(n);
  out.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int k = 0; k < n; ++k) {
    out.nodes[k] = mid + half * base.nodes[k];
    out.weights[k] = half * base.weights[k];
  }
  return out;
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth) {
  // Seed with a few panels so narrow peaks in wide intervals are not missed
  // by the first Simpson estimate.
  const int panels = 16;
  double total = 0.0;
  double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    double pa = a + k * h, pb = pa + h;
    double fa = f(pa), fm = f(0.5 * (pa + pb)), fb = f(pb);
    double whole = simpson(fa, fm, fb, h);
    total +=
        adapt(f, pa, pb, fa, fm, fb, whole, tol / panels, max_depth);
  }
  return total;
}

double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace geolap
