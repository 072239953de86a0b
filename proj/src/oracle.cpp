#include "geolap/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "geolap/errors.hpp"
#include "geolap/graph.hpp"
#include "geolap/linalg.hpp"
#include "geolap/parallel.hpp"
#include "geolap/quadrature.hpp"

namespace geolap {
namespace {

double box_volume(const std::vector<std::array<double, 2>>& box) {
  double v = 1.0;
  for (const auto& [a, b] : box) v *= b - a;
  return v;
}

// Solve y(x) at an outer quadrature node, tagging failures with the node
// location (mirrors the expansion module's convention).
std::vector<double> solve_node(const CostFunction& cost,
                               std::span<const double> x,
                               std::span<const int> idx) {
  try {
    return solve_graph(cost, x);
  } catch (const GraphSolveError& e) {
    std::ostringstream os;
    os << e.what() << " [oracle: outer node (";
    for (std::size_t k = 0; k < idx.size(); ++k)
      os << (k ? "," : "") << idx[k];
    os << ") at x = (";
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << ")]";
    throw GraphSolveError(os.str());
  }
}

// e^{-u/eps} rho at one node; false outside the integrand's domain of
// definition (a restricted potential throws DomainError from log/sqrt, and
// u tends to +infinity toward that edge, so the contribution is zero).
bool integrand_at(const CostFunction& cost, const FieldXY& rho,
                  std::span<const double> x, std::span<const double> y,
                  double eps, double& out) {
  try {
    const double uval = cost.u.value(x, y);
    const double rval = rho.value(x, y);
    if (!std::isfinite(uval) || !std::isfinite(rval)) return false;
    out = std::exp(-uval / eps) * rval;
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

// y-Hessian of u at (x, y) by the jet path.
std::vector<double> y_hessian(const CostFunction& cost,
                              std::span<const double> x,
                              std::span<const double> y) {
  const int d = cost.d;
  std::vector<double> point(x.begin(), x.end());
  point.insert(point.end(), y.begin(), y.end());
  const std::vector<Jet> seeds = Jet::seed_vars(point, 2);
  const Jet u = cost.u.jets(std::span(seeds).subspan(0, d),
                            std::span(seeds).subspan(d, d));
  std::vector<double> h(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      h[static_cast<std::size_t>(i) * d + j] = u.partial_vars({d + i, d + j});
  return h;
}

// Inner integral at one outer node by the reweighted Gauss-Hermite proposal
// y = y(x) + sqrt(2 eps) L t with L L^T = u_yy(x, y(x))^{-1}.  The density
// prefactor (2 pi eps)^{-d/2} cancels against the proposal normalization,
// leaving pi^{-d/2} det L.  Non-finite integrand values contribute zero (u
// tends to +infinity at the edge of its domain of definition).
double inner_gauss_hermite(const CostFunction& cost, const FieldXY& rho,
                           std::span<const double> x,
                           std::span<const double> y_star, double eps,
                           const OracleConfig& cfg, const Rule1D& rule,
                           std::span<const double> mod_weights) {
  const int d = cost.d;
  const std::vector<double> s = invert_dense(y_hessian(cost, x, y_star), d);
  const std::vector<double> chol = cholesky_lower(s, d);
  double det_l = 1.0;
  for (int i = 0; i < d; ++i) det_l *= chol[static_cast<std::size_t>(i) * d + i];

  const int n = cfg.hermite_nodes;
  const double cut2 = 0.5 * cfg.sigma_cut * cfg.sigma_cut;  // |t|^2 ceiling
  const double scale = std::sqrt(2.0 * eps);

  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
  std::vector<double> contrib(total, 0.0);
  std::vector<double> t(d), y(d);
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    double w = 1.0, t2 = 0.0;
    for (int a = 0; a < d; ++a) {
      t[a] = rule.nodes[idx[a]];
      w *= mod_weights[idx[a]];
      t2 += t[a] * t[a];
    }
    if (t2 > cut2) continue;
    for (int m = 0; m < d; ++m) {
      double ym = y_star[m];
      for (int j = 0; j <= m; ++j)
        ym += scale * chol[static_cast<std::size_t>(m) * d + j] * t[j];
      y[m] = ym;
    }
    double val = 0.0;
    if (integrand_at(cost, rho, x, y, eps, val)) contrib[flat] = w * val;
  }
  return pairwise_sum(contrib) * det_l *
         std::pow(std::numbers::pi, -0.5 * d);
}

// Slow fallback for d = 1: adaptive Simpson over the y-box, split at y(x) so
// the peak sits on a panel boundary.
double inner_adaptive(const CostFunction& cost, const FieldXY& rho,
                      std::span<const double> x, double y_star, double eps,
                      const OracleConfig& cfg) {
  if (!cost.domain.y_box)
    throw DomainError("oracle: adaptive inner scheme requires the y-box");
  const auto [a, b] = (*cost.domain.y_box)[0];
  const double pref = 1.0 / std::sqrt(2.0 * std::numbers::pi * eps);
  auto f = [&](double yv) {
    const double y[1] = {yv};
    double val = 0.0;
    if (!integrand_at(cost, rho, x, y, eps, val)) return 0.0;
    return pref * val;
  };
  const double mid = std::clamp(y_star, a, b);
  return integrate_adaptive(f, a, mid, 0.5 * cfg.adaptive_tol) +
         integrate_adaptive(f, mid, b, 0.5 * cfg.adaptive_tol);
}

}  // namespace

void OracleConfig::validate() const {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0))
      throw DomainError("oracle config: epsilon values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw DomainError(
          "oracle config: epsilon values must be strictly decreasing");
  }
  if (hermite_nodes < 8)
    throw DomainError("oracle config: need at least 8 Hermite nodes");
  if (outer_nodes < 2)
    throw DomainError("oracle config: need at least 2 outer nodes");
  if (!(sigma_cut > 0.0))
    throw DomainError("oracle config: sigma_cut must be positive");
  if (!(adaptive_tol > 0.0))
    throw DomainError("oracle config: adaptive tolerance must be positive");
  if (!(tail_tol > 0.0))
    throw DomainError("oracle config: tail tolerance must be positive");
  if (fit_degree != 2)
    throw DomainError("oracle config: the fit degree is fixed at two");
}

double tail_bound(const CostFunction& cost, double eps) {
  if (!(eps > 0.0)) throw DomainError("tail bound: epsilon must be positive");
  const auto& dom = cost.domain;
  const int d = cost.d;
  if (static_cast<int>(dom.x_box.size()) != d)
    throw DomainError("tail bound: cost has no usable x-box");
  if (!dom.y_box || static_cast<int>(dom.y_box->size()) != d)
    throw DomainError("tail bound: cost has no y-box");
  if (!(dom.tubular_radius > 0.0) || !(dom.convexity_lambda > 0.0))
    throw DomainError("tail bound: cost has no tube radius or lambda");
  const double delta = dom.tubular_radius;
  const double lambda = dom.convexity_lambda;
  return std::pow(2.0 * std::numbers::pi * eps, -0.5 * d) *
         std::exp(-lambda * delta * delta / (2.0 * eps)) *
         box_volume(dom.x_box) * box_volume(*dom.y_box);
}

double integrate_full(const CostFunction& cost, const FieldXY& rho, double eps,
                      const OracleConfig& cfg) {
  cfg.validate();
  if (!cost.u) throw DomainError("oracle: cost has no u field");
  if (!rho) throw DomainError("oracle: density is empty");
  if (rho.d != cost.d)
    throw DomainError("oracle: density dimension does not match the cost");
  if (!(eps > 0.0)) throw DomainError("oracle: epsilon must be positive");
  const int d = cost.d;
  if (static_cast<int>(cost.domain.x_box.size()) != d)
    throw DomainError("oracle: cost has no usable x-box");
  for (const auto& [a, b] : cost.domain.x_box)
    if (!(a < b)) throw DomainError("oracle: x-box interval is empty");
  if (cfg.inner_scheme == InnerScheme::adaptive && d != 1)
    throw CapabilityError(
        "oracle: the adaptive inner scheme is one-dimensional; use "
        "gauss_hermite");

  if (std::isfinite(cfg.tail_tol)) {
    const double bound = tail_bound(cost, eps);
    if (bound > cfg.tail_tol) {
      std::ostringstream os;
      os << "oracle: tail bound " << bound << " exceeds the requested "
         << "tolerance " << cfg.tail_tol << " at eps = " << eps;
      throw TailBoundExceeded(os.str());
    }
  }

  std::vector<Rule1D> rules;
  rules.reserve(d);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    rules.push_back(
        legendre_on(cost.domain.x_box[a][0], cost.domain.x_box[a][1],
                    cfg.outer_nodes));
    total *= static_cast<std::size_t>(cfg.outer_nodes);
  }
  if (total > (1u << 24))
    throw CapabilityError("oracle: outer grid too large");

  const Rule1D& hermite = gauss_hermite(cfg.hermite_nodes);
  std::vector<double> mod_weights(hermite.nodes.size());
  for (std::size_t k = 0; k < hermite.nodes.size(); ++k)
    mod_weights[k] =
        hermite.weights[k] * std::exp(hermite.nodes[k] * hermite.nodes[k]);

  std::vector<double> results(total);
  for_each_index(static_cast<int>(total), [&](int flat) {
    std::vector<int> idx(d);
    std::size_t rem = static_cast<std::size_t>(flat);
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % cfg.outer_nodes);
      rem /= cfg.outer_nodes;
    }
    std::vector<double> x(d);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      x[a] = rules[a].nodes[idx[a]];
      w *= rules[a].weights[idx[a]];
    }
    const std::vector<double> y_star = solve_node(cost, x, idx);
    const double inner =
        cfg.inner_scheme == InnerScheme::gauss_hermite
            ? inner_gauss_hermite(cost, rho, x, y_star, eps, cfg, hermite,
                                  mod_weights)
            : inner_adaptive(cost, rho, x, y_star[0], eps, cfg);
    results[static_cast<std::size_t>(flat)] = w * inner;
  });
  return pairwise_sum(results);
}

EmpiricalFit fit_coefficients(std::span<const double> eps,
                              std::span<const double> values) {
  const std::size_t n = eps.size();
  if (values.size() != n)
    throw DomainError("fit: epsilon and value counts differ");
  if (n < 4) throw FitError("fit: need at least four epsilon samples");
  for (double e : eps)
    if (!(e > 0.0)) throw FitError("fit: epsilon values must be positive");
  const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
  if (*hi < 10.0 * *lo)
    throw FitError("fit: epsilon grid must span at least a decade");

  // Weighted least squares with weights eps^{-2}: scale rows by 1/eps, so
  // column j of the Vandermonde is eps^{j-1}.  Solved by modified
  // Gram-Schmidt with reorthogonalization; the normal equations would lose
  // half the digits at this conditioning.
  constexpr int kCols = 3;
  std::vector<std::array<double, kCols>> q(n);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = {1.0 / eps[i], 1.0, eps[i]};
    rhs[i] = values[i] / eps[i];
  }
  double r[kCols][kCols] = {};
  for (int j = 0; j < kCols; ++j) {
    double norm0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm0 += q[i][j] * q[i][j];
    norm0 = std::sqrt(norm0);
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += q[i][k] * q[i][j];
        r[k][j] += dot;
        for (std::size_t i = 0; i < n; ++i) q[i][j] -= dot * q[i][k];
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q[i][j] * q[i][j];
    norm = std::sqrt(norm);
    if (!(norm > 1e-12 * norm0)) throw FitError("fit: ill-conditioned grid");
    r[j][j] = norm;
    for (std::size_t i = 0; i < n; ++i) q[i][j] /= norm;
  }
  double c[kCols];
  for (int j = kCols - 1; j >= 0; --j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += q[i][j] * rhs[i];
    for (int k = j + 1; k < kCols; ++k) dot -= r[j][k] * c[k];
    c[j] = dot / r[j][j];
  }
  return {c[0], c[1], std::fabs(c[2])};
}

EmpiricalFit empirical_coeffs(const CostFunction& cost, const FieldXY& rho,
                              const OracleConfig& cfg) {
  cfg.validate();
  std::vector<double> values(cfg.eps_list.size());
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i)
    values[i] = integrate_full(cost, rho, cfg.eps_list[i], cfg);
  return fit_coefficients(cfg.eps_list, values);
}

double single_laplace_oracle(const FieldX& u, const FieldX& r,
                             std::array<double, 2> box, double x_seed,
                             double eps, const OracleConfig& cfg) {
  cfg.validate();
  if (!u || !r) throw DomainError("single oracle: empty field");
  if (u.d != 1 || r.d != 1)
    throw DomainError("single oracle: fields must be one-dimensional");
  const auto [a, b] = box;
  if (!(a < b)) throw DomainError("single oracle: box interval is empty");
  if (!(eps > 0.0))
    throw DomainError("single oracle: epsilon must be positive");
  if (!(x_seed >= a && x_seed <= b))
    throw DomainError("single oracle: seed lies outside the box");

  // Newton on u' = 0 from the seed.
  double xs = x_seed, h = 0.0;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const double pt[1] = {xs};
    const std::vector<Jet> seeds = Jet::seed_vars(pt, 2);
    const Jet j = u.jets(seeds);
    const double g = j.partial_vars({0});
    h = j.partial_vars({0, 0});
    if (!std::isfinite(g) || !std::isfinite(h))
      throw DomainError("single oracle: u is not finite along the Newton path");
    if (std::fabs(g) <= 1e-13 * std::max(1.0, std::fabs(h))) {
      converged = true;
      break;
    }
    if (h == 0.0)
      throw DomainError("single oracle: Newton hit a flat second derivative");
    xs -= g / h;
    if (xs < a - (b - a) || xs > b + (b - a))
      throw DomainError("single oracle: Newton left the box");
  }
  if (!converged)
    throw DomainError("single oracle: Newton did not locate a minimum");
  const double margin = 1e-8 * (b - a);
  if (xs <= a + margin || xs >= b - margin)
    throw DomainError("single oracle: minimizer is not interior");
  if (!(h > 0.0))
    throw MetricSignatureError(
        "single oracle: u'' is not positive at the minimizer");

  const double pref = 1.0 / std::sqrt(2.0 * std::numbers::pi * eps);
  auto f = [&](double xv) {
    const double pt[1] = {xv};
    try {
      const double uval = u.value(pt);
      const double rval = r.value(pt);
      if (!std::isfinite(uval) || !std::isfinite(rval)) return 0.0;
      return pref * std::exp(-uval / eps) * rval;
    } catch (const DomainError&) {
      return 0.0;  // outside u's domain of definition
    }
  };
  return integrate_adaptive(f, a, xs, 0.5 * cfg.adaptive_tol) +
         integrate_adaptive(f, xs, b, 0.5 * cfg.adaptive_tol);
}

AssumptionAudit audit_assumptions(const CostFunction& cost,
                                  const OracleConfig& cfg) {
  cfg.validate();
  if (!cost.u) throw DomainError("audit: cost has no u field");
  const int d = cost.d;
  const auto& dom = cost.domain;
  if (static_cast<int>(dom.x_box.size()) != d)
    throw DomainError("audit: cost has no usable x-box");
  const double delta = dom.tubular_radius;
  const double lambda = dom.convexity_lambda;
  if (!(delta > 0.0) || !(lambda > 0.0))
    throw DomainError("audit: cost has no tube radius or lambda");

  // Deterministic direction set: all sign patterns in {-1,0,1}^d, normalized.
  std::vector<std::vector<double>> dirs;
  std::vector<int> s(d, -1);
  for (;;) {
    double norm = 0.0;
    for (int a = 0; a < d; ++a) norm += s[a] * s[a];
    if (norm > 0.0) {
      std::vector<double> v(d);
      for (int a = 0; a < d; ++a) v[a] = s[a] / std::sqrt(norm);
      dirs.push_back(std::move(v));
    }
    int a = 0;
    while (a < d && s[a] == 1) s[a++] = -1;
    if (a == d) break;
    ++s[a];
  }

  AssumptionAudit audit;
  double worst_tube = 0.0, worst_out = 0.0;
  constexpr int kXGrid = 9, kRadii = 8, kYGrid = 7;
  std::vector<int> xi(d, 0);
  std::vector<double> x(d), y_pt(d);
  for (;;) {
    for (int a = 0; a < d; ++a) {
      const auto [lo, hi] = dom.x_box[a];
      x[a] = lo + (hi - lo) * (xi[a] + 0.5) / kXGrid;
    }
    const std::vector<double> y_star = solve_graph(cost, x);

    auto record = [&](double z2, double& worst) {
      double uval = 0.0;
      try {
        uval = cost.u.value(x, y_pt);
      } catch (const DomainError&) {
        return;  // sample outside u's domain of definition
      }
      if (!std::isfinite(uval)) return;
      worst = std::max(worst, 0.5 * lambda * z2 - uval);
      audit.empirical_lambda =
          std::min(audit.empirical_lambda, 2.0 * uval / z2);
      ++audit.samples;
    };

    // Tube sweep: radial samples up to delta in every direction.
    for (const auto& v : dirs)
      for (int j = 1; j <= kRadii; ++j) {
        const double rad = delta * j / kRadii;
        for (int m = 0; m < d; ++m) y_pt[m] = y_star[m] + rad * v[m];
        record(rad * rad, worst_tube);
      }

    // Outside sweep: y-box grid points beyond the tube (skipped without a
    // y-box).
    if (dom.y_box && static_cast<int>(dom.y_box->size()) == d) {
      std::vector<int> yi(d, 0);
      for (;;) {
        double z2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const auto [lo, hi] = (*dom.y_box)[a];
          y_pt[a] = lo + (hi - lo) * (yi[a] + 0.5) / kYGrid;
          z2 += (y_pt[a] - y_star[a]) * (y_pt[a] - y_star[a]);
        }
        if (z2 > delta * delta) record(z2, worst_out);
        int a = 0;
        while (a < d && yi[a] == kYGrid - 1) yi[a++] = 0;
        if (a == d) break;
        ++yi[a];
      }
    }

    int a = 0;
    while (a < d && xi[a] == kXGrid - 1) xi[a++] = 0;
    if (a == d) break;
    ++xi[a];
  }
  audit.max_violation_tube = std::max(0.0, worst_tube);
  audit.max_violation_outside = std::max(0.0, worst_out);
  return audit;
}

}  // namespace geolap
