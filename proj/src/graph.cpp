#include "geolap/graph.hpp"

#include <cmath>
#include <utility>

#include "geolap/errors.hpp"
#include "geolap/linalg.hpp"

namespace geolap {
namespace {

// Order-2 ambient jet of u at (x, y): value, y-gradient, y-Hessian.
struct LocalQuadratic {
  double u = 0.0;
  std::vector<double> grad;  // du/dy_i
  std::vector<double> hess;  // d^2u/dy_i dy_j, row-major
};

LocalQuadratic probe(const CostFunction& cost, std::span<const double> x,
                     std::span<const double> y) {
  const int d = cost.d;
  std::vector<double> xy(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  auto seeds = Jet::seed_vars(xy, 2);
  const Jet U = cost.u.jets({seeds.data(), static_cast<std::size_t>(d)},
                            {seeds.data() + d, static_cast<std::size_t>(d)});
  LocalQuadratic q;
  q.u = U.value();
  q.grad.resize(d);
  q.hess.resize(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    q.grad[i] = U.partial_vars({d + i});
    for (int j = 0; j < d; ++j) q.hess[i * d + j] = U.partial_vars({d + i, d + j});
  }
  return q;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double t : v) m = std::max(m, std::fabs(t));
  return m;
}

double norm_2(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> solve_graph(const CostFunction& cost,
                                std::span<const double> x,
                                std::optional<std::vector<double>> y0,
                                double tol, int max_iter) {
  const int d = cost.d;
  std::vector<double> y = y0 ? std::move(*y0) : cost.y_guess(x);
  if (static_cast<int>(y.size()) != d)
    throw GraphSolveError("starting point has wrong dimension");

  LocalQuadratic q = probe(cost, x, y);
  double rn = norm_2(q.grad);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (norm_inf(q.grad) <= tol) break;
    const auto step = solve_dense(q.hess, q.grad, d);
    double t = 1.0;
    std::vector<double> trial(d);
    while (true) {
      for (int i = 0; i < d; ++i) trial[i] = y[i] - t * step[i];
      bool ok = true;
      LocalQuadratic qt;
      double rtn = 0.0;
      try {
        qt = probe(cost, x, trial);
        rtn = norm_2(qt.grad);
      } catch (const DomainError&) {
        ok = false;  // stepped outside the cost's domain; shorten
      }
      if (ok && (rtn <= (1.0 - 0.25 * t) * rn || rtn <= tol)) {
        y = trial;
        q = std::move(qt);
        rn = rtn;
        break;
      }
      t *= 0.5;
      if (t < 1e-8) throw GraphSolveError("graph solve stalled");
    }
  }
  if (norm_inf(q.grad) > tol)
    throw GraphSolveError("graph solve did not converge");
  if (!(q.u <= tol))
    throw GraphSolveError("u does not vanish at the stationary point");
  if (!is_pd(q.hess, d))
    throw GraphSolveError("y-Hessian of u is not positive definite on Sigma");
  return y;
}

SigmaPoint graph_jets(const CostFunction& cost, std::span<const double> x,
                      std::span<const double> y, int order) {
  const int d = cost.d;
  if (order < 2) throw DomainError("graph_jets needs jet order >= 2");

  SigmaPoint sp;
  sp.d = d;
  sp.x.assign(x.begin(), x.end());
  sp.y.assign(y.begin(), y.end());

  std::vector<double> xy(sp.x);
  xy.insert(xy.end(), sp.y.begin(), sp.y.end());
  auto seeds = Jet::seed_vars(xy, order);
  sp.u_jets = cost.u.jets({seeds.data(), static_cast<std::size_t>(d)},
                          {seeds.data() + d, static_cast<std::size_t>(d)});
  const Jet& U = sp.u_jets;

  for (int i = 0; i < d; ++i)
    sp.graph_residual =
        std::max(sp.graph_residual, std::fabs(U.partial_vars({d + i})));
  if (sp.graph_residual > 1e-6)
    throw GraphSolveError("graph_jets: point is not on Sigma");

  // Non-degeneracy of the mixed Hessian, scaled by a Hadamard-style bound.
  std::vector<double> c(static_cast<std::size_t>(d) * d);
  double scale = 1.0;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      c[i * d + j] = U.partial_vars({i, d + j});
      row = std::max(row, std::fabs(c[i * d + j]));
    }
    scale *= row;
  }
  if (std::fabs(det_dense(c, d)) <= 1e-12 * std::max(scale, 1e-300))
    throw NonDegeneracyError("mixed Hessian c_{ij} is singular on Sigma");

  // Implicit differentiation of du/dy_i (x, y(x)) = 0.  The residual jets
  // come from composing the ambient derivative polynomials, so one ambient
  // jet serves every order of the solve.
  std::vector<Jet> dus;
  dus.reserve(d);
  for (int i = 0; i < d; ++i) dus.push_back(U.deriv(d + i));
  auto G = [&dus, d](std::span<const Jet> w,
                     std::span<const Jet> p) -> std::vector<Jet> {
    std::vector<Jet> args(p.begin(), p.end());
    args.insert(args.end(), w.begin(), w.end());
    std::vector<Jet> out;
    out.reserve(d);
    for (int i = 0; i < d; ++i) out.push_back(dus[i].composed_at(args));
    return out;
  };
  std::vector<double> uyy(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) uyy[i * d + j] = U.partial_vars({d + i, d + j});
  sp.y_jets = implicit_jet_solve(G, sp.y, sp.x, order - 1, uyy);

  sp.dy.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m) sp.dy[i * d + m] = sp.y_jets[m].partial_vars({i});
  if (order >= 3) {
    sp.d2y.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int m = 0; m < d; ++m)
          sp.d2y[(i * d + j) * d + m] = sp.y_jets[m].partial_vars({i, j});
  }
  if (order >= 4) {
    sp.d3y.assign(static_cast<std::size_t>(d) * d * d * d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int m = 0; m < d; ++m)
            sp.d3y[((i * d + j) * d + k) * d + m] =
                sp.y_jets[m].partial_vars({i, j, k});
  }
  return sp;
}

SigmaPoint sigma_point(const CostFunction& cost, std::span<const double> x,
                       int order) {
  const auto y = solve_graph(cost, x);
  return graph_jets(cost, x, y, order);
}

}  // namespace geolap
