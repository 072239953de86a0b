#include "geolap/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "geolap/errors.hpp"
#include "geolap/linalg.hpp"
#include "geolap/parallel.hpp"
#include "geolap/quadrature.hpp"

namespace geolap {
namespace {

bool mentions_y(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::constant:
      return false;
    case ExprNode::Kind::var:
      return n.var_kind == ExprNode::VarKind::y;
    case ExprNode::Kind::neg:
    case ExprNode::Kind::call:
      return mentions_y(*n.lhs);
    case ExprNode::Kind::binary:
      return mentions_y(*n.lhs) || mentions_y(*n.rhs);
  }
  return false;
}

// Solve the surface point at a quadrature node, tagging any graph failure
// with the node's location so a bad run is actionable.
SigmaPoint solve_node(const CostFunction& cost, std::span<const double> x,
                      const char* where, std::span<const int> idx) {
  try {
    return sigma_point(cost, x, 4);
  } catch (const GraphSolveError& e) {
    std::ostringstream os;
    os << e.what() << " [expand: " << where << " node (";
    for (std::size_t k = 0; k < idx.size(); ++k)
      os << (k ? "," : "") << idx[k];
    os << ") at x = (";
    for (std::size_t k = 0; k < x.size(); ++k)
      os << (k ? "," : "") << x[k];
    os << ")]";
    throw GraphSolveError(os.str());
  }
}

// (1/4) g(W, nu) for the outward g-unit conormal of the face x_axis = const:
// nu = side * g^{-1} e_axis / sqrt(g^{axis axis}), so the pairing collapses
// to the contravariant component of W.
double conormal_pairing(const GeometryReport& rep, const IntegrandPoint& ip,
                        int axis, int side) {
  return 0.25 * side * ip.W_up.at({axis}) /
         std::sqrt(rep.g_inv.at({axis, axis}));
}

// sqrt(det) of the metric restricted to a coordinate face (row and column
// `axis` deleted): the induced (d-1)-volume density.
double face_density(const Tensor& g, int axis) {
  const int d = g.d();
  if (d == 1) return 1.0;
  std::vector<double> minor;
  minor.reserve(static_cast<std::size_t>(d - 1) * (d - 1));
  for (int i = 0; i < d; ++i) {
    if (i == axis) continue;
    for (int j = 0; j < d; ++j) {
      if (j == axis) continue;
      minor.push_back(g.at({i, j}));
    }
  }
  return std::sqrt(det_dense(std::move(minor), d - 1));
}

double isserlis_rec(const Tensor& cov, std::vector<int> idx, double eps) {
  if (idx.empty()) return 1.0;
  const int i0 = idx[0];
  double total = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    std::vector<int> rest;
    rest.reserve(idx.size() - 2);
    for (std::size_t j = 1; j < idx.size(); ++j)
      if (j != k) rest.push_back(idx[j]);
    total += eps * cov.at({i0, idx[k]}) * isserlis_rec(cov, std::move(rest), eps);
  }
  return total;
}

void check_taylor_args(int d, int n, int k, const char* who) {
  if (d < 1 || n < 0 || k < 0)
    throw DomainError(std::string(who) + ": need d >= 1, n >= 0, k >= 0");
  if (k + n + d - 2 < 0)
    throw DomainError(std::string(who) + ": divergent integral (k+n+d-2 < 0)");
}

}  // namespace

FieldX field_x_from_expr(const Expr& e) {
  if (e.empty()) throw DomainError("field_x_from_expr: empty expression");
  if (mentions_y(e.root()))
    throw DomainError("field_x_from_expr: expression depends on y");
  const int d = e.dim();
  FieldX f;
  f.d = d;
  f.value = [e, d](std::span<const double> x) {
    const std::vector<double> y_dummy(d, 0.0);
    return e.eval(x, y_dummy);
  };
  f.jets = [e, d](std::span<const Jet> x) {
    const std::vector<Jet> y_dummy(
        d, Jet::constant(0.0, x[0].num_vars(), x[0].order(), x[0].base()));
    return e.eval_jet(x, y_dummy);
  };
  return f;
}

FieldX freeze_y(const FieldXY& f, std::vector<double> y) {
  if (!f) throw DomainError("freeze_y: empty field");
  if (static_cast<int>(y.size()) != f.d)
    throw DomainError("freeze_y: y has wrong dimension");
  FieldX g;
  g.d = f.d;
  g.value = [f, y](std::span<const double> x) { return f.value(x, y); };
  g.jets = [f, y](std::span<const Jet> x) {
    std::vector<Jet> y_jets;
    y_jets.reserve(y.size());
    for (double v : y)
      y_jets.push_back(
          Jet::constant(v, x[0].num_vars(), x[0].order(), x[0].base()));
    return f.jets(x, y_jets);
  };
  return g;
}

FieldXY swap_roles(const FieldXY& f) {
  if (!f) throw DomainError("swap_roles: empty field");
  FieldXY g;
  g.d = f.d;
  g.value = [f](std::span<const double> x, std::span<const double> y) {
    return f.value(y, x);
  };
  g.jets = [f](std::span<const Jet> x, std::span<const Jet> y) {
    return f.jets(y, x);
  };
  return g;
}

LaplaceCoefficients coord_first_order(const FieldX& u, const FieldX& r,
                                      std::span<const double> x_star) {
  const int d = u.d;
  if (d < 1 || r.d != d || static_cast<int>(x_star.size()) != d)
    throw DomainError("coord_first_order: dimension mismatch");

  const auto seeds = Jet::seed_vars(x_star, 4);
  const Jet U = u.jets(seeds);
  const Jet R = r.jets(seeds);

  double grad_max = 0.0;
  for (int i = 0; i < d; ++i)
    grad_max = std::max(grad_max, std::abs(U.partial_vars({i})));
  if (grad_max > 1e-6) {
    std::ostringstream os;
    os << "coord_first_order: x_star is not a critical point of u "
          "(max |grad| = "
       << grad_max << ")";
    throw DomainError(os.str());
  }

  std::vector<double> hess(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) hess[i * d + j] = U.partial_vars({i, j});
  if (!is_pd(hess, d))
    throw MetricSignatureError(
        "coord_first_order: Hessian of u at x_star is not positive definite");
  const std::vector<double> B = invert_dense(hess, d);
  const double root_det = std::sqrt(det_dense(hess, d));

  const double r0 = R.value();
  std::vector<double> r1(d), r2(static_cast<std::size_t>(d) * d);
  std::vector<double> u3(static_cast<std::size_t>(d) * d * d);
  std::vector<double> u4(static_cast<std::size_t>(d) * d * d * d);
  for (int i = 0; i < d; ++i) {
    r1[i] = R.partial_vars({i});
    for (int j = 0; j < d; ++j) {
      r2[i * d + j] = R.partial_vars({i, j});
      for (int k = 0; k < d; ++k) {
        u3[(i * d + j) * d + k] = U.partial_vars({i, j, k});
        for (int l = 0; l < d; ++l)
          u4[((i * d + j) * d + k) * d + l] = U.partial_vars({i, j, k, l});
      }
    }
  }

  LaplaceCoefficients out;
  out.c0 = r0 / root_det;
  out.c1 = laplace_c1(d, B, r0, r1, r2, u3, u4) / root_det;
  return out;
}

double isserlis_moment(const Tensor& cov, std::span<const int> indices,
                       double eps) {
  if (cov.rank() != 2)
    throw DomainError("isserlis_moment: covariance must have rank 2");
  for (int i : indices)
    if (i < 0 || i >= cov.d())
      throw DomainError("isserlis_moment: index out of range");
  if (indices.size() % 2 != 0) return 0.0;
  return isserlis_rec(cov, {indices.begin(), indices.end()}, eps);
}

double isserlis_moment(const Tensor& cov, std::initializer_list<int> indices,
                       double eps) {
  return isserlis_moment(cov, std::span<const int>(indices.begin(),
                                                   indices.size()),
                         eps);
}

double geometric_interior_integrand(const FieldXY& rho, const SigmaPoint& sp) {
  return integrand_point(sp, rho).L_geom;
}

double coordinate_interior_integrand(const FieldXY& rho,
                                     const SigmaPoint& sp) {
  return integrand_point(sp, rho).L_coord;
}

double boundary_integrand(const FieldXY& rho, const SigmaPoint& sp, int axis,
                          int side) {
  if (axis < 0 || axis >= sp.d)
    throw DomainError("boundary_integrand: axis out of range");
  if (side != 1 && side != -1)
    throw DomainError("boundary_integrand: side must be +1 or -1");
  const GeometryReport rep = geometry_report(sp);
  const IntegrandPoint ip = integrand_point(sp, rho);
  return conormal_pairing(rep, ip, axis, side);
}

ExpansionResult expand(const CostFunction& cost, const FieldXY& rho,
                       const QuadratureSpec& quad) {
  const int d = cost.d;
  if (!rho || rho.d != d) throw DomainError("expand: density dimension mismatch");
  if (quad.interior_nodes < 2 || quad.boundary_nodes < 2)
    throw DomainError("expand: need at least two nodes per axis");
  if (static_cast<int>(cost.domain.x_box.size()) != d)
    throw DomainError("expand: x_box dimension mismatch");
  for (const auto& iv : cost.domain.x_box)
    if (!(iv[0] < iv[1])) throw DomainError("expand: empty x_box interval");

  ExpansionResult out;
  out.interior_nodes = quad.interior_nodes;
  out.boundary_nodes = quad.boundary_nodes;
  out.x_box = cost.domain.x_box;

  // Interior: tensor-product Gauss-Legendre grid, axis 0 slowest.
  const int n = quad.interior_nodes;
  std::vector<Rule1D> rules;
  rules.reserve(d);
  for (int a = 0; a < d; ++a)
    rules.push_back(legendre_on(cost.domain.x_box[a][0],
                                cost.domain.x_box[a][1], n));
  int total = 1;
  for (int a = 0; a < d; ++a) total *= n;

  out.samples.resize(total);
  std::vector<double> term0(total), term1(total);
  for_each_index(total, [&](int flat) {
    std::vector<int> idx(d);
    int rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % n;
      rem /= n;
    }
    std::vector<double> x(d);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      x[a] = rules[a].nodes[idx[a]];
      w *= rules[a].weights[idx[a]];
    }
    const SigmaPoint sp = solve_node(cost, x, "interior", idx);
    const IntegrandPoint ip = integrand_point(sp, rho);
    term0[flat] = w * ip.f * ip.m;
    term1[flat] = w * ip.L_geom * ip.m;
    out.samples[flat] = {std::move(x), ip.m, ip.f, ip.L_geom, ip.L_coord};
  });
  out.I0 = pairwise_sum(term0);
  out.I1_interior = pairwise_sum(term1);

  // Boundary: one face per (axis, side), integrated with the induced
  // (d-1)-volume.  In one dimension each face is a single point.
  const int nb = quad.boundary_nodes;
  int face_total = 1;
  for (int a = 0; a < d - 1; ++a) face_total *= nb;
  std::vector<double> face_sums;
  face_sums.reserve(2 * d);
  for (int axis = 0; axis < d; ++axis) {
    for (int side : {-1, +1}) {
      const double x_face =
          cost.domain.x_box[axis][side < 0 ? 0 : 1];
      std::vector<Rule1D> face_rules;
      std::vector<int> free_axes;
      for (int a = 0; a < d; ++a) {
        if (a == axis) continue;
        free_axes.push_back(a);
        face_rules.push_back(legendre_on(cost.domain.x_box[a][0],
                                         cost.domain.x_box[a][1], nb));
      }
      std::vector<double> contrib(face_total);
      for_each_index(face_total, [&](int flat) {
        std::vector<int> idx(d - 1);
        int rem = flat;
        for (int a = d - 2; a >= 0; --a) {
          idx[a] = rem % nb;
          rem /= nb;
        }
        std::vector<double> x(d);
        x[axis] = x_face;
        double w = 1.0;
        for (std::size_t a = 0; a < free_axes.size(); ++a) {
          x[free_axes[a]] = face_rules[a].nodes[idx[a]];
          w *= face_rules[a].weights[idx[a]];
        }
        const SigmaPoint sp = solve_node(cost, x, "boundary", idx);
        const GeometryReport rep = geometry_report(sp);
        const IntegrandPoint ip = integrand_point(sp, rho);
        contrib[flat] = w * conormal_pairing(rep, ip, axis, side) *
                        face_density(rep.g, axis);
      });
      face_sums.push_back(pairwise_sum(contrib));
    }
  }
  out.I1_boundary = pairwise_sum(face_sums);
  out.I1_total = out.I1_interior + out.I1_boundary;
  return out;
}

double remainder_kernel(std::span<const double> z, double tau) {
  if (!(tau > 0.0)) throw DomainError("remainder_kernel: tau must be positive");
  const int d = static_cast<int>(z.size());
  if (d < 1) throw DomainError("remainder_kernel: empty argument");
  double r2 = 0.0;
  for (double v : z) r2 += v * v;
  const double r = std::sqrt(r2);
  if (r == 0.0 && d >= 2) return std::numeric_limits<double>::infinity();
  return std::pow(tau, -0.5 * d) * std::exp(-r2 / (4.0 * tau)) /
         std::pow(r / std::sqrt(tau), d - 1);
}

double taylor_constant(int d, int n, int k) {
  check_taylor_args(d, n, k, "taylor_constant");
  const int m = k + n + d - 2;
  // Cut where s^m e^{-s^2/4} has decayed past 1e-300, then integrate
  // adaptively with an absolute tolerance scaled to the integrand's peak.
  double cut = 8.0 + 2.0 * std::sqrt(static_cast<double>(m));
  while (m * std::log(cut) - cut * cut / 4.0 > -800.0) cut *= 1.5;
  const double peak =
      m > 0 ? std::pow(2.0 * m, 0.5 * m) * std::exp(-0.5 * m) : 1.0;
  const double tol = 1e-13 * peak * cut;
  const double raw = integrate_adaptive(
      [m](double s) { return std::pow(s, m) * std::exp(-s * s / 4.0); }, 0.0,
      cut, tol);
  return raw / std::pow(2.0 * std::numbers::pi, 0.5 * d);
}

double taylor_constant_closed(int d, int n, int k) {
  check_taylor_args(d, n, k, "taylor_constant_closed");
  const int m = k + n + d - 2;
  return std::pow(2.0, m) * std::tgamma(0.5 * (m + 1)) /
         std::pow(2.0 * std::numbers::pi, 0.5 * d);
}

}  // namespace geolap
