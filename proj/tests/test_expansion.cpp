#include "geolap/expansion.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "geolap/cost.hpp"
#include "geolap/errors.hpp"
#include "geolap/expr.hpp"
#include "geolap/graph.hpp"
#include "geolap/linalg.hpp"
#include "geolap/quadrature.hpp"

using namespace geolap;

namespace {

DomainSpec box_domain(int d, double lo, double hi, double ylo, double yhi,
                      double delta = 1.0, double lambda = 1.0) {
  DomainSpec dom;
  dom.x_box.assign(static_cast<std::size_t>(d), {lo, hi});
  dom.y_box.emplace(static_cast<std::size_t>(d),
                    std::array<double, 2>{ylo, yhi});
  dom.tubular_radius = delta;
  dom.convexity_lambda = lambda;
  return dom;
}

FieldXY parse_field(const char* src, int d) {
  return field_from_expr(Expr::parse(src, d));
}

FieldX parse_field_x(const char* src, int d) {
  return field_x_from_expr(Expr::parse(src, d));
}

// The first-order coefficient integrated in the coordinate picture:
// int L_coord dm over the x-box, on a quadrature grid decoupled from the
// one expand() uses.
double coordinate_route(const CostFunction& cf, const FieldXY& rho, int n) {
  const int d = cf.d;
  std::vector<Rule1D> rules;
  for (int a = 0; a < d; ++a)
    rules.push_back(legendre_on(cf.domain.x_box[static_cast<std::size_t>(a)][0],
                                cf.domain.x_box[static_cast<std::size_t>(a)][1],
                                n));
  int total = 1;
  for (int a = 0; a < d; ++a) total *= n;
  double acc = 0.0;
  for (int flat = 0; flat < total; ++flat) {
    std::vector<int> idx(static_cast<std::size_t>(d));
    int rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = rem % n;
      rem /= n;
    }
    std::vector<double> x(static_cast<std::size_t>(d));
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      x[static_cast<std::size_t>(a)] =
          rules[static_cast<std::size_t>(a)].nodes[static_cast<std::size_t>(
              idx[static_cast<std::size_t>(a)])];
      w *= rules[static_cast<std::size_t>(a)].weights[static_cast<std::size_t>(
          idx[static_cast<std::size_t>(a)])];
    }
    const auto sp = sigma_point(cf, x);
    const auto ip = integrand_point(sp, rho);
    acc += w * ip.L_coord * ip.m;
  }
  return acc;
}

// Gauss-Hermite evaluation of E[z_{i1}...z_{ik}] for z ~ N(0, eps * cov):
// z = sqrt(2 eps) L s against the weight e^{-|s|^2} / pi^{d/2}.
double moment_by_quadrature(const std::vector<double>& cov, int d,
                            std::span<const int> indices, double eps) {
  const auto L = cholesky_lower(cov, d);
  const auto& rule = gauss_hermite(20);
  const int n = static_cast<int>(rule.nodes.size());
  int total = 1;
  for (int a = 0; a < d; ++a) total *= n;
  const double scale = std::sqrt(2.0 * eps);
  double acc = 0.0;
  for (int flat = 0; flat < total; ++flat) {
    std::vector<double> s(static_cast<std::size_t>(d));
    double w = 1.0;
    int rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      const int ia = rem % n;
      rem /= n;
      s[static_cast<std::size_t>(a)] = rule.nodes[static_cast<std::size_t>(ia)];
      w *= rule.weights[static_cast<std::size_t>(ia)];
    }
    std::vector<double> z(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j)
        z[static_cast<std::size_t>(i)] +=
            scale * L[static_cast<std::size_t>(i * d + j)] *
            s[static_cast<std::size_t>(j)];
    double prod = 1.0;
    for (int i : indices) prod *= z[static_cast<std::size_t>(i)];
    acc += w * prod;
  }
  return acc / std::pow(std::numbers::pi, 0.5 * d);
}

}  // namespace

TEST_CASE("field_x_from_expr evaluates both paths and rejects y") {
  const auto f = parse_field_x("x1^2 + 1", 1);
  const std::vector<double> x{0.5};
  CHECK(f.value(x) == doctest::Approx(1.25).epsilon(1e-15));

  const auto seeds = Jet::seed_vars(x, 3);
  const Jet j = f.jets(seeds);
  CHECK(j.value() == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(j.partial_vars({0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j.partial_vars({0, 0}) == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(field_x_from_expr(Expr::parse("x1 + y1", 1)), DomainError);
  CHECK_THROWS_AS(field_x_from_expr(Expr::parse("cosh(y2)", 2)), DomainError);
  CHECK_THROWS_AS(field_x_from_expr(Expr()), DomainError);
}

TEST_CASE("freeze_y slices and swap_roles transposes a field") {
  const auto f = parse_field("x1^2 + 2*y1", 1);

  const auto frozen = freeze_y(f, {3.0});
  const std::vector<double> x{0.5};
  CHECK(frozen.value(x) == doctest::Approx(6.25).epsilon(1e-15));
  const auto seeds = Jet::seed_vars(x, 2);
  CHECK(frozen.jets(seeds).partial_vars({0}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(freeze_y(f, {1.0, 2.0}), DomainError);

  const auto g = swap_roles(parse_field("x1 + 2*y1", 1));
  const std::vector<double> a{1.0}, b{2.0};
  CHECK(g.value(a, b) == doctest::Approx(4.0).epsilon(1e-15));  // f(2, 1)
}

TEST_CASE("coord_first_order matches hand Laplace coefficients") {
  const std::vector<double> origin{0.0};

  // Pure quadratic phase: c1 = (1/2) B r'' = 1.
  auto c = coord_first_order(parse_field_x("x1^2/2", 1),
                             parse_field_x("1 + x1^2", 1), origin);
  CHECK(c.c0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c.c1 == doctest::Approx(1.0).epsilon(1e-13));

  // cosh: only the quartic term survives, c1 = -1/8.
  c = coord_first_order(parse_field_x("cosh(x1) - 1", 1),
                        parse_field_x("1", 1), origin);
  CHECK(c.c0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c.c1 == doctest::Approx(-0.125).epsilon(1e-13));

  // Cubic phase: the two third-derivative contractions give 1/8 + 1/12.
  c = coord_first_order(parse_field_x("x1^2/2 + x1^3/6", 1),
                        parse_field_x("1", 1), origin);
  CHECK(c.c1 == doctest::Approx(5.0 / 24.0).epsilon(1e-13));

  // Shifted minimum, r vanishing nowhere near symmetric: c1 = 0 because u
  // is quadratic and r is linear.
  const std::vector<double> half{0.5};
  c = coord_first_order(parse_field_x("(x1 - 0.5)^2/2", 1),
                        parse_field_x("x1", 1), half);
  CHECK(c.c0 == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::abs(c.c1) < 1e-13);

  // Two dimensions, quadratic phase H = [[1, .2], [.2, 2]]: det H = 1.96,
  // kernel (1/2) B^{ij} r_ij = (2 B11 + 6 B12)/2 = 1.4/1.96, so c0 = 5/7
  // and c1 = (1.4/1.96)/1.4 = 25/49.
  const std::vector<double> origin2{0.0, 0.0};
  c = coord_first_order(
      parse_field_x("x1^2/2 + x2^2 + 0.2*x1*x2", 2),
      parse_field_x("1 + x1^2 + 3*x1*x2", 2), origin2);
  CHECK(c.c0 == doctest::Approx(5.0 / 7.0).epsilon(1e-13));
  CHECK(c.c1 == doctest::Approx(25.0 / 49.0).epsilon(1e-13));

  CHECK_THROWS_AS(coord_first_order(parse_field_x("x1^2/2", 1),
                                    parse_field_x("1", 1),
                                    std::vector<double>{0.5}),
                  DomainError);
  CHECK_THROWS_AS(coord_first_order(parse_field_x("-x1^2", 1),
                                    parse_field_x("1", 1), origin),
                  MetricSignatureError);
  CHECK_THROWS_AS(coord_first_order(parse_field_x("x1^2/2", 1),
                                    parse_field_x("1", 2), origin),
                  DomainError);
}

TEST_CASE("isserlis moments: closed forms and parity") {
  Tensor cov(2, 2);
  cov.at({0, 0}) = 1.3;
  cov.at({0, 1}) = 0.4;
  cov.at({1, 0}) = 0.4;
  cov.at({1, 1}) = 0.7;
  const double eps = 0.01;

  CHECK(isserlis_moment(cov, {}, eps) == doctest::Approx(1.0));
  CHECK(isserlis_moment(cov, {0}, eps) == 0.0);
  CHECK(isserlis_moment(cov, {0, 1, 1}, eps) == 0.0);
  CHECK(isserlis_moment(cov, {0, 1}, eps) ==
        doctest::Approx(eps * 0.4).epsilon(1e-15));
  CHECK(isserlis_moment(cov, {0, 0, 1, 1}, eps) ==
        doctest::Approx(eps * eps * (1.3 * 0.7 + 2 * 0.4 * 0.4))
            .epsilon(1e-14));
  CHECK(isserlis_moment(cov, {0, 0, 0, 0}, eps) ==
        doctest::Approx(3.0 * eps * eps * 1.3 * 1.3).epsilon(1e-14));
  CHECK(isserlis_moment(cov, {0, 0, 0, 0, 0, 0}, eps) ==
        doctest::Approx(15.0 * std::pow(eps * 1.3, 3)).epsilon(1e-14));

  CHECK_THROWS_AS(isserlis_moment(cov, {0, 2}, eps), DomainError);
  CHECK_THROWS_AS(isserlis_moment(Tensor(2, 3), {0, 1}, eps), DomainError);
}

TEST_CASE("isserlis moments agree with Gauss-Hermite quadrature") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const double eps = 0.05;

  for (int d : {1, 2, 3}) {
    // Random SPD covariance M M^T + I/2.
    std::vector<double> covm(static_cast<std::size_t>(d) * d, 0.0);
    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    for (auto& v : mat) v = entry(rng);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = (i == j) ? 0.5 : 0.0;
        for (int k = 0; k < d; ++k)
          s += mat[static_cast<std::size_t>(i * d + k)] *
               mat[static_cast<std::size_t>(j * d + k)];
        covm[static_cast<std::size_t>(i * d + j)] = s;
      }
    Tensor cov(d, 2);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        cov.at({i, j}) = covm[static_cast<std::size_t>(i * d + j)];

    std::uniform_int_distribution<int> pick(0, d - 1);
    for (int order = 1; order <= 6; ++order) {
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<int> idx(static_cast<std::size_t>(order));
        for (auto& i : idx) i = pick(rng);
        const double lhs = isserlis_moment(cov, idx, eps);
        const double rhs = moment_by_quadrature(covm, d, idx, eps);
        if (order % 2 == 1) {
          CHECK(lhs == 0.0);
          CHECK(std::abs(rhs) < 1e-12);
        } else {
          CHECK(lhs ==
                doctest::Approx(rhs).epsilon(1e-9).scale(std::abs(lhs) + 1.0));
        }
      }
    }
  }
}

TEST_CASE("expand reproduces flat and translation closed forms") {
  // Quadratic cost, unit density: the surface is the diagonal with unit
  // density and every first-order term vanishes.
  const auto quad = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
  auto res = expand(quad, parse_field("1", 1));
  CHECK(res.I0 == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(std::abs(res.I1_interior) < 1e-12);
  CHECK(std::abs(res.I1_boundary) < 1e-12);
  CHECK(res.samples.size() == 32);
  CHECK(res.interior_nodes == 32);
  for (const auto& s : res.samples) {
    CHECK(s.m == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.f == doctest::Approx(1.0).epsilon(1e-12));
  }

  // cosh translation: L_geom = L_coord = -1/8 along the surface and the
  // boundary field vanishes.
  const auto tr = make_translation(Expr::parse("cosh(x1) - 1", 1), 1,
                                   box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
  res = expand(tr, parse_field("1", 1));
  CHECK(res.I0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.I1_interior == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(std::abs(res.I1_boundary) < 1e-12);
  CHECK(res.I1_total == doctest::Approx(-0.25).epsilon(1e-12));

  // Coupled two-dimensional translation: the geometry is constant along
  // the diagonal, so small node counts are already exact.
  const auto tr2 = make_translation(
      Expr::parse("cosh(x1) + cosh(x2) - 2 + 0.1*x1^2*x2^2", 2), 2,
      box_domain(2, -1, 1, -3, 3, 2.0, 1.0));
  res = expand(tr2, parse_field("1", 2), {8, 8});
  CHECK(res.I0 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(res.I1_interior == doctest::Approx(-1.4).epsilon(1e-11));
  CHECK(std::abs(res.I1_boundary) < 1e-11);
  CHECK(res.I1_total == doctest::Approx(-1.4).epsilon(1e-11));
  CHECK(res.samples.size() == 64);
}

TEST_CASE("expand boundary term closes the divergence identity") {
  // Quadratic cost with rho = (1 + x) y^2.  On the diagonal f = (1+x) x^2,
  // L_coord = 1 + x, L_geom = -x, and W = (4x + 4x^2) d/dx, so the interior
  // term integrates to zero while the boundary term carries all of
  // int L_coord dm = 2: the x = 1 face contributes W(1)/4 = 2, the x = -1
  // face W(-1)/4 = 0.
  const auto quad = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
  const auto rho = parse_field("(1 + x1)*y1^2", 1);

  const auto res = expand(quad, rho);
  CHECK(res.I0 == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(std::abs(res.I1_interior) < 1e-12);
  CHECK(res.I1_boundary == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(res.I1_total == doctest::Approx(2.0).epsilon(1e-13));

  const auto sp_hi = sigma_point(quad, std::vector<double>{1.0});
  CHECK(boundary_integrand(rho, sp_hi, 0, +1) ==
        doctest::Approx(2.0).epsilon(1e-13));
  const auto sp_lo = sigma_point(quad, std::vector<double>{-1.0});
  CHECK(std::abs(boundary_integrand(rho, sp_lo, 0, -1)) < 1e-13);

  // The coordinate route integrates the same total in one piece.
  CHECK(coordinate_route(quad, rho, 24) ==
        doctest::Approx(res.I1_total).epsilon(1e-12));
}

TEST_CASE("coordinate and geometric routes agree across families") {
  std::vector<CostFunction> sweep;
  sweep.push_back(make_translation(Expr::parse("cosh(x1) - 1", 1), 1,
                                   box_domain(1, -1, 1, -3, 3, 2.0, 1.0)));
  sweep.push_back(make_bregman(Expr::parse("0.5*x1^2 + x1^4/12", 1), 1,
                               box_domain(1, -1, 1, -2, 2, 0.7, 0.5)));
  sweep.push_back(make_fenchel_young(
      Expr::parse("exp(x1)", 1), Expr::parse("x1*log(x1) - x1", 1), 1,
      box_domain(1, -0.5, 0.5, 0.2, 2.8, 0.4, 0.45)));
  const std::vector F{Expr::parse("x1 + 0.1*x1^3", 1)};
  sweep.push_back(make_bayes(F, 1, box_domain(1, -1, 1, -2, 2, 0.9, 0.5)));
  sweep.push_back(make_log_divergence(
      1.0, 1, box_domain(1, 0.9, 1.1, -0.2, 1.45, 0.25, 0.8)));

  const auto rho = parse_field("1 + 0.3*x1*y1", 1);
  for (const auto& cf : sweep) {
    const auto res = expand(cf, rho);
    const double coord = coordinate_route(cf, rho, 40);
    CHECK(res.I1_total ==
          doctest::Approx(coord).epsilon(1e-6).scale(1.0 + std::abs(coord)));
  }

  // A second, x-weighted density on the two families with the richest
  // geometry.
  const auto rho2 = parse_field("exp(0.2*x1)*(1 + 0.1*y1^2)", 1);
  for (int i : {0, 1}) {
    const auto res = expand(sweep[static_cast<std::size_t>(i)], rho2);
    const double coord =
        coordinate_route(sweep[static_cast<std::size_t>(i)], rho2, 40);
    CHECK(res.I1_total ==
          doctest::Approx(coord).epsilon(1e-6).scale(1.0 + std::abs(coord)));
  }

  // The swapped parametrization closes its own divergence identity too.
  const auto swapped_breg = swapped(sweep[1]);
  const auto rho_sw = swap_roles(rho);
  const auto res = expand(swapped_breg, rho_sw);
  const double coord = coordinate_route(swapped_breg, rho_sw, 40);
  CHECK(res.I1_total ==
        doctest::Approx(coord).epsilon(1e-6).scale(1.0 + std::abs(coord)));
}

TEST_CASE("coordinate and geometric routes agree in two dimensions") {
  std::vector<CostFunction> sweep;
  sweep.push_back(make_translation(
      Expr::parse("cosh(x1) + cosh(x2) - 2 + 0.1*x1^2*x2^2", 2), 2,
      box_domain(2, -1, 1, -3, 3, 2.0, 1.0)));
  sweep.push_back(make_bregman(
      Expr::parse("0.5*dot(x, x) + x1^4/12 + x2^4/12 + 0.05*x1^2*x2^2", 2), 2,
      box_domain(2, -1, 1, -2, 2, 0.7, 0.5)));

  const auto rho = parse_field("1 + 0.2*x1*y2 + 0.1*y1", 2);
  for (const auto& cf : sweep) {
    const auto res = expand(cf, rho, {16, 16});
    const double coord = coordinate_route(cf, rho, 20);
    CHECK(res.I1_total ==
          doctest::Approx(coord).epsilon(1e-6).scale(1.0 + std::abs(coord)));
  }
}

// Exchanging the roles of the two factors re-parametrizes the same surface
// by the inverse graph.  I0 and the interior term are chart scalars and must
// not move at all.  The boundary field, however, changes covariantly: the
// para-complex structure flips sign between the two charts, so the swapped
// pipeline's W is the original W with its normal components reflected, and
// I1_total shifts by exactly (1/2) oint g(N - f H, nu) dsigma.  Translation
// costs have constant fields along the diagonal, so the flux cancels between
// opposite faces and the swap is exact; Bregman costs are the canonical
// counterexample, with a hand-computable defect.
TEST_CASE("swap covariance: invariant scalars and the boundary-field flip") {
  const auto one1 = parse_field("1", 1);

  // Quadratic and translation costs, unit density: exact symmetry.
  {
    const auto quad = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
    const auto a = expand(quad, one1);
    const auto b = expand(swapped(quad), swap_roles(one1));
    CHECK(a.I0 == doctest::Approx(b.I0).epsilon(1e-13));
    CHECK(a.I1_total == doctest::Approx(b.I1_total).epsilon(1e-13).scale(1.0));
  }
  std::vector<CostFunction> translations;
  translations.push_back(make_translation(
      Expr::parse("cosh(x1) - 1 + 0.05*x1^3", 1), 1,
      box_domain(1, -1, 1, -3, 3, 2.0, 1.0)));
  translations.push_back(make_translation(
      Expr::parse("cosh(x1) + cosh(x2) - 2 + 0.1*x1^2*x2^2", 2), 2,
      box_domain(2, -1, 1, -3, 3, 2.0, 1.0)));
  for (const auto& cf : translations) {
    const auto rho = parse_field("1", cf.d);
    const QuadratureSpec spec{cf.d == 1 ? 32 : 10, cf.d == 1 ? 32 : 10};
    const auto a = expand(cf, rho, spec);
    const auto b = expand(swapped(cf), swap_roles(rho), spec);
    CHECK(std::abs(a.I0 - b.I0) < 1e-12);
    CHECK(std::abs(a.I1_total - b.I1_total) < 1e-12);
  }

  // Bregman quartic, unit density.  f''' = 2x, and on the diagonal
  // N - fH = -f'''/(2 f''^3), so the flux (N - fH) sqrt(g) at the two faces
  // gives a swap defect of (1/2)[-x/(1+x^2)^{5/2}] summed outward, i.e.
  // exactly -2^{-5/2}.
  const auto breg = make_bregman(Expr::parse("0.5*x1^2 + x1^4/12", 1), 1,
                                 box_domain(1, -1, 1, -2, 2, 0.7, 0.5));
  {
    const auto a = expand(breg, one1);
    const auto b = expand(swapped(breg), swap_roles(one1));
    CHECK(std::abs(a.I0 - b.I0) < 1e-12);
    CHECK(std::abs(a.I1_interior - b.I1_interior) < 1e-12);
    const double defect = -std::pow(2.0, -2.5);
    CHECK(a.I1_boundary - b.I1_boundary ==
          doctest::Approx(defect).epsilon(1e-10));
    CHECK(a.I1_total - b.I1_total == doctest::Approx(defect).epsilon(1e-10));
  }

  // The pointwise statement behind it: on the swapped cost, W_up and
  // W_up_flipped trade places.
  {
    const auto sp = sigma_point(breg, std::vector<double>{1.0});
    const auto ip = integrand_point(sp, one1);
    const auto spw = sigma_point(swapped(breg), std::vector<double>{1.0});
    const auto ipw = integrand_point(spw, swap_roles(one1));
    CHECK(ipw.W_up.at({0}) ==
          doctest::Approx(ip.W_up_flipped.at({0})).epsilon(1e-12));
    CHECK(ipw.W_up_flipped.at({0}) ==
          doctest::Approx(ip.W_up.at({0})).epsilon(1e-12));
  }

  // cosh translation with an asymmetric density: the interior scalars still
  // agree and the defect is again hand-computable.  f = rho on the diagonal
  // (m-tilde = 1), N = 0.2(x - 1), H = 0, so the outward flux sums to 0.4
  // and the defect is 0.2.
  {
    const auto tr = make_translation(Expr::parse("cosh(x1) - 1", 1), 1,
                                     box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
    const auto rho = parse_field("1 + 0.2*x1 + 0.1*y1^2", 1);
    const auto a = expand(tr, rho);
    const auto b = expand(swapped(tr), swap_roles(rho));
    CHECK(std::abs(a.I0 - b.I0) < 1e-12);
    CHECK(std::abs(a.I1_interior - b.I1_interior) < 1e-12);
    CHECK(a.I1_total - b.I1_total == doctest::Approx(0.2).epsilon(1e-11));
  }

  // Two dimensions: the invariant parts agree bitwise-tight while the
  // boundary defect is visibly nonzero.
  {
    const auto breg2 = make_bregman(
        Expr::parse("0.5*dot(x, x) + x1^4/12 + x2^4/12 + 0.05*x1^2*x2^2", 2),
        2, box_domain(2, -1, 1, -2, 2, 0.7, 0.5));
    const auto one2 = parse_field("1", 2);
    const QuadratureSpec spec{10, 10};
    const auto a = expand(breg2, one2, spec);
    const auto b = expand(swapped(breg2), swap_roles(one2), spec);
    CHECK(std::abs(a.I0 - b.I0) < 1e-11);
    CHECK(std::abs(a.I1_interior - b.I1_interior) < 1e-11);
    CHECK(std::abs(a.I1_boundary - b.I1_boundary) > 0.01);
  }
}

TEST_CASE("expand is deterministic and honors the worker count") {
  const auto tr = make_translation(Expr::parse("cosh(x1) - 1", 1), 1,
                                   box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
  const auto rho = parse_field("1 + 0.3*x1*y1", 1);
  const QuadratureSpec spec{12, 12};

  const auto a = expand(tr, rho, spec);
  const auto b = expand(tr, rho, spec);
  CHECK(a.I0 == b.I0);
  CHECK(a.I1_interior == b.I1_interior);
  CHECK(a.I1_boundary == b.I1_boundary);

  // Identical bits at a different worker count: the reduction order is a
  // function of the grid alone.
  setenv("GEOLAPLACE_WORKERS", "3", 1);
  const auto c = expand(tr, rho, spec);
  unsetenv("GEOLAPLACE_WORKERS");
  CHECK(a.I0 == c.I0);
  CHECK(a.I1_interior == c.I1_interior);
  CHECK(a.I1_boundary == c.I1_boundary);
}

TEST_CASE("expand reports solver failures with the node location") {
  CostFunction bad;
  bad.d = 1;
  bad.family = "concave";
  bad.domain = box_domain(1, -1, 1, -2, 2);
  bad.u = parse_field("-(x1 - y1)^2", 1);
  bad.y_guess = [](std::span<const double> x) {
    return std::vector<double>{x[0]};
  };

  bool threw = false;
  try {
    expand(bad, parse_field("1", 1));
  } catch (const GraphSolveError& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("expand: interior node (") != std::string::npos);
    CHECK(msg.find("at x = (") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("expand and boundary_integrand validate their inputs") {
  const auto quad = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
  CHECK_THROWS_AS(expand(quad, parse_field("1", 2)), DomainError);
  CHECK_THROWS_AS(expand(quad, parse_field("1", 1), {1, 8}), DomainError);
  CHECK_THROWS_AS(expand(quad, parse_field("1", 1), {8, 1}), DomainError);

  const auto sp = sigma_point(quad, std::vector<double>{0.25});
  const auto rho = parse_field("1", 1);
  CHECK_THROWS_AS(boundary_integrand(rho, sp, 1, +1), DomainError);
  CHECK_THROWS_AS(boundary_integrand(rho, sp, -1, +1), DomainError);
  CHECK_THROWS_AS(boundary_integrand(rho, sp, 0, 2), DomainError);
}

TEST_CASE("remainder kernel: values, pole, and scale invariance") {
  CHECK_THROWS_AS(remainder_kernel(std::vector<double>{1.0}, 0.0),
                  DomainError);
  CHECK_THROWS_AS(remainder_kernel(std::vector<double>{1.0}, -2.0),
                  DomainError);
  CHECK_THROWS_AS(remainder_kernel(std::vector<double>{}, 1.0), DomainError);

  // One dimension is finite at the origin; higher dimensions hit the pole.
  CHECK(remainder_kernel(std::vector<double>{0.0}, 4.0) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::isinf(remainder_kernel(std::vector<double>{0.0, 0.0}, 1.0)));
  CHECK(std::isinf(
      remainder_kernel(std::vector<double>{0.0, 0.0, 0.0}, 0.5)));

  // Pointwise value in d = 1: tau^{-1/2} e^{-z^2/(4 tau)}.
  const double v = remainder_kernel(std::vector<double>{1.2}, 0.3);
  CHECK(v == doctest::Approx(std::exp(-1.44 / 1.2) / std::sqrt(0.3))
                 .epsilon(1e-14));

  // The total mass is independent of tau: 2 sqrt(pi) in d = 1 and
  // 2 pi^{3/2} in d = 2 (radial integration).
  for (double tau : {0.3, 1.7}) {
    const double L1 = integrate_adaptive(
        [tau](double z) {
          return remainder_kernel(std::vector<double>{z}, tau);
        },
        -12.0 * std::sqrt(tau), 12.0 * std::sqrt(tau), 1e-12);
    CHECK(L1 == doctest::Approx(2.0 * std::sqrt(std::numbers::pi))
                    .epsilon(1e-9));
    const double L2 = integrate_adaptive(
        [tau](double r) {
          return 2.0 * std::numbers::pi * r *
                 remainder_kernel(std::vector<double>{r, 0.0}, tau);
        },
        1e-14, 14.0 * std::sqrt(tau), 1e-12);
    CHECK(L2 == doctest::Approx(2.0 * std::pow(std::numbers::pi, 1.5))
                    .epsilon(1e-9));
  }
}

TEST_CASE("taylor constants match the closed form") {
  CHECK(taylor_constant_closed(1, 4, 0) ==
        doctest::Approx(8.0 / std::sqrt(2.0 * std::numbers::pi))
            .epsilon(1e-15));
  for (int d : {1, 2, 3}) {
    for (int n = 0; n <= 4; ++n) {
      for (int k = 0; k <= 3; ++k) {
        if (k + n + d - 2 < 0) continue;
        const double closed = taylor_constant_closed(d, n, k);
        CHECK(taylor_constant(d, n, k) ==
              doctest::Approx(closed).epsilon(1e-10));
      }
    }
  }

  CHECK_THROWS_AS(taylor_constant(0, 1, 1), DomainError);
  CHECK_THROWS_AS(taylor_constant(1, -1, 0), DomainError);
  CHECK_THROWS_AS(taylor_constant(1, 0, 0), DomainError);       // divergent
  CHECK_THROWS_AS(taylor_constant_closed(1, 0, 0), DomainError);
}

TEST_CASE("interior integrand wrappers expose both forms") {
  const auto tr = make_translation(Expr::parse("cosh(x1) - 1", 1), 1,
                                   box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
  const auto rho = parse_field("1", 1);
  const auto sp = sigma_point(tr, std::vector<double>{0.3});
  CHECK(geometric_interior_integrand(rho, sp) ==
        doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(coordinate_interior_integrand(rho, sp) ==
        doctest::Approx(-0.125).epsilon(1e-12));
}
