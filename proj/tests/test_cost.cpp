#include "geolap/cost.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "geolap/errors.hpp"

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

// Jet of u at (x, y) from the cost's jet path, ambient order `order`.
Jet ambient_jet(const CostFunction& cf, std::vector<double> x,
                std::vector<double> y, int order) {
  std::vector<double> xy(x);
  xy.insert(xy.end(), y.begin(), y.end());
  auto seeds = Jet::seed_vars(xy, order);
  const auto d = static_cast<std::size_t>(cf.d);
  return cf.u.jets({seeds.data(), d}, {seeds.data() + cf.d, d});
}

}  // namespace

TEST_CASE("quadratic cost and its presentation") {
  auto cf = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
  CHECK(cf.u.value(std::vector{1.0}, std::vector{0.0}) == doctest::Approx(0.5));
  CHECK(cf.c->value(std::vector{1.0}, std::vector{2.0}) ==
        doctest::Approx(-2.0));
  // u = c - phi - psi pointwise
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int s = 0; s < 10; ++s) {
    const std::vector x{dist(rng)}, y{dist(rng)};
    const double lhs = cf.u.value(x, y);
    const double rhs =
        cf.c->value(x, y) - cf.phi->value(x, y) - cf.psi->value(x, y);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    CHECK(lhs == doctest::Approx(0.5 * (x[0] - y[0]) * (x[0] - y[0])));
  }
  // mixed second derivative c_{xy} = -1
  const Jet U = ambient_jet(cf, {0.3}, {-0.4}, 2);
  CHECK(U.partial_vars({0, 1}) == doctest::Approx(-1.0));
  CHECK(cf.y_guess(std::vector{0.7})[0] == doctest::Approx(0.7));
}

TEST_CASE("general c-divergence reproduces the quadratic example") {
  const auto c = Expr::parse("-(x1*y1)", 1);
  const auto phi = Expr::parse("-0.5*x1^2", 1);
  const auto psi = Expr::parse("-0.5*y1^2", 1);
  auto cf = make_c_divergence(c, phi, psi, 1, box_domain(1, -1, 1, -2, 2));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int s = 0; s < 10; ++s) {
    const std::vector x{dist(rng)}, y{dist(rng)};
    const double want = 0.5 * (x[0] - y[0]) * (x[0] - y[0]);
    CHECK(cf.u.value(x, y) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("c-divergence rejects a sign-flipped cost") {
  const auto c = Expr::parse("-(x1 - y1)^2", 1);
  const auto zero = Expr::parse("0", 1);
  CHECK_THROWS_AS(
      make_c_divergence(c, zero, zero, 1, box_domain(1, -1, 1, -1, 1)),
      NotADivergenceError);
}

TEST_CASE("translation family") {
  const auto U = Expr::parse("cosh(x1) - 1", 1);
  auto cf = make_translation(U, 1, box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
  CHECK(cf.u.value(std::vector{3.0}, std::vector{3.0}) ==
        doctest::Approx(0.0));
  CHECK(cf.u.value(std::vector{1.0}, std::vector{-1.0}) ==
        doctest::Approx(std::cosh(2.0) - 1.0));
  // jet path: du/dx = sinh(x - y), d2u/dxdy = -cosh(x - y)
  const Jet J = ambient_jet(cf, {0.5}, {-0.25}, 2);
  CHECK(J.partial_vars({0}) == doctest::Approx(std::sinh(0.75)));
  CHECK(J.partial_vars({0, 1}) == doctest::Approx(-std::cosh(0.75)));

  // potential with U(0) != 0 is not a divergence
  CHECK_THROWS_AS(make_translation(Expr::parse("cosh(x1)", 1), 1,
                                   box_domain(1, -1, 1, -3, 3)),
                  NotADivergenceError);
  // concave potential fails the convexity sweep
  CHECK_THROWS_AS(make_translation(Expr::parse("-(x1^2)", 1), 1,
                                   box_domain(1, -1, 1, -3, 3)),
                  NotADivergenceError);
}

TEST_CASE("bregman family against the closed form") {
  const auto f = Expr::parse("x1^2/2 + x1^4/12", 1);
  auto cf = make_bregman(f, 1, box_domain(1, -1, 1, -2, 2));
  CHECK(cf.u.value(std::vector{1.0}, std::vector{1.0}) == doctest::Approx(0.0));

  auto fv = [](double t) { return t * t / 2 + t * t * t * t / 12; };
  auto fp = [](double t) { return t + t * t * t / 3; };
  auto fpp = [](double t) { return 1 + t * t; };
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int s = 0; s < 10; ++s) {
    const double x = dist(rng), y = dist(rng);
    const double want = fv(x) - fv(y) - fp(y) * (x - y);
    CHECK(cf.u.value(std::vector{x}, std::vector{y}) ==
          doctest::Approx(want).epsilon(1e-13));
    const Jet J = ambient_jet(cf, {x}, {y}, 2);
    CHECK(J.partial_vars({0}) ==
          doctest::Approx(fp(x) - fp(y)).epsilon(1e-12));
    CHECK(J.partial_vars({0, 1}) == doctest::Approx(-fpp(y)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      make_bregman(Expr::parse("-(x1^2)/2", 1), 1, box_domain(1, -1, 1, -1, 1)),
      NotADivergenceError);
}

TEST_CASE("fenchel-young with explicit conjugate") {
  const auto f = Expr::parse("exp(x1)", 1);
  const auto fs = Expr::parse("x1*log(x1) - x1", 1);
  auto cf = make_fenchel_young(f, fs, 1,
                               box_domain(1, -0.5, 0.5, 0.2, 2.8, 0.4, 0.45));
  // equality case of the Fenchel inequality: y = f'(x) = e^x
  for (double x : {-0.4, 0.0, 0.3}) {
    CHECK(cf.u.value(std::vector{x}, std::vector{std::exp(x)}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cf.y_guess(std::vector{x})[0] == doctest::Approx(std::exp(x)));
  }
  CHECK(cf.u.value(std::vector{0.0}, std::vector{2.0}) ==
        doctest::Approx(1.0 + 2.0 * std::log(2.0) - 2.0));
}

TEST_CASE("fenchel-young numeric conjugate matches the explicit one") {
  const auto f = Expr::parse("exp(x1)", 1);
  const auto fs = Expr::parse("x1*log(x1) - x1", 1);
  const auto dom = box_domain(1, -0.5, 0.5, 0.2, 2.8, 0.4, 0.45);
  auto explicit_cf = make_fenchel_young(f, fs, 1, dom);
  auto numeric_cf = make_fenchel_young(f, std::nullopt, 1, dom);

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dx(-0.5, 0.5), dy(0.3, 2.5);
  for (int s = 0; s < 8; ++s) {
    const std::vector x{dx(rng)}, y{dy(rng)};
    CHECK(numeric_cf.u.value(x, y) ==
          doctest::Approx(explicit_cf.u.value(x, y)).epsilon(1e-10));
    const Jet a = ambient_jet(numeric_cf, x, y, 3);
    const Jet b = ambient_jet(explicit_cf, x, y, 3);
    for (std::size_t i = 0; i < a.coeffs().size(); ++i)
      CHECK(a.coeff(i) == doctest::Approx(b.coeff(i)).epsilon(1e-9));
  }

  // quartic potential: y = f'(1) = 4/3 lies on the graph
  const auto q = Expr::parse("x1^2/2 + x1^4/12", 1);
  auto qc = make_fenchel_young(q, std::nullopt, 1,
                               box_domain(1, -1, 1, -1.4, 1.4, 0.5, 0.5));
  CHECK(qc.u.value(std::vector{1.0}, std::vector{4.0 / 3.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("log divergence") {
  auto cf = make_log_divergence(1.0, 1,
                                box_domain(1, 0.9, 1.1, -0.2, 1.45, 0.25, 0.8));
  auto manual = [](double x, double y) {
    return 0.5 * x * x - 0.5 * y * y - std::log(1.0 + y * (x - y));
  };
  CHECK(cf.u.value(std::vector{1.0}, std::vector{1.0}) == doctest::Approx(0.0));
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> dx(0.9, 1.1), dy(0.2, 1.4);
  for (int s = 0; s < 10; ++s) {
    const double x = dx(rng), y = dy(rng);
    CHECK(cf.u.value(std::vector{x}, std::vector{y}) ==
          doctest::Approx(manual(x, y)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(make_log_divergence(-1.0, 1, box_domain(1, 0.9, 1.1, 0, 1)),
                  NotADivergenceError);
}

TEST_CASE("bayes family") {
  const Expr F[] = {Expr::parse("x1 + x1^3/10", 1)};
  auto cf = make_bayes(F, 1, box_domain(1, -1, 1, -2, 2, 0.9, 1.0));
  CHECK(cf.y_guess(std::vector{0.5})[0] == doctest::Approx(0.5125));
  for (double y : {-0.3, 0.0, 1.2}) {
    const double r = y - 0.5125;
    CHECK(cf.u.value(std::vector{0.5}, std::vector{y}) ==
          doctest::Approx(0.5 * r * r));
  }
  // a collapsed map is rejected
  const Expr bad[] = {Expr::parse("0*x1", 1)};
  CHECK_THROWS_AS(make_bayes(bad, 1, box_domain(1, -1, 1, -1, 1)),
                  NotADivergenceError);
}

TEST_CASE("swapped cost evaluates with roles exchanged") {
  const auto f = Expr::parse("x1^2/2 + x1^4/12", 1);
  auto cf = make_bregman(f, 1, box_domain(1, -1, 1, -2, 2));
  auto sw = swapped(cf);
  CHECK(sw.family == "bregman_swapped");
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int s = 0; s < 8; ++s) {
    const std::vector a{dist(rng)}, b{dist(rng)};
    CHECK(sw.u.value(a, b) == doctest::Approx(cf.u.value(b, a)));
    CHECK(sw.c->value(a, b) == doctest::Approx(cf.c->value(b, a)));
  }
  // the swapped presentation still passes its own validation: phi' = psi etc.
  CHECK(sw.phi->value(std::vector{0.5}, std::vector{0.0}) ==
        doctest::Approx(cf.psi->value(std::vector{0.0}, std::vector{0.5})));
}

TEST_CASE("cross difference") {
  auto cf = make_quadratic(1, box_domain(1, -1, 1, -2, 2));
  // quadratic cost: delta(x, y, t, t) = t^2 exactly
  for (double t : {0.5, 0.1, 1e-3}) {
    CHECK(cross_difference(cf, std::vector{0.3}, std::vector{-0.7},
                           std::vector{t}, std::vector{t}) ==
          doctest::Approx(t * t).epsilon(1e-12));
    CHECK(cross_difference(cf, std::vector{0.3}, std::vector{-0.7},
                           std::vector{0.0}, std::vector{t}) ==
          doctest::Approx(0.0));
  }

  // second-order Taylor: delta ~ -c_{xy} xi eta; at the cosh diagonal the
  // third-order term vanishes, so t = 1e-3 resolves it to 1e-6 relative
  const auto U = Expr::parse("cosh(x1) - 1", 1);
  auto tr = make_translation(U, 1, box_domain(1, -1, 1, -3, 3, 2.0, 1.0));
  const double t = 1e-3;
  const Jet J = ambient_jet(tr, {0.4}, {0.4}, 2);
  const double cxy = J.partial_vars({0, 1});
  const double delta = cross_difference(tr, std::vector{0.4},
                                        std::vector{0.4}, std::vector{t},
                                        std::vector{t});
  CHECK(delta == doctest::Approx(-cxy * t * t).epsilon(1e-6));

  // the cross difference of u equals that of c (phi and psi cancel)
  const auto f = Expr::parse("x1^2/2 + x1^4/12", 1);
  auto br = make_bregman(f, 1, box_domain(1, -1, 1, -2, 2));
  auto du = cross_difference(br, std::vector{0.2}, std::vector{-0.1},
                             std::vector{0.3}, std::vector{0.4});
  double dc = br.c->value(std::vector{0.5}, std::vector{-0.1}) +
              br.c->value(std::vector{0.2}, std::vector{0.3}) -
              br.c->value(std::vector{0.2}, std::vector{-0.1}) -
              br.c->value(std::vector{0.5}, std::vector{0.3});
  CHECK(du == doctest::Approx(dc).epsilon(1e-12));
}

TEST_CASE("domain validation") {
  DomainSpec dom;
  dom.x_box = {{1.0, 1.0}};
  dom.tubular_radius = 1.0;
  dom.convexity_lambda = 1.0;
  CHECK_THROWS_AS(dom.validate(1), DomainError);
  dom.x_box = {{-1.0, 1.0}};
  CHECK_NOTHROW(dom.validate(1));
  dom.tubular_radius = 0.0;
  CHECK_THROWS_AS(dom.validate(1), DomainError);
  dom.tubular_radius = 1.0;
  CHECK_THROWS_AS(dom.validate(2), DomainError);
}

TEST_CASE("value and jet paths agree for every builtin") {
  std::vector<CostFunction> costs;
  costs.push_back(make_quadratic(2, box_domain(2, -1, 1, -2, 2)));
  costs.push_back(make_translation(
      Expr::parse("cosh(x1) + cosh(x2) - 2 + 0.1*x1^2*x2^2", 2), 2,
      box_domain(2, -1, 1, -3, 3, 2.0, 1.0)));
  costs.push_back(make_bregman(
      Expr::parse("x1^2/2 + x1^4/12 + x2^2/2 + x2^4/12 + 0.05*x1^2*x2^2", 2),
      2, box_domain(2, -1, 1, -2, 2, 0.7, 1.0)));
  const Expr F[] = {Expr::parse("x1 + x1^3/10 + 0.05*x2^2", 2),
                    Expr::parse("x2 + x2^3/10 + 0.05*x1*x2", 2)};
  costs.push_back(make_bayes(F, 2, box_domain(2, -1, 1, -2, 2, 0.9, 1.0)));

  std::mt19937 rng(29);
  std::uniform_real_distribution<double> dist(-0.9, 0.9);
  for (const auto& cf : costs) {
    for (int s = 0; s < 5; ++s) {
      const std::vector x{dist(rng), dist(rng)}, y{dist(rng), dist(rng)};
      const Jet J = ambient_jet(cf, x, y, 2);
      CHECK(J.value() ==
            doctest::Approx(cf.u.value(x, y)).epsilon(1e-12));
    }
  }
}
