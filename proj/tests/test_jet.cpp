#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "geolap/jet.hpp"

using namespace geolap;

namespace {

// Reference polynomial with sparse exponent -> coefficient storage; product
// and truncation are done the naive way so the jet kernels have an
// independent oracle.
struct Poly {
  int num_vars;
  std::map<std::vector<int>, double> terms;

  double eval(std::span<const double> z) const {
    double s = 0.0;
    for (const auto& [a, c] : terms) {
      double t = c;
      for (int v = 0; v < num_vars; ++v)
        for (int k = 0; k < a[v]; ++k) t *= z[v];
      s += t;
    }
    return s;
  }

  Poly mul(const Poly& o, int max_order) const {
    Poly r{num_vars, {}};
    for (const auto& [a, ca] : terms)
      for (const auto& [b, cb] : o.terms) {
        std::vector<int> s(num_vars);
        int deg = 0;
        for (int v = 0; v < num_vars; ++v) {
          s[v] = a[v] + b[v];
          deg += s[v];
        }
        if (deg > max_order) continue;
        r.terms[s] += ca * cb;
      }
    return r;
  }
};

Poly random_poly(int num_vars, int order, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Poly p{num_vars, {}};
  const JetSpace& sp = JetSpace::get(num_vars, order);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    auto a = sp.multi_index(i);
    p.terms[{a.begin(), a.end()}] = u(rng);
  }
  return p;
}

// Jet of a polynomial around base 0: Taylor coefficients of a polynomial in
// z are just its monomial coefficients.
Jet jet_of_poly(const Poly& p, int order) {
  const JetSpace& sp = JetSpace::get(p.num_vars, order);
  std::vector<double> c(sp.size(), 0.0);
  for (const auto& [a, coef] : p.terms) {
    int deg = 0;
    for (int v : a) deg += v;
    if (deg > order) continue;
    c[sp.index_of(a)] += coef;
  }
  std::vector<double> base(p.num_vars, 0.0);
  return Jet::from_coeffs(p.num_vars, order, base, std::move(c));
}

}  // namespace

TEST_CASE("jet multiplication matches naive polynomial convolution") {
  std::mt19937 rng(20240811);
  for (auto [nv, ord] : {std::pair{1, 6}, {2, 4}, {3, 3}, {4, 2}}) {
    Poly pa = random_poly(nv, ord, rng);
    Poly pb = random_poly(nv, ord, rng);
    Poly pc = pa.mul(pb, ord);

    Jet ja = jet_of_poly(pa, ord);
    Jet jb = jet_of_poly(pb, ord);
    Jet jc = ja * jb;

    const JetSpace& sp = jc.space();
    for (std::size_t i = 0; i < sp.size(); ++i) {
      auto a = sp.multi_index(i);
      std::vector<int> key(a.begin(), a.end());
      double want = pc.terms.count(key) ? pc.terms.at(key) : 0.0;
      CHECK(jc.coeff(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("Leibniz rule for deriv() on products") {
  std::mt19937 rng(7);
  Poly pa = random_poly(3, 4, rng);
  Poly pb = random_poly(3, 4, rng);
  Jet f = jet_of_poly(pa, 4);
  Jet g = jet_of_poly(pb, 4);

  for (int v = 0; v < 3; ++v) {
    Jet lhs = (f * g).deriv(v);
    Jet rhs = f.deriv(v) * g.truncated(3) + f.truncated(3) * g.deriv(v);
    for (std::size_t i = 0; i < lhs.space().size(); ++i)
      CHECK(lhs.coeff(i) == doctest::Approx(rhs.coeff(i)).epsilon(1e-12));
  }
}

TEST_CASE("exp(log(f)) round-trips positive jets") {
  std::mt19937 rng(11);
  Poly p = random_poly(2, 5, rng);
  p.terms[std::vector<int>(2, 0)] = 3.0;  // keep the constant term positive
  Jet f = jet_of_poly(p, 5);
  Jet r = exp(log(f));
  for (std::size_t i = 0; i < f.space().size(); ++i)
    CHECK(r.coeff(i) == doctest::Approx(f.coeff(i)).epsilon(1e-12));
}

TEST_CASE("trig and hyperbolic identities hold coefficientwise") {
  std::mt19937 rng(13);
  Poly p = random_poly(2, 4, rng);
  Jet f = jet_of_poly(p, 4);

  Jet one_trig = sin(f) * sin(f) + cos(f) * cos(f);
  Jet one_hyp = cosh(f) * cosh(f) - sinh(f) * sinh(f);
  for (std::size_t i = 0; i < f.space().size(); ++i) {
    double want = (i == 0) ? 1.0 : 0.0;
    CHECK(one_trig.coeff(i) == doctest::Approx(want).epsilon(1e-11));
    CHECK(one_hyp.coeff(i) == doctest::Approx(want).epsilon(1e-11));
  }
}

TEST_CASE("partials agree with central finite differences") {
  // f(x0, x1) = exp(x0) * cos(x1) + x0^2 * x1 on a non-trivial base point.
  auto eval = [](double a, double b) {
    return std::exp(a) * std::cos(b) + a * a * b;
  };
  const double x0 = 0.3, x1 = -0.7;
  std::vector<double> base = {x0, x1};
  auto z = Jet::seed_vars(base, 4);
  Jet f = exp(z[0]) * cos(z[1]) + z[0] * z[0] * z[1];

  const double h = 1e-4;
  // First order.
  double d0 = (eval(x0 + h, x1) - eval(x0 - h, x1)) / (2 * h);
  double d1 = (eval(x0, x1 + h) - eval(x0, x1 - h)) / (2 * h);
  CHECK(f.partial_vars({0}) == doctest::Approx(d0).epsilon(1e-7));
  CHECK(f.partial_vars({1}) == doctest::Approx(d1).epsilon(1e-7));

  // Second order, pure and mixed.
  double d00 =
      (eval(x0 + h, x1) - 2 * eval(x0, x1) + eval(x0 - h, x1)) / (h * h);
  double d01 = (eval(x0 + h, x1 + h) - eval(x0 + h, x1 - h) -
                eval(x0 - h, x1 + h) + eval(x0 - h, x1 - h)) /
               (4 * h * h);
  CHECK(f.partial_vars({0, 0}) == doctest::Approx(d00).epsilon(1e-5));
  CHECK(f.partial_vars({0, 1}) == doctest::Approx(d01).epsilon(1e-5));

  // Third order: d^3/dx0^2 dx1 via FD of the mixed second derivative.
  auto d2_mixed = [&](double a) {
    return (eval(a, x1 + h) - 2 * eval(a, x1) + eval(a, x1 - h)) / (h * h);
  };
  double d011 = (d2_mixed(x0 + h) - d2_mixed(x0 - h)) / (2 * h);
  CHECK(f.partial_vars({0, 1, 1}) == doctest::Approx(d011).epsilon(1e-4));
}

TEST_CASE("partial extraction on monomials") {
  // f = x * y^3 in two variables: d^4 f / dx dy^3 = 3! = 6.
  std::vector<double> base = {0.0, 0.0};
  auto z = Jet::seed_vars(base, 4);
  Jet f = z[0] * z[1] * z[1] * z[1];
  CHECK(f.partial_vars({0, 1, 1, 1}) == doctest::Approx(6.0));
  std::vector<int> alpha = {1, 3};
  CHECK(f.partial(alpha) == doctest::Approx(6.0));
  // The Taylor coefficient itself is 1.
  CHECK(f.coeff(f.space().index_of(alpha)) == doctest::Approx(1.0));
}

TEST_CASE("division and pow behave like their series") {
  std::vector<double> base = {0.5};
  auto z = Jet::seed_vars(base, 6);
  Jet f = 1.0 + z[0] * z[0];

  Jet inv = 1.0 / f;
  Jet prod = inv * f;
  for (std::size_t i = 0; i < f.space().size(); ++i)
    CHECK(prod.coeff(i) == doctest::Approx(i == 0 ? 1.0 : 0.0).epsilon(1e-12));

  Jet p3 = pow(f, 3.0);
  Jet p3_ref = f * f * f;
  for (std::size_t i = 0; i < f.space().size(); ++i)
    CHECK(p3.coeff(i) == doctest::Approx(p3_ref.coeff(i)).epsilon(1e-12));

  Jet s = sqrt(f);
  Jet s2 = s * s;
  for (std::size_t i = 0; i < f.space().size(); ++i)
    CHECK(s2.coeff(i) == doctest::Approx(f.coeff(i)).epsilon(1e-12));

  Jet pm2 = pow(f, -2.0);
  Jet pm2_ref = 1.0 / (f * f);
  for (std::size_t i = 0; i < f.space().size(); ++i)
    CHECK(pm2.coeff(i) == doctest::Approx(pm2_ref.coeff(i)).epsilon(1e-12));
}

TEST_CASE("embedded() places variables at the requested offset") {
  // g(y0, y1) = y0 + 2 y1^2 seeded at (1, 2), embedded as variables 2, 3 of
  // a 4-variable space.
  std::vector<double> ybase = {1.0, 2.0};
  auto y = Jet::seed_vars(ybase, 3);
  Jet g = y[0] + 2.0 * y[1] * y[1];

  std::vector<double> big_base = {9.0, 9.0, 1.0, 2.0};
  Jet e = g.embedded(4, 3, 2, big_base);
  CHECK(e.value() == doctest::Approx(1.0 + 2.0 * 4.0));
  CHECK(e.partial_vars({2}) == doctest::Approx(1.0));
  CHECK(e.partial_vars({3}) == doctest::Approx(8.0));
  CHECK(e.partial_vars({3, 3}) == doctest::Approx(4.0));
  CHECK(e.partial_vars({0}) == doctest::Approx(0.0));
}

TEST_CASE("composed_at() chains jets through substitution") {
  // h(t) = f(g0(t), g1(t)) with f = x0 * x1 + x0^3, g0 = t^2, g1 = sin(t),
  // all around t = 0.4; compare against a direct jet of the composition.
  std::vector<double> tbase = {0.4};
  auto t = Jet::seed_vars(tbase, 5);
  Jet g0 = t[0] * t[0];
  Jet g1 = sin(t[0]);

  std::vector<double> xbase = {g0.value(), g1.value()};
  auto x = Jet::seed_vars(xbase, 5);
  Jet f = x[0] * x[1] + x[0] * x[0] * x[0];

  std::vector<Jet> args = {g0, g1};
  Jet h = f.composed_at(args);
  Jet href = g0 * g1 + g0 * g0 * g0;
  for (std::size_t i = 0; i < h.space().size(); ++i)
    CHECK(h.coeff(i) == doctest::Approx(href.coeff(i)).epsilon(1e-12));
}

TEST_CASE("implicit_jet_solve recovers sqrt and a coupled 2x2 system") {
  // w^2 - p = 0 around p = 4: w(p) = sqrt(p).
  auto G = [](std::span<const Jet> w,
              std::span<const Jet> p) -> std::vector<Jet> {
    return {w[0] * w[0] - p[0]};
  };
  std::vector<double> w0 = {2.0}, p0 = {4.0};
  std::vector<double> jac = {4.0};  // dG/dw = 2 w0
  auto w = implicit_jet_solve(G, w0, p0, 4, jac);
  REQUIRE(w.size() == 1);
  CHECK(w[0].value() == doctest::Approx(2.0));
  CHECK(w[0].partial_vars({0}) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(w[0].partial_vars({0, 0}) ==
        doctest::Approx(-1.0 / 32.0).epsilon(1e-10));
  CHECK(w[0].partial_vars({0, 0, 0}) ==
        doctest::Approx(3.0 / 256.0).epsilon(1e-9));

  // Coupled system: w0 + w1^2 = p0, w0 * w1 = p1 near (w0, w1) = (1, 1),
  // (p0, p1) = (2, 1).  Implicit differentiation gives dw/dp rows from the
  // inverse Jacobian [[1, 2], [1, 1]]^{-1} = [[-1, 2], [1, -1]].
  auto G2 = [](std::span<const Jet> w,
               std::span<const Jet> p) -> std::vector<Jet> {
    return {w[0] + w[1] * w[1] - p[0], w[0] * w[1] - p[1]};
  };
  std::vector<double> w20 = {1.0, 1.0}, p20 = {2.0, 1.0};
  std::vector<double> jac2 = {1.0, 2.0, 1.0, 1.0};
  auto w2 = implicit_jet_solve(G2, w20, p20, 3, jac2);
  REQUIRE(w2.size() == 2);
  CHECK(w2[0].partial_vars({0}) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(w2[0].partial_vars({1}) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(w2[1].partial_vars({0}) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w2[1].partial_vars({1}) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("capability and domain errors are reported") {
  CHECK_THROWS_AS(JetSpace::get(1, 7), CapabilityError);
  CHECK_THROWS_AS(JetSpace::get(17, 2), CapabilityError);

  std::vector<double> base = {0.0};
  auto z = Jet::seed_vars(base, 3);
  CHECK_THROWS_AS((void)z[0].partial_vars({0, 0, 0, 0}), CapabilityError);
  CHECK_THROWS_AS(1.0 / z[0], SingularJetError);
  CHECK_THROWS_AS(log(z[0]), DomainError);
  CHECK_THROWS_AS(sqrt(z[0] - 1.0), DomainError);

  auto w = Jet::seed_vars(std::vector<double>{0.0, 0.0}, 3);
  CHECK_THROWS_AS(z[0] + w[0], CapabilityError);
}

TEST_CASE("compose_series applies univariate Taylor data") {
  // series for e^w with f = x around 0: coefficients 1/k!.
  std::vector<double> base = {0.0};
  auto z = Jet::seed_vars(base, 5);
  std::vector<double> series = {1.0, 1.0, 0.5, 1.0 / 6, 1.0 / 24, 1.0 / 120};
  Jet e1 = z[0].compose_series(series);
  Jet e2 = exp(z[0]);
  for (std::size_t i = 0; i < e1.space().size(); ++i)
    CHECK(e1.coeff(i) == doctest::Approx(e2.coeff(i)).epsilon(1e-12));
}
