#include "doctest.h"

#include <cmath>
#include <random>

#include "geolap/tensor.hpp"

using namespace geolap;

namespace {

Tensor random_tensor(int d, int rank, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(d, rank);
  for (double& v : t.data()) v = u(rng);
  return t;
}

Tensor random_spd(int d, std::mt19937& rng) {
  Tensor a = random_tensor(d, 2, rng);
  Tensor m(d, 2);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = (i == j) ? d : 0.0;  // diagonal shift keeps it positive
      for (int k = 0; k < d; ++k) s += a.at({i, k}) * a.at({j, k});
      m.at({i, j}) = s;
    }
  return m;
}

// Cofactor-expansion determinant, the slow reference.
double det_cofactor(const Tensor& m) {
  const int n = m.d();
  if (n == 1) return m.at({0, 0});
  double s = 0.0;
  for (int c = 0; c < n; ++c) {
    Tensor minor(n - 1, 2);
    for (int i = 1; i < n; ++i)
      for (int j = 0, jj = 0; j < n; ++j) {
        if (j == c) continue;
        minor.at({i - 1, jj++}) = m.at({i, j});
      }
    double sign = (c % 2 == 0) ? 1.0 : -1.0;
    s += sign * m.at({0, c}) * det_cofactor(minor);
  }
  return s;
}

}  // namespace

TEST_CASE("invert_sym: identity, diagonal, and multiply-back") {
  Tensor id(3, 2);
  for (int i = 0; i < 3; ++i) id.at({i, i}) = 1.0;
  Tensor inv_id = invert_sym(id);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(inv_id.at({i, j}) == doctest::Approx(i == j ? 1.0 : 0.0));

  Tensor diag(2, 2);
  diag.at({0, 0}) = 2.0;
  diag.at({1, 1}) = 4.0;
  Tensor inv_diag = invert_sym(diag);
  CHECK(inv_diag.at({0, 0}) == doctest::Approx(0.5));
  CHECK(inv_diag.at({1, 1}) == doctest::Approx(0.25));
  CHECK(inv_diag.at({0, 1}) == doctest::Approx(0.0));

  std::mt19937 rng(42);
  Tensor m = random_spd(3, rng);
  Tensor minv = invert_sym(m);
  Tensor prod = contract(m, minv, {{1, 0}});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(prod.at({i, j}) ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("invert_sym flags singular and ill-conditioned input") {
  Tensor z(2, 2);  // all zeros
  CHECK_THROWS_AS(invert_sym(z), NonDegeneracyError);

  Tensor bad(2, 2);
  bad.at({0, 0}) = 1.0;
  bad.at({1, 1}) = 1e-9;  // condition number ~1e9
  CHECK_THROWS_AS(invert_sym(bad, 1e6), NonDegeneracyError);
  CHECK_NOTHROW(invert_sym(bad, 1e12));
}

TEST_CASE("invert_sym is an involution for well-conditioned input") {
  std::mt19937 rng(99);
  for (int d = 1; d <= 4; ++d) {
    Tensor m = random_spd(d, rng);
    Tensor back = invert_sym(invert_sym(m));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        CHECK(back.at({i, j}) == doctest::Approx(m.at({i, j})).epsilon(1e-10));
  }
}

TEST_CASE("contract: kronecker delta, inverse pairing, trace") {
  const int d = 3;
  Tensor delta(d, 2);
  for (int i = 0; i < d; ++i) delta.at({i, i}) = 1.0;

  std::mt19937 rng(5);
  Tensor v = random_tensor(d, 1, rng);
  Tensor dv = contract(delta, v, {{1, 0}});
  for (int i = 0; i < d; ++i)
    CHECK(dv.at({i}) == doctest::Approx(v.at({i})));

  Tensor u = random_spd(d, rng);
  Tensor uinv = invert_sym(u);
  Tensor should_be_delta = contract(u, uinv, {{1, 0}});
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(should_be_delta.at({i, j}) ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

  Tensor tr = trace(delta, 0, 1);
  CHECK(tr.rank() == 0);
  CHECK(tr.value() == doctest::Approx(3.0));
}

TEST_CASE("contract is bilinear and compatible with scalar multiplication") {
  std::mt19937 rng(17);
  const int d = 3;
  Tensor a1 = random_tensor(d, 3, rng);
  Tensor a2 = random_tensor(d, 3, rng);
  Tensor b = random_tensor(d, 2, rng);

  Tensor lhs = contract(a1 + a2 * 2.5, b, {{2, 0}});
  Tensor rhs = contract(a1, b, {{2, 0}}) + contract(a2, b, {{2, 0}}) * 2.5;
  for (std::size_t i = 0; i < lhs.data().size(); ++i)
    CHECK(lhs.data()[i] == doctest::Approx(rhs.data()[i]).epsilon(1e-12));

  // Double contraction reduces rank by 4 in total.
  Tensor two = contract(a1, a2, {{0, 1}, {2, 0}});
  CHECK(two.rank() == 2);
}

TEST_CASE("contract rejects rank overflow and bad slots") {
  Tensor a(2, 4), b(2, 4);
  CHECK_THROWS_AS(contract(a, b, {{0, 0}}), CapabilityError);  // rank 6
  Tensor v(2, 1);
  CHECK_THROWS_AS(contract(v, v, {{1, 0}}), DomainError);
}

TEST_CASE("det: small closed forms and a cofactor oracle") {
  Tensor id(3, 2);
  for (int i = 0; i < 3; ++i) id.at({i, i}) = 1.0;
  CHECK(det(id) == doctest::Approx(1.0));

  Tensor diag(2, 2);
  diag.at({0, 0}) = 2.0;
  diag.at({1, 1}) = 3.0;
  CHECK(det(diag) == doctest::Approx(6.0));

  std::mt19937 rng(123);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor m = random_tensor(4, 2, rng);
    double want = det_cofactor(m);
    CHECK(det(m) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("det is multiplicative") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor a = random_tensor(3, 2, rng);
    Tensor b = random_tensor(3, 2, rng);
    Tensor ab = contract(a, b, {{1, 0}});
    CHECK(det(ab) == doctest::Approx(det(a) * det(b)).epsilon(1e-10));
  }
}

TEST_CASE("symmetrized is idempotent and fixes symmetric input") {
  std::mt19937 rng(31);
  Tensor t = random_tensor(3, 3, rng);
  Tensor s1 = t.symmetrized();
  Tensor s2 = s1.symmetrized();
  for (std::size_t i = 0; i < s1.data().size(); ++i)
    CHECK(s1.data()[i] == doctest::Approx(s2.data()[i]).epsilon(1e-13));
  // Symmetry: swapping any two indices leaves s1 unchanged.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(s1.at({i, j, k}) == doctest::Approx(s1.at({j, i, k})));
}

TEST_CASE("index classes ride through contraction") {
  Tensor c(2, 2, {IndexClass::unbarred, IndexClass::barred});
  c.at({0, 0}) = 2.0;
  c.at({1, 1}) = 3.0;
  Tensor cinv = invert_sym(c);
  CHECK(cinv.classes().size() == 2);
  Tensor mixed =
      contract(c, cinv, {{1, 1}});  // sum over the barred pair
  CHECK(mixed.rank() == 2);
  REQUIRE(mixed.classes().size() == 2);
  CHECK(mixed.classes()[0] == IndexClass::unbarred);
}

TEST_CASE("rank and dimension caps are enforced") {
  CHECK_THROWS_AS(Tensor(3, 5), CapabilityError);
  CHECK_THROWS_AS(Tensor(9, 2), CapabilityError);
}
