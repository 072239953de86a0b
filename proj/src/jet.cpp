#include "geolap/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace geolap {

namespace {

void check_capability(int num_vars, int order) {
  if (order < 0 || order > kMaxJetOrder)
    throw CapabilityError("jet order " + std::to_string(order) +
                          " outside supported range 0.." +
                          std::to_string(kMaxJetOrder));
  if (num_vars < 1 || num_vars > kMaxJetVars)
    throw CapabilityError("jet variable count " + std::to_string(num_vars) +
                          " outside supported range 1.." +
                          std::to_string(kMaxJetVars));
}

// Generate all multi-indices with |alpha| <= order in graded lexicographic
// order (by degree, then lexicographic).
void enumerate(int num_vars, int order, std::vector<std::uint8_t>& out) {
  std::vector<std::uint8_t> alpha(num_vars, 0);
  for (int deg = 0; deg <= order; ++deg) {
    // Walk compositions of `deg` into num_vars parts, lexicographically.
    std::function<void(int, int)> rec = [&](int pos, int rem) {
      if (pos == num_vars - 1) {
        alpha[pos] = static_cast<std::uint8_t>(rem);
        out.insert(out.end(), alpha.begin(), alpha.end());
        return;
      }
      for (int k = rem; k >= 0; --k) {
        alpha[pos] = static_cast<std::uint8_t>(k);
        rec(pos + 1, rem - k);
      }
    };
    rec(0, deg);
  }
}

double factorial_of(std::span<const std::uint8_t> alpha) {
  double f = 1.0;
  for (std::uint8_t a : alpha)
    for (int k = 2; k <= a; ++k) f *= k;
  return f;
}

}  // namespace

JetSpace::JetSpace(int num_vars, int order)
    : num_vars_(num_vars), order_(order) {
  enumerate(num_vars, order, index_);
  const std::size_t n = index_.size() / static_cast<std::size_t>(num_vars);
  degree_.resize(n);
  factorial_.resize(n);
  // Packed lookup: 3 bits per variable suffice for order <= 6, 16 vars ->
  // 48 bits; use a sorted flat map keyed by the pack.
  std::unordered_map<std::uint64_t, std::uint32_t> lut;
  lut.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = multi_index(i);
    int deg = 0;
    std::uint64_t key = 0;
    for (int v = 0; v < num_vars; ++v) {
      deg += a[v];
      key = (key << 3) | a[v];
    }
    degree_[i] = deg;
    factorial_[i] = factorial_of(a);
    lut.emplace(key, static_cast<std::uint32_t>(i));
  }

  // Multiplication table: all pairs with compatible degrees.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (degree_[i] + degree_[j] > order) continue;
      auto ai = multi_index(i);
      auto aj = multi_index(j);
      std::uint64_t key = 0;
      for (int v = 0; v < num_vars; ++v)
        key = (key << 3) | static_cast<std::uint64_t>(ai[v] + aj[v]);
      mul_table_.push_back({static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j), lut.at(key)});
    }
  }
  // Sort by output index so accumulation is deterministic and cache-friendly.
  std::sort(mul_table_.begin(), mul_table_.end(),
            [](const MulTriple& l, const MulTriple& r) {
              if (l.c != r.c) return l.c < r.c;
              if (l.a != r.a) return l.a < r.a;
              return l.b < r.b;
            });

  // Ranks for index_of via binary search over packed keys.
  packed_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = multi_index(i);
    std::uint64_t key = 0;
    for (int v = 0; v < num_vars; ++v) key = (key << 3) | a[v];
    packed_[i] = {key, static_cast<std::uint32_t>(i)};
  }
  std::sort(packed_.begin(), packed_.end());
}

std::size_t JetSpace::index_of(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != num_vars_)
    throw CapabilityError("multi-index length does not match variable count");
  int deg = 0;
  std::uint64_t key = 0;
  for (int v = 0; v < num_vars_; ++v) {
    if (alpha[v] < 0) throw CapabilityError("negative multi-index entry");
    deg += alpha[v];
    key = (key << 3) | static_cast<std::uint64_t>(alpha[v] & 0x7);
  }
  if (deg > order_)
    throw CapabilityError("requested derivative order " + std::to_string(deg) +
                          " exceeds jet order " + std::to_string(order_));
  auto it = std::lower_bound(
      packed_.begin(), packed_.end(), std::pair<std::uint64_t, std::uint32_t>{key, 0},
      [](const auto& l, const auto& r) { return l.first < r.first; });
  return it->second;
}

const JetSpace& JetSpace::get(int num_vars, int order) {
  check_capability(num_vars, order);
  static std::mutex mu;
  static std::map<std::pair<int, int>, const JetSpace*> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(num_vars, order);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, new JetSpace(num_vars, order)).first;
  return *it->second;
}

Jet Jet::constant(double value, int num_vars, int order,
                  std::span<const double> base) {
  const JetSpace& sp = JetSpace::get(num_vars, order);
  std::vector<double> c(sp.size(), 0.0);
  c[0] = value;
  return Jet(&sp, {base.begin(), base.end()}, std::move(c));
}

Jet Jet::seed_var(std::span<const double> point, int var, int order) {
  const JetSpace& sp = JetSpace::get(static_cast<int>(point.size()), order);
  std::vector<double> c(sp.size(), 0.0);
  c[0] = point[var];
  if (order >= 1) {
    std::vector<int> alpha(point.size(), 0);
    alpha[var] = 1;
    c[sp.index_of(alpha)] = 1.0;
  }
  return Jet(&sp, {point.begin(), point.end()}, std::move(c));
}

std::vector<Jet> Jet::seed_vars(std::span<const double> point, int order) {
  std::vector<Jet> out;
  out.reserve(point.size());
  for (std::size_t v = 0; v < point.size(); ++v)
    out.push_back(seed_var(point, static_cast<int>(v), order));
  return out;
}

Jet Jet::from_coeffs(int num_vars, int order, std::span<const double> base,
                     std::vector<double> coeffs) {
  const JetSpace& sp = JetSpace::get(num_vars, order);
  if (coeffs.size() != sp.size())
    throw CapabilityError("coefficient vector length mismatch");
  return Jet(&sp, {base.begin(), base.end()}, std::move(coeffs));
}

void Jet::check_compatible(const Jet& o) const {
  if (space_ != o.space_)
    throw CapabilityError("jet operands live in different truncation spaces");
}

double Jet::partial(std::span<const int> alpha) const {
  std::size_t i = space_->index_of(alpha);
  return coeffs_[i] * space_->factorial(i);
}

double Jet::partial_vars(std::span<const int> vars) const {
  std::vector<int> alpha(num_vars(), 0);
  for (int v : vars) {
    if (v < 0 || v >= num_vars())
      throw CapabilityError("variable id out of range in partial_vars");
    ++alpha[v];
  }
  return partial(alpha);
}

double Jet::partial_vars(std::initializer_list<int> vars) const {
  return partial_vars(std::span<const int>(vars.begin(), vars.size()));
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

Jet& Jet::operator+=(double s) {
  coeffs_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  coeffs_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  for (double& c : coeffs_) c /= s;
  return *this;
}

Jet operator-(const Jet& a) {
  Jet r = a;
  for (double& c : r.coeffs_) c = -c;
  return r;
}

Jet operator-(double s, const Jet& a) {
  Jet r = -a;
  r += s;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  std::vector<double> out(a.coeffs_.size(), 0.0);
  for (const auto& t : a.space_->mul_table())
    out[t.c] += a.coeffs_[t.a] * b.coeffs_[t.b];
  return Jet(a.space_, a.base_, std::move(out));
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.value() == 0.0)
    throw SingularJetError("division by jet with zero constant term");
  // 1/b via the geometric series around b0, then one multiplication.
  const int p = b.order();
  const double b0 = b.value();
  std::vector<double> series(p + 1);
  double s = 1.0 / b0;
  for (int k = 0; k <= p; ++k) {
    series[k] = s;
    s *= -1.0 / b0;
  }
  return a * b.compose_series(series);
}

Jet operator/(double s, const Jet& b) {
  Jet one = Jet::constant(s, b.num_vars(), b.order(), b.base());
  return one / b;
}

Jet Jet::compose_series(std::span<const double> series) const {
  // g = sum_k series[k] * w^k with w = f - f0 (zero constant term), via
  // Horner's scheme in truncated jet arithmetic.
  Jet w = *this;
  w.coeffs_[0] = 0.0;
  const int p = order();
  Jet acc = Jet::constant(series.size() > static_cast<std::size_t>(p)
                              ? series[p]
                              : 0.0,
                          num_vars(), p, base_);
  for (int k = p - 1; k >= 0; --k) {
    acc = acc * w;
    if (k < static_cast<int>(series.size())) acc += series[k];
  }
  return acc;
}

Jet Jet::deriv(int var) const {
  if (order() < 1)
    throw CapabilityError("cannot differentiate an order-0 jet");
  if (var < 0 || var >= num_vars())
    throw CapabilityError("variable id out of range in deriv");
  const JetSpace& tgt = JetSpace::get(num_vars(), order() - 1);
  std::vector<double> out(tgt.size(), 0.0);
  std::vector<int> alpha(num_vars());
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    auto a = tgt.multi_index(i);
    for (int v = 0; v < num_vars(); ++v) alpha[v] = a[v];
    ++alpha[var];
    std::size_t src = space_->index_of(alpha);
    out[i] = coeffs_[src] * (alpha[var]);
  }
  return Jet(&tgt, base_, std::move(out));
}

Jet Jet::truncated(int new_order) const {
  if (new_order > order())
    throw CapabilityError("truncated() cannot raise the order");
  const JetSpace& tgt = JetSpace::get(num_vars(), new_order);
  std::vector<double> out(tgt.size());
  // Graded enumeration: the lower-order space is a prefix of this one.
  for (std::size_t i = 0; i < tgt.size(); ++i) out[i] = coeffs_[i];
  return Jet(&tgt, base_, std::move(out));
}

Jet Jet::embedded(int new_num_vars, int new_order, int var_offset,
                  std::span<const double> new_base) const {
  if (var_offset < 0 || var_offset + num_vars() > new_num_vars)
    throw CapabilityError("embedded(): variable offset out of range");
  const JetSpace& tgt = JetSpace::get(new_num_vars, new_order);
  std::vector<double> out(tgt.size(), 0.0);
  std::vector<int> alpha(new_num_vars, 0);
  for (std::size_t i = 0; i < space_->size(); ++i) {
    if (space_->degree(i) > new_order) continue;
    auto a = space_->multi_index(i);
    std::fill(alpha.begin(), alpha.end(), 0);
    for (int v = 0; v < num_vars(); ++v) alpha[var_offset + v] = a[v];
    out[tgt.index_of(alpha)] = coeffs_[i];
  }
  return Jet(&tgt, {new_base.begin(), new_base.end()}, std::move(out));
}

Jet Jet::composed_at(std::span<const Jet> args) const {
  if (static_cast<int>(args.size()) != num_vars())
    throw CapabilityError("composed_at(): argument count mismatch");
  for (std::size_t v = 1; v < args.size(); ++v) args[0].check_compatible(args[v]);
  const Jet& proto = args[0];
  // Displacements (args - base) and their powers up to this jet's order.
  const int p = order();
  std::vector<std::vector<Jet>> powers(args.size());
  for (std::size_t v = 0; v < args.size(); ++v) {
    Jet dz = args[v] - base_[v];
    powers[v].reserve(p + 1);
    powers[v].push_back(Jet::constant(1.0, proto.num_vars(), proto.order(),
                                      proto.base()));
    for (int k = 1; k <= p; ++k) powers[v].push_back(powers[v].back() * dz);
  }
  Jet acc = Jet::constant(0.0, proto.num_vars(), proto.order(), proto.base());
  for (std::size_t i = 0; i < space_->size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    auto a = space_->multi_index(i);
    Jet term = Jet::constant(coeffs_[i], proto.num_vars(), proto.order(),
                             proto.base());
    for (int v = 0; v < num_vars(); ++v)
      if (a[v] > 0) term = term * powers[v][a[v]];
    acc += term;
  }
  return acc;
}

namespace {

Jet unary_via_series(const Jet& f,
                     const std::function<double(int, double)>& coef) {
  const int p = f.order();
  std::vector<double> series(p + 1);
  for (int k = 0; k <= p; ++k) series[k] = coef(k, f.value());
  return f.compose_series(series);
}

double fact(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

Jet exp(const Jet& f) {
  const double e0 = std::exp(f.value());
  return unary_via_series(f, [e0](int k, double) { return e0 / fact(k); });
}

Jet log(const Jet& f) {
  if (f.value() <= 0.0)
    throw DomainError("log of jet with nonpositive constant term");
  return unary_via_series(f, [](int k, double f0) {
    if (k == 0) return std::log(f0);
    double sign = (k % 2 == 1) ? 1.0 : -1.0;
    return sign / (k * std::pow(f0, k));
  });
}

Jet sqrt(const Jet& f) { return pow(f, 0.5); }

Jet cosh(const Jet& f) {
  const double c0 = std::cosh(f.value());
  const double s0 = std::sinh(f.value());
  return unary_via_series(
      f, [c0, s0](int k, double) { return (k % 2 == 0 ? c0 : s0) / fact(k); });
}

Jet sinh(const Jet& f) {
  const double c0 = std::cosh(f.value());
  const double s0 = std::sinh(f.value());
  return unary_via_series(
      f, [c0, s0](int k, double) { return (k % 2 == 0 ? s0 : c0) / fact(k); });
}

Jet sin(const Jet& f) {
  const double s0 = std::sin(f.value());
  const double c0 = std::cos(f.value());
  // Derivative cycle sin, cos, -sin, -cos.
  return unary_via_series(f, [s0, c0](int k, double) {
    static const int sign[4] = {1, 1, -1, -1};
    double base = (k % 2 == 0) ? s0 : c0;
    return sign[k % 4] * base / fact(k);
  });
}

Jet cos(const Jet& f) {
  const double s0 = std::sin(f.value());
  const double c0 = std::cos(f.value());
  // Derivative cycle cos, -sin, -cos, sin.
  return unary_via_series(f, [s0, c0](int k, double) {
    static const int sign[4] = {1, -1, -1, 1};
    double base = (k % 2 == 0) ? c0 : s0;
    return sign[k % 4] * base / fact(k);
  });
}

Jet pow(const Jet& f, double exponent) {
  const double r = std::round(exponent);
  if (std::abs(exponent - r) < 1e-12 && std::abs(r) <= 64) {
    // Integer exponent: repeated multiplication, valid for any base.
    int n = static_cast<int>(r);
    if (n == 0) return Jet::constant(1.0, f.num_vars(), f.order(), f.base());
    bool invert = n < 0;
    n = std::abs(n);
    Jet acc = f;
    for (int k = 1; k < n; ++k) acc = acc * f;
    if (invert) return 1.0 / acc;
    return acc;
  }
  if (f.value() <= 0.0)
    throw DomainError("pow with non-integer exponent needs positive base");
  return unary_via_series(f, [exponent](int k, double f0) {
    double binom = 1.0;
    for (int i = 0; i < k; ++i) binom *= (exponent - i) / (i + 1);
    return binom * std::pow(f0, exponent - k);
  });
}

std::vector<Jet> implicit_jet_solve(
    const std::function<std::vector<Jet>(std::span<const Jet> w,
                                         std::span<const Jet> p)>& G,
    std::span<const double> w0, std::span<const double> p0, int order,
    std::span<const double> jacobian, double tol) {
  const int nw = static_cast<int>(w0.size());
  const int np = static_cast<int>(p0.size());
  if (static_cast<int>(jacobian.size()) != nw * nw)
    throw CapabilityError("implicit_jet_solve: Jacobian size mismatch");

  // LU-factorize the frozen Jacobian once (partial pivoting).
  std::vector<double> lu(jacobian.begin(), jacobian.end());
  std::vector<int> piv(nw);
  for (int k = 0; k < nw; ++k) {
    int imax = k;
    for (int i = k + 1; i < nw; ++i)
      if (std::abs(lu[i * nw + k]) > std::abs(lu[imax * nw + k])) imax = i;
    if (lu[imax * nw + k] == 0.0)
      throw GraphSolveError("implicit_jet_solve: singular Jacobian");
    piv[k] = imax;
    if (imax != k)
      for (int j = 0; j < nw; ++j) std::swap(lu[k * nw + j], lu[imax * nw + j]);
    for (int i = k + 1; i < nw; ++i) {
      lu[i * nw + k] /= lu[k * nw + k];
      for (int j = k + 1; j < nw; ++j)
        lu[i * nw + j] -= lu[i * nw + k] * lu[k * nw + j];
    }
  }
  auto solve_inplace = [&](std::vector<Jet>& rhs) {
    for (int k = 0; k < nw; ++k)
      if (piv[k] != k) std::swap(rhs[k], rhs[piv[k]]);
    for (int i = 1; i < nw; ++i)
      for (int j = 0; j < i; ++j) rhs[i] -= rhs[j] * lu[i * nw + j];
    for (int i = nw - 1; i >= 0; --i) {
      for (int j = i + 1; j < nw; ++j) rhs[i] -= rhs[j] * lu[i * nw + j];
      rhs[i] /= lu[i * nw + i];
    }
  };

  std::vector<Jet> p = Jet::seed_vars(p0, order);
  std::vector<Jet> w;
  w.reserve(nw);
  for (int i = 0; i < nw; ++i)
    w.push_back(Jet::constant(w0[i], np, order, p0));

  // Frozen-Jacobian Newton in jet arithmetic: each sweep extends the valid
  // Taylor order by at least one, so `order` sweeps suffice; one extra sweep
  // tightens rounding before the residual check.
  for (int sweep = 0; sweep <= order; ++sweep) {
    std::vector<Jet> r = G(w, p);
    if (static_cast<int>(r.size()) != nw)
      throw CapabilityError("implicit_jet_solve: G component count mismatch");
    solve_inplace(r);
    double step = 0.0;
    for (int i = 0; i < nw; ++i) {
      w[i] -= r[i];
      for (double c : r[i].coeffs()) step = std::max(step, std::abs(c));
    }
    if (step < tol && sweep >= order) break;
  }

  std::vector<Jet> r = G(w, p);
  double resid = 0.0;
  for (const Jet& ri : r)
    for (double c : ri.coeffs()) resid = std::max(resid, std::abs(c));
  if (!(resid < std::max(tol, 1e-9)))
    throw GraphSolveError(
        "implicit_jet_solve: residual " + std::to_string(resid) +
        " did not vanish (non-converged Taylor solve)");
  return w;
}

}  // namespace geolap
