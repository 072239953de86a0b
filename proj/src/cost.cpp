#include "geolap/cost.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <utility>

#include "geolap/errors.hpp"
#include "geolap/linalg.hpp"

namespace geolap {
namespace {

constexpr int kValidationSamples = 32;
constexpr int kConvexitySamples = 16;
constexpr unsigned kSampleSeed = 20240614u;

bool mentions(const ExprNode* n, ExprNode::VarKind kind) {
  if (n == nullptr) return false;
  if (n->kind == ExprNode::Kind::var) return n->var_kind == kind;
  return mentions(n->lhs.get(), kind) || mentions(n->rhs.get(), kind);
}

void require_only(const Expr& e, ExprNode::VarKind allowed, const char* label) {
  if (e.empty()) throw DomainError(std::string(label) + ": empty expression");
  const ExprNode::VarKind other = allowed == ExprNode::VarKind::x
                                      ? ExprNode::VarKind::y
                                      : ExprNode::VarKind::x;
  if (mentions(&e.root(), other))
    throw DomainError(std::string(label) +
                      ": expression uses variables of the wrong kind");
}

void require_dim(const Expr& e, int d, const char* label) {
  if (e.dim() != d)
    throw DomainError(std::string(label) + ": expression dimension mismatch");
}

std::vector<double> grad_value(const Expr& f, std::span<const double> w) {
  const int d = f.dim();
  auto seeds = Jet::seed_vars(w, 1);
  const Jet F = f.eval_jet(seeds, seeds);
  std::vector<double> g(d);
  for (int i = 0; i < d; ++i) g[i] = F.partial_vars({i});
  return g;
}

std::vector<double> hess_value(const Expr& f, std::span<const double> w) {
  const int d = f.dim();
  auto seeds = Jet::seed_vars(w, 2);
  const Jet F = f.eval_jet(seeds, seeds);
  std::vector<double> h(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h[i * d + j] = F.partial_vars({i, j});
  return h;
}

// Jets of (grad f)(w) for arbitrary argument jets sharing one space.
std::vector<Jet> grad_at_jets(const Expr& f, std::span<const Jet> w) {
  const int d = f.dim();
  std::vector<double> p(d);
  for (int i = 0; i < d; ++i) p[i] = w[i].value();
  auto seeds = Jet::seed_vars(p, w[0].order() + 1);
  const Jet F = f.eval_jet(seeds, seeds);
  std::vector<Jet> g;
  g.reserve(d);
  for (int i = 0; i < d; ++i) g.push_back(F.deriv(i).composed_at(w));
  return g;
}

double euclid(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Damped Newton for grad f(w) = y, i.e. the argmax defining f*(y).
std::vector<double> conjugate_point(const Expr& f, std::span<const double> y,
                                    std::vector<double> w) {
  const int d = f.dim();
  const double tol = 1e-12 * (1.0 + euclid(y));
  std::vector<double> r(d);
  auto residual = [&](std::span<const double> at, std::vector<double>& out) {
    auto g = grad_value(f, at);
    for (int i = 0; i < d; ++i) out[i] = g[i] - y[i];
    return euclid(out);
  };
  double rn = residual(w, r);
  for (int iter = 0; iter < 80; ++iter) {
    if (rn <= tol) return w;
    const auto step = solve_dense(hess_value(f, w), r, d);
    double t = 1.0;
    std::vector<double> trial(d), rt(d);
    while (true) {
      for (int i = 0; i < d; ++i) trial[i] = w[i] - t * step[i];
      double rtn;
      try {
        rtn = residual(trial, rt);
      } catch (const DomainError&) {
        rtn = 2.0 * rn;  // left the potential's domain; shorten the step
      }
      if (rtn <= (1.0 - 0.25 * t) * rn || rtn < tol) {
        w = trial;
        r = rt;
        rn = rtn;
        break;
      }
      t *= 0.5;
      if (t < 1e-8) throw GraphSolveError("conjugate solve stalled");
    }
  }
  throw GraphSolveError("conjugate solve did not converge");
}

std::vector<double> box_center(
    const std::vector<std::array<double, 2>>& box) {
  std::vector<double> c(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) c[i] = 0.5 * (box[i][0] + box[i][1]);
  return c;
}

std::vector<double> sample_in(const std::vector<std::array<double, 2>>& box,
                              std::mt19937& rng) {
  std::vector<double> p(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    std::uniform_real_distribution<double> dist(box[i][0], box[i][1]);
    p[i] = dist(rng);
  }
  return p;
}

std::function<std::vector<double>(std::span<const double>)> identity_guess() {
  return [](std::span<const double> x) {
    return std::vector<double>(x.begin(), x.end());
  };
}

// Presentation identity, mixed-derivative agreement, and nonnegativity at
// randomly sampled (x, y) pairs.
void validate_cost(const CostFunction& cf) {
  const int d = cf.d;
  const auto& ybox = cf.domain.y_box ? *cf.domain.y_box : cf.domain.x_box;
  std::mt19937 rng(kSampleSeed + static_cast<unsigned>(d));
  try {
    for (int s = 0; s < kValidationSamples; ++s) {
      const auto x = sample_in(cf.domain.x_box, rng);
      const auto y = sample_in(ybox, rng);
      std::vector<double> xy(x);
      xy.insert(xy.end(), y.begin(), y.end());
      auto seeds = Jet::seed_vars(xy, 2);
      const std::span<const Jet> sx(seeds.data(), static_cast<std::size_t>(d));
      const std::span<const Jet> sy(seeds.data() + d,
                                    static_cast<std::size_t>(d));
      const Jet U = cf.u.jets(sx, sy);
      if (U.value() < -1e-10)
        throw NotADivergenceError("u is negative at a sampled point");
      if (cf.c) {
        double rhs = cf.c->value(x, y);
        if (cf.phi) rhs -= cf.phi->value(x, y);
        if (cf.psi) rhs -= cf.psi->value(x, y);
        if (std::fabs(U.value() - rhs) >
            1e-12 * std::max(1.0, std::fabs(U.value())))
          throw NotADivergenceError("u != c - phi - psi at a sampled point");
        const Jet C = cf.c->jets(sx, sy);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            const int vars[2] = {i, d + j};
            const double uij = U.partial_vars(std::span<const int>(vars, 2));
            const double cij = C.partial_vars(std::span<const int>(vars, 2));
            if (std::fabs(uij - cij) > 1e-12 * std::max(1.0, std::fabs(uij)))
              throw NotADivergenceError(
                  "mixed second derivatives of u and c disagree");
          }
      }
    }
  } catch (const GraphSolveError& e) {
    throw NotADivergenceError(std::string("validation sampling failed: ") +
                              e.what());
  }
}

// Positive-definiteness of the y-Hessian of u along the family's guessed
// graph; catches non-convex potentials before any geometry is attempted.
void check_graph_convexity(const CostFunction& cf) {
  const int d = cf.d;
  std::mt19937 rng(kSampleSeed ^ 0x5151u);
  try {
    for (int s = 0; s < kConvexitySamples; ++s) {
      const auto x = sample_in(cf.domain.x_box, rng);
      const auto y = cf.y_guess(x);
      std::vector<double> xy(x);
      xy.insert(xy.end(), y.begin(), y.end());
      auto seeds = Jet::seed_vars(xy, 2);
      const Jet U = cf.u.jets({seeds.data(), static_cast<std::size_t>(d)},
                              {seeds.data() + d, static_cast<std::size_t>(d)});
      std::vector<double> h(static_cast<std::size_t>(d) * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const int vars[2] = {d + i, d + j};
          h[i * d + j] = U.partial_vars(std::span<const int>(vars, 2));
        }
      if (!is_pd(std::move(h), d))
        throw NotADivergenceError(
            "y-Hessian of u is not positive definite at a sampled point");
    }
  } catch (const GraphSolveError& e) {
    throw NotADivergenceError(std::string("convexity sampling failed: ") +
                              e.what());
  }
}

CostFunction assemble_c_divergence(const Expr& c, const Expr& phi,
                                   const Expr& psi,
                                   const std::optional<Expr>& u_direct, int d,
                                   DomainSpec domain, std::string family) {
  require_dim(c, d, "c");
  require_dim(phi, d, "phi");
  require_dim(psi, d, "psi");
  require_only(phi, ExprNode::VarKind::x, "phi");
  require_only(psi, ExprNode::VarKind::y, "psi");
  domain.validate(d);

  CostFunction cf;
  cf.d = d;
  cf.family = std::move(family);
  cf.domain = std::move(domain);
  cf.c = field_from_expr(c);
  cf.phi = field_from_expr(phi);
  cf.psi = field_from_expr(psi);
  if (u_direct) {
    require_dim(*u_direct, d, "u");
    cf.u = field_from_expr(*u_direct);
  } else {
    cf.u.d = d;
    cf.u.value = [c, phi, psi](std::span<const double> x,
                               std::span<const double> y) {
      return c.eval(x, y) - phi.eval(x, y) - psi.eval(x, y);
    };
    cf.u.jets = [c, phi, psi](std::span<const Jet> x, std::span<const Jet> y) {
      return c.eval_jet(x, y) - phi.eval_jet(x, y) - psi.eval_jet(x, y);
    };
  }
  cf.y_guess = identity_guess();
  validate_cost(cf);
  return cf;
}

}  // namespace

FieldXY field_from_expr(const Expr& e) {
  FieldXY f;
  f.d = e.dim();
  f.value = [e](std::span<const double> x, std::span<const double> y) {
    return e.eval(x, y);
  };
  f.jets = [e](std::span<const Jet> x, std::span<const Jet> y) {
    return e.eval_jet(x, y);
  };
  return f;
}

void DomainSpec::validate(int d) const {
  if (static_cast<int>(x_box.size()) != d)
    throw DomainError("x_box dimension mismatch");
  for (const auto& iv : x_box)
    if (!(iv[0] < iv[1])) throw DomainError("x_box interval is empty");
  if (!(tubular_radius > 0.0))
    throw DomainError("tubular_radius must be positive");
  if (!(convexity_lambda > 0.0))
    throw DomainError("convexity_lambda must be positive");
  if (y_box) {
    if (static_cast<int>(y_box->size()) != d)
      throw DomainError("y_box dimension mismatch");
    for (const auto& iv : *y_box)
      if (!(iv[0] < iv[1])) throw DomainError("y_box interval is empty");
  }
}

CostFunction make_c_divergence(const Expr& c, const Expr& phi, const Expr& psi,
                               int d, DomainSpec domain) {
  return assemble_c_divergence(c, phi, psi, std::nullopt, d, std::move(domain),
                               "c_divergence");
}

CostFunction make_quadratic(int d, DomainSpec domain) {
  const Expr c = Expr::parse("-dot(x, y)", d);
  const Expr phi = Expr::parse("-0.5*norm2(x)", d);
  const Expr psi = Expr::parse("-0.5*norm2(y)", d);
  const Expr u = Expr::parse("0.5*norm2(x - y)", d);
  return assemble_c_divergence(c, phi, psi, u, d, std::move(domain),
                               "quadratic");
}

CostFunction make_translation(const Expr& U, int d, DomainSpec domain) {
  require_dim(U, d, "U");
  require_only(U, ExprNode::VarKind::x, "U");
  domain.validate(d);
  const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  if (std::fabs(U.eval(zero, zero)) > 1e-12)
    throw NotADivergenceError("translation potential must vanish at z = 0");

  CostFunction cf;
  cf.d = d;
  cf.family = "translation";
  cf.domain = std::move(domain);
  cf.u.d = d;
  cf.u.value = [U, d](std::span<const double> x, std::span<const double> y) {
    std::vector<double> z(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) z[i] = x[i] - y[i];
    return U.eval(z, z);
  };
  cf.u.jets = [U, d](std::span<const Jet> x, std::span<const Jet> y) {
    std::vector<Jet> z;
    z.reserve(d);
    for (int i = 0; i < d; ++i) z.push_back(x[i] - y[i]);
    return U.eval_jet(z, z);
  };
  cf.c = cf.u;
  cf.y_guess = identity_guess();
  validate_cost(cf);
  check_graph_convexity(cf);
  return cf;
}

CostFunction make_bregman(const Expr& f, int d, DomainSpec domain) {
  require_dim(f, d, "f");
  require_only(f, ExprNode::VarKind::x, "f");
  domain.validate(d);

  CostFunction cf;
  cf.d = d;
  cf.family = "bregman";
  cf.domain = std::move(domain);
  cf.u.d = d;
  cf.u.value = [f, d](std::span<const double> x, std::span<const double> y) {
    const auto g = grad_value(f, y);
    double v = f.eval(x, x) - f.eval(y, y);
    for (int i = 0; i < d; ++i) v -= g[i] * (x[i] - y[i]);
    return v;
  };
  cf.u.jets = [f, d](std::span<const Jet> x, std::span<const Jet> y) {
    const auto g = grad_at_jets(f, y);
    Jet v = f.eval_jet(x, x) - f.eval_jet(y, y);
    for (int i = 0; i < d; ++i) v -= g[i] * (x[i] - y[i]);
    return v;
  };
  cf.c = FieldXY{d,
                 [f, d](std::span<const double> x, std::span<const double> y) {
                   const auto g = grad_value(f, y);
                   double v = 0.0;
                   for (int i = 0; i < d; ++i) v -= g[i] * x[i];
                   return v;
                 },
                 [f, d](std::span<const Jet> x, std::span<const Jet> y) {
                   const auto g = grad_at_jets(f, y);
                   Jet v = g[0] * x[0] * -1.0;
                   for (int i = 1; i < d; ++i) v -= g[i] * x[i];
                   return v;
                 }};
  cf.phi = FieldXY{d,
                   [f](std::span<const double> x, std::span<const double>) {
                     return -f.eval(x, x);
                   },
                   [f](std::span<const Jet> x, std::span<const Jet>) {
                     return -f.eval_jet(x, x);
                   }};
  cf.psi = FieldXY{d,
                   [f, d](std::span<const double>, std::span<const double> y) {
                     const auto g = grad_value(f, y);
                     double v = f.eval(y, y);
                     for (int i = 0; i < d; ++i) v -= g[i] * y[i];
                     return v;
                   },
                   [f, d](std::span<const Jet>, std::span<const Jet> y) {
                     const auto g = grad_at_jets(f, y);
                     Jet v = f.eval_jet(y, y);
                     for (int i = 0; i < d; ++i) v -= g[i] * y[i];
                     return v;
                   }};
  cf.y_guess = identity_guess();
  validate_cost(cf);
  check_graph_convexity(cf);
  return cf;
}

CostFunction make_fenchel_young(const Expr& f, const std::optional<Expr>& fstar,
                                int d, DomainSpec domain) {
  require_dim(f, d, "f");
  require_only(f, ExprNode::VarKind::x, "f");
  if (fstar) {
    require_dim(*fstar, d, "fstar");
    require_only(*fstar, ExprNode::VarKind::x, "fstar");
  }
  domain.validate(d);

  CostFunction cf;
  cf.d = d;
  cf.family = "fenchel_young";
  cf.domain = std::move(domain);
  cf.c = field_from_expr(Expr::parse("-dot(x, y)", d));
  cf.phi = FieldXY{d,
                   [f](std::span<const double> x, std::span<const double>) {
                     return -f.eval(x, x);
                   },
                   [f](std::span<const Jet> x, std::span<const Jet>) {
                     return -f.eval_jet(x, x);
                   }};

  FieldXY star;  // f*(y), analytic or numeric
  star.d = d;
  if (fstar) {
    const Expr fs = *fstar;
    star.value = [fs](std::span<const double>, std::span<const double> y) {
      return fs.eval(y, y);
    };
    star.jets = [fs](std::span<const Jet>, std::span<const Jet> y) {
      return fs.eval_jet(y, y);
    };
  } else {
    const std::vector<double> w_init = box_center(cf.domain.x_box);
    star.value = [f, d, w_init](std::span<const double>,
                                std::span<const double> y) {
      const auto w = conjugate_point(f, y, w_init);
      double v = -f.eval(w, w);
      for (int i = 0; i < d; ++i) v += w[i] * y[i];
      return v;
    };
    star.jets = [f, d, w_init](std::span<const Jet>, std::span<const Jet> y) {
      std::vector<double> yv(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) yv[i] = y[i].value();
      const auto w0 = conjugate_point(f, yv, w_init);
      auto G = [&f, d](std::span<const Jet> w,
                       std::span<const Jet> p) -> std::vector<Jet> {
        auto g = grad_at_jets(f, w);
        for (int i = 0; i < d; ++i) g[i] -= p[i];
        return g;
      };
      const auto wp = implicit_jet_solve(G, w0, yv, y[0].order(),
                                         hess_value(f, w0));
      std::vector<Jet> w;
      w.reserve(d);
      for (int i = 0; i < d; ++i) w.push_back(wp[i].composed_at(y));
      Jet v = -f.eval_jet(w, w);
      for (int i = 0; i < d; ++i) v += w[i] * y[i];
      return v;
    };
  }
  cf.psi = FieldXY{d,
                   [star](std::span<const double> x, std::span<const double> y) {
                     return -star.value(x, y);
                   },
                   [star](std::span<const Jet> x, std::span<const Jet> y) {
                     return -star.jets(x, y);
                   }};
  cf.u.d = d;
  cf.u.value = [f, star, d](std::span<const double> x,
                            std::span<const double> y) {
    double v = f.eval(x, x) + star.value(x, y);
    for (int i = 0; i < d; ++i) v -= x[i] * y[i];
    return v;
  };
  cf.u.jets = [f, star, d](std::span<const Jet> x, std::span<const Jet> y) {
    Jet v = f.eval_jet(x, x) + star.jets(x, y);
    for (int i = 0; i < d; ++i) v -= x[i] * y[i];
    return v;
  };
  cf.y_guess = [f](std::span<const double> x) { return grad_value(f, x); };
  validate_cost(cf);
  check_graph_convexity(cf);
  return cf;
}

CostFunction make_log_divergence(double alpha, int d, DomainSpec domain) {
  if (!(alpha > 0.0))
    throw NotADivergenceError("log divergence requires alpha > 0");
  char c_src[256], u_src[384];
  std::snprintf(c_src, sizeof c_src,
                "-(1/%.17g)*log(1 + %.17g*(dot(y, x) - dot(y, y)))", alpha,
                alpha);
  std::snprintf(u_src, sizeof u_src, "0.5*dot(x, x) - 0.5*dot(y, y) %s", c_src);
  const Expr c = Expr::parse(c_src, d);
  const Expr phi = Expr::parse("-0.5*dot(x, x)", d);
  const Expr psi = Expr::parse("0.5*dot(y, y)", d);
  const Expr u = Expr::parse(u_src, d);
  auto cf = assemble_c_divergence(c, phi, psi, u, d, std::move(domain),
                                  "log_divergence");
  check_graph_convexity(cf);
  return cf;
}

CostFunction make_bayes(std::span<const Expr> F, int d, DomainSpec domain) {
  if (static_cast<int>(F.size()) != d)
    throw DomainError("bayes map needs exactly d component expressions");
  for (const Expr& Fi : F) {
    require_dim(Fi, d, "F");
    require_only(Fi, ExprNode::VarKind::x, "F");
  }
  domain.validate(d);
  const std::vector<Expr> comps(F.begin(), F.end());

  CostFunction cf;
  cf.d = d;
  cf.family = "bayes";
  cf.domain = std::move(domain);
  cf.u.d = d;
  cf.u.value = [comps, d](std::span<const double> x,
                          std::span<const double> y) {
    double v = 0.0;
    for (int i = 0; i < d; ++i) {
      const double r = y[i] - comps[i].eval(x, x);
      v += 0.5 * r * r;
    }
    return v;
  };
  cf.u.jets = [comps, d](std::span<const Jet> x, std::span<const Jet> y) {
    Jet v;
    for (int i = 0; i < d; ++i) {
      const Jet r = y[i] - comps[i].eval_jet(x, x);
      const Jet term = r * r * 0.5;
      v = (i == 0) ? term : v + term;
    }
    return v;
  };
  cf.c = cf.u;
  cf.y_guess = [comps, d](std::span<const double> x) {
    std::vector<double> y(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) y[i] = comps[i].eval(x, x);
    return y;
  };

  // The model map must be a local diffeomorphism for c to be non-degenerate.
  std::mt19937 rng(kSampleSeed ^ 0xb0bau);
  for (int s = 0; s < kConvexitySamples; ++s) {
    const auto x = sample_in(cf.domain.x_box, rng);
    auto seeds = Jet::seed_vars(x, 1);
    std::vector<double> J(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
      const Jet Fi = comps[i].eval_jet(seeds, seeds);
      for (int j = 0; j < d; ++j) J[i * d + j] = Fi.partial_vars({j});
    }
    if (std::fabs(det_dense(std::move(J), d)) < 1e-10)
      throw NotADivergenceError("bayes map is degenerate at a sampled point");
  }
  validate_cost(cf);
  return cf;
}

CostFunction swapped(const CostFunction& cost,
                     std::optional<std::vector<std::array<double, 2>>>
                         new_x_box) {
  CostFunction s;
  s.d = cost.d;
  s.family = cost.family + "_swapped";
  s.domain.x_box = new_x_box ? std::move(*new_x_box) : cost.domain.x_box;
  s.domain.tubular_radius = cost.domain.tubular_radius;
  s.domain.convexity_lambda = cost.domain.convexity_lambda;
  s.domain.y_box = cost.domain.x_box;

  const auto swap_field = [](const FieldXY& f) {
    FieldXY g;
    g.d = f.d;
    g.value = [f](std::span<const double> x, std::span<const double> y) {
      return f.value(y, x);
    };
    g.jets = [f](std::span<const Jet> x, std::span<const Jet> y) {
      return f.jets(y, x);
    };
    return g;
  };
  s.u = swap_field(cost.u);
  if (cost.c) s.c = swap_field(*cost.c);
  if (cost.psi) s.phi = swap_field(*cost.psi);
  if (cost.phi) s.psi = swap_field(*cost.phi);
  s.y_guess = identity_guess();
  validate_cost(s);
  return s;
}

double cross_difference(const CostFunction& cost, std::span<const double> x,
                        std::span<const double> y, std::span<const double> xi,
                        std::span<const double> eta) {
  const int d = cost.d;
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  for (int i = 0; i < d; ++i) xs[i] += xi[i];
  const double a = cost.u.value(xs, y);   // u(x+xi, y)
  for (int i = 0; i < d; ++i) ys[i] += eta[i];
  const double b = cost.u.value(x, ys);   // u(x, y+eta)
  const double c = cost.u.value(x, y);    // u(x, y)
  const double e = cost.u.value(xs, ys);  // u(x+xi, y+eta)
  return a + b - c - e;
}

}  // namespace geolap
