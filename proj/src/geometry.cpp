#include "geolap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "geolap/errors.hpp"
#include "geolap/jet.hpp"
#include "geolap/linalg.hpp"

namespace geolap {

namespace {

// Order-1 jet along Sigma of one ambient partial of F.  The value is the
// plain partial F_alpha at (x, y(x)); the slope in x_l composes the chain
// rule with the graph map: F_{alpha + e_l} + F_{alpha + e_{d+m}} dy[l][m].
// `vars` lists ambient variable ids with repetition, as in partial_vars.
Jet field_of(const Jet& F, std::span<const int> vars, const SigmaPoint& sp) {
  const int d = sp.d;
  std::vector<int> alpha(static_cast<std::size_t>(2 * d), 0);
  for (int v : vars) ++alpha[static_cast<std::size_t>(v)];
  std::vector<double> coeffs(static_cast<std::size_t>(d) + 1, 0.0);
  coeffs[0] = F.partial(alpha);
  for (int l = 0; l < d; ++l) {
    ++alpha[static_cast<std::size_t>(l)];
    double slope = F.partial(alpha);
    --alpha[static_cast<std::size_t>(l)];
    for (int mm = 0; mm < d; ++mm) {
      ++alpha[static_cast<std::size_t>(d + mm)];
      slope += F.partial(alpha) * sp.dy[static_cast<std::size_t>(l * d + mm)];
      --alpha[static_cast<std::size_t>(d + mm)];
    }
    coeffs[static_cast<std::size_t>(1 + l)] = slope;
  }
  return Jet::from_coeffs(d, 1, sp.x, coeffs);
}

Jet field_of(const Jet& F, std::initializer_list<int> vars,
             const SigmaPoint& sp) {
  return field_of(F, std::span<const int>(vars.begin(), vars.size()), sp);
}

// All core quantities at one point, computed once and shared by the public
// entry points.  Connection-level objects are kept as order-1 jets in the d
// surface variables so that one more tangential derivative (needed by the
// intrinsic curvature and by the divergence term) is a coefficient read.
class Surface {
 public:
  explicit Surface(const SigmaPoint& sp);

  int d;
  const SigmaPoint& sp;
  const Jet& U;

  // field jets, flat row-major
  std::vector<Jet> C, CIm, g, ginv, dyF, dxF;
  std::vector<Jet> GX, GY;          // ambient Christoffels [k][i][j]
  std::vector<Jet> h_up, gamma;     // [k][i][j]
  std::vector<Jet> h_low;           // [i][j][k]
  std::vector<Jet> H_up, H_low;     // [k]

  // plain values
  std::vector<double> Cv, CImv, gv, ginvv, ginv_bar;
  std::vector<double> B;            // [i][j][k][l], slots j and k barred
  std::vector<double> Riem;         // intrinsic R_{ijkl}
  double mt = 0.0, m = 0.0;
  double mt_sign = 1.0;
  double Rt = 0.0;
  double R = 0.0, R_gauss = 0.0;
  double hh_raw = 0.0, HH_raw = 0.0;
  double gauss_full = 0.0, h_sym = 0.0, gamma_res = 0.0;

  Jet uf(std::initializer_list<int> vars) const {
    return field_of(U, vars, sp);
  }
  double val(const std::vector<Jet>& t, int flat) const {
    return t[static_cast<std::size_t>(flat)].value();
  }
  // tangential derivative of an order-1 field jet
  static double slope(const Jet& fj, int l) {
    return fj.coeffs()[static_cast<std::size_t>(1 + l)];
  }
};

Surface::Surface(const SigmaPoint& point)
    : d(point.d), sp(point), U(point.u_jets) {
  if (U.order() < 4) {
    throw CapabilityError("geometry requires order-4 jets on Sigma");
  }
  if (sp.d2y.empty() || sp.d3y.empty()) {
    throw CapabilityError("geometry requires second and third graph derivatives");
  }
  const int n = d;
  const auto at2 = [n](int i, int j) { return i * n + j; };
  const auto at3 = [n](int k, int i, int j) { return (k * n + i) * n + j; };
  const auto at4 = [n](int i, int j, int k, int l) {
    return ((i * n + j) * n + k) * n + l;
  };

  // Mixed Hessian, its inverse, and the densities.  Degeneracy of c is
  // judged against the row scale so that uniformly tiny costs still pass.
  Cv.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Cv[static_cast<std::size_t>(at2(i, j))] = U.partial_vars({i, d + j});
    }
  }
  double scale = 1.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      row = std::max(row, std::fabs(Cv[static_cast<std::size_t>(at2(i, j))]));
    }
    scale *= row;
  }
  const double detC = det_dense(Cv, n);
  if (std::fabs(detC) <= 1e-12 * std::max(scale, 1e-300)) {
    throw NonDegeneracyError("mixed Hessian c_{ij} is singular on Sigma");
  }
  mt = std::fabs(detC);
  mt_sign = detC < 0.0 ? -1.0 : 1.0;
  CImv = invert_dense(Cv, n);

  // Induced metric.  For genuine graph points g = c u_yy^{-1} c^T is
  // automatically positive definite; the check guards corrupted input.
  gv.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gv[static_cast<std::size_t>(at2(i, j))] = U.partial_vars({i, j});
    }
  }
  if (!is_pd(gv, n)) {
    throw MetricSignatureError(
        "induced metric on Sigma is not positive definite");
  }
  m = std::sqrt(det_dense(gv, n));
  ginvv = invert_dense(gv, n);

  // Field jets of the first-derivative-level objects.
  C.resize(static_cast<std::size_t>(n) * n);
  g.resize(static_cast<std::size_t>(n) * n);
  dyF.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      C[static_cast<std::size_t>(at2(i, j))] = uf({i, d + j});
      g[static_cast<std::size_t>(at2(i, j))] = uf({i, j});
      std::vector<double> coeffs(static_cast<std::size_t>(n) + 1, 0.0);
      coeffs[0] = sp.dy[static_cast<std::size_t>(at2(i, j))];
      for (int l = 0; l < n; ++l) {
        coeffs[static_cast<std::size_t>(1 + l)] =
            sp.d2y[static_cast<std::size_t>(at3(i, l, j))];
      }
      dyF[static_cast<std::size_t>(at2(i, j))] =
          Jet::from_coeffs(n, 1, sp.x, coeffs);
    }
  }
  CIm = invert_jet(C, n);
  ginv = invert_jet(g, n);
  dxF = invert_jet(dyF, n);

  // u_yy^{-1} restricted to Sigma, in barred indices: dy g^{-1} dy^T.
  ginv_bar.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          s += sp.dy[static_cast<std::size_t>(at2(j, a))] *
               ginvv[static_cast<std::size_t>(at2(j, l))] *
               sp.dy[static_cast<std::size_t>(at2(l, b))];
        }
      }
      ginv_bar[static_cast<std::size_t>(at2(a, b))] = s;
    }
  }

  // Ambient Christoffels.  Only the pure blocks survive; the mixed ones
  // vanish identically for this metric.
  GX.resize(static_cast<std::size_t>(n) * n * n);
  GY.resize(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Jet sx = uf({i, j, d}) * 0.0;
        Jet sy = sx;
        for (int mm = 0; mm < n; ++mm) {
          sx = sx + CIm[static_cast<std::size_t>(at2(mm, k))] * uf({i, j, d + mm});
          sy = sy + CIm[static_cast<std::size_t>(at2(k, mm))] * uf({mm, d + i, d + j});
        }
        GX[static_cast<std::size_t>(at3(k, i, j))] = sx;
        GY[static_cast<std::size_t>(at3(k, i, j))] = sy;
      }
    }
  }

  // Second fundamental form and induced connection.  `pulled` is the
  // barred-block Christoffel pulled back through the graph plus the graph
  // curvature term; h and gamma are its half-difference/half-sum with the
  // unbarred block.
  std::vector<Jet> d2yF(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int mm = 0; mm < n; ++mm) {
        std::vector<double> coeffs(static_cast<std::size_t>(n) + 1, 0.0);
        coeffs[0] = sp.d2y[static_cast<std::size_t>(at3(i, j, mm))];
        for (int l = 0; l < n; ++l) {
          coeffs[static_cast<std::size_t>(1 + l)] =
              sp.d3y[static_cast<std::size_t>(at4(i, j, l, mm))];
        }
        d2yF[static_cast<std::size_t>(at3(i, j, mm))] =
            Jet::from_coeffs(n, 1, sp.x, coeffs);
      }
    }
  }
  h_up.resize(static_cast<std::size_t>(n) * n * n);
  gamma.resize(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Jet pulled = GX[0] * 0.0;
        for (int mm = 0; mm < n; ++mm) {
          Jet inner = d2yF[static_cast<std::size_t>(at3(i, j, mm))];
          for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
              inner = inner + dyF[static_cast<std::size_t>(at2(i, a))] *
                              dyF[static_cast<std::size_t>(at2(j, b))] *
                              GY[static_cast<std::size_t>(at3(mm, a, b))];
            }
          }
          pulled = pulled + dxF[static_cast<std::size_t>(at2(mm, k))] * inner;
        }
        const Jet& gx = GX[static_cast<std::size_t>(at3(k, i, j))];
        h_up[static_cast<std::size_t>(at3(k, i, j))] = (gx - pulled) * 0.5;
        gamma[static_cast<std::size_t>(at3(k, i, j))] = (gx + pulled) * 0.5;
      }
    }
  }

  // Independent cross-check of gamma: the Levi-Civita coefficients of the
  // induced metric, read off the tangential slopes of the g field jets.
  gamma_res = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double lc = 0.0;
        for (int l = 0; l < n; ++l) {
          lc += 0.5 * ginvv[static_cast<std::size_t>(at2(k, l))] *
                (slope(g[static_cast<std::size_t>(at2(j, l))], i) +
                 slope(g[static_cast<std::size_t>(at2(i, l))], j) -
                 slope(g[static_cast<std::size_t>(at2(i, j))], l));
        }
        gamma_res = std::max(
            gamma_res,
            std::fabs(lc - val(gamma, at3(k, i, j))));
      }
    }
  }

  // Covariant h, symmetry defect, mean curvature.
  h_low.resize(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        Jet s = h_up[0] * 0.0;
        for (int l = 0; l < n; ++l) {
          s = s + h_up[static_cast<std::size_t>(at3(l, i, j))] *
                  g[static_cast<std::size_t>(at2(l, k))];
        }
        h_low[static_cast<std::size_t>(at3(i, j, k))] = s;
      }
    }
  }
  h_sym = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double ref = val(h_low, at3(i, j, k));
        const int perms[5][3] = {
            {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
        for (const auto& p : perms) {
          h_sym = std::max(
              h_sym, std::fabs(ref - val(h_low, at3(p[0], p[1], p[2]))));
        }
      }
    }
  }
  H_up.resize(static_cast<std::size_t>(n));
  H_low.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Jet s = h_up[0] * 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        s = s + ginv[static_cast<std::size_t>(at2(i, j))] *
                h_up[static_cast<std::size_t>(at3(k, i, j))];
      }
    }
    H_up[static_cast<std::size_t>(k)] = s;
  }
  for (int k = 0; k < n; ++k) {
    Jet s = h_up[0] * 0.0;
    for (int l = 0; l < n; ++l) {
      s = s + g[static_cast<std::size_t>(at2(k, l))] *
              H_up[static_cast<std::size_t>(l)];
    }
    H_low[static_cast<std::size_t>(k)] = s;
  }

  // Ambient curvature components and scalar.
  B.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double corr = 0.0;
          for (int s = 0; s < n; ++s) {
            for (int t = 0; t < n; ++t) {
              corr += U.partial_vars({i, l, d + s}) *
                      CImv[static_cast<std::size_t>(at2(s, t))] *
                      U.partial_vars({t, d + j, d + k});
            }
          }
          B[static_cast<std::size_t>(at4(i, j, k, l))] =
              0.5 * (U.partial_vars({i, l, d + j, d + k}) - corr);
        }
      }
    }
  }
  Rt = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          Rt += 8.0 * CImv[static_cast<std::size_t>(at2(j, i))] *
                CImv[static_cast<std::size_t>(at2(k, l))] *
                B[static_cast<std::size_t>(at4(i, j, k, l))];
        }
      }
    }
  }

  // Intrinsic curvature by the Christoffel route (authoritative).
  Riem.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double r = 0.0;
          for (int mm = 0; mm < n; ++mm) {
            double bracket =
                slope(gamma[static_cast<std::size_t>(at3(mm, i, k))], j) -
                slope(gamma[static_cast<std::size_t>(at3(mm, j, k))], i);
            for (int s = 0; s < n; ++s) {
              bracket += val(gamma, at3(s, i, k)) * val(gamma, at3(mm, j, s)) -
                         val(gamma, at3(s, j, k)) * val(gamma, at3(mm, i, s));
            }
            r += gv[static_cast<std::size_t>(at2(mm, l))] * bracket;
          }
          Riem[static_cast<std::size_t>(at4(i, j, k, l))] = r;
        }
      }
    }
  }
  R = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          R += ginvv[static_cast<std::size_t>(at2(i, k))] *
               ginvv[static_cast<std::size_t>(at2(j, l))] *
               Riem[static_cast<std::size_t>(at4(i, j, k, l))];
        }
      }
    }
  }

  // The same scalar by the contracted Gauss equation, and the full
  // uncontracted identity as a max-norm residual.
  double sect = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        for (int k = 0; k < n; ++k) {
          sect += (-B[static_cast<std::size_t>(at4(i, a, b, k))]) *
                  ginvv[static_cast<std::size_t>(at2(i, k))] *
                  ginv_bar[static_cast<std::size_t>(at2(a, b))];
        }
      }
    }
  }
  HH_raw = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      HH_raw += val(H_low, i) * val(H_low, j) *
                ginvv[static_cast<std::size_t>(at2(i, j))];
    }
  }
  hh_raw = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          for (int mm = 0; mm < n; ++mm) {
            for (int nn = 0; nn < n; ++nn) {
              hh_raw += val(h_low, at3(i, j, k)) * val(h_low, at3(l, mm, nn)) *
                        ginvv[static_cast<std::size_t>(at2(i, l))] *
                        ginvv[static_cast<std::size_t>(at2(j, mm))] *
                        ginvv[static_cast<std::size_t>(at2(k, nn))];
            }
          }
        }
      }
    }
  }
  R_gauss = 2.0 * sect + 0.25 * Rt + (-HH_raw) - (-hh_raw);
  gauss_full = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double lhs = 0.0;
          for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
              const double dja = sp.dy[static_cast<std::size_t>(at2(j, a))];
              const double dia = sp.dy[static_cast<std::size_t>(at2(i, a))];
              const double dkb = sp.dy[static_cast<std::size_t>(at2(k, b))];
              const double dlb = sp.dy[static_cast<std::size_t>(at2(l, b))];
              lhs += B[static_cast<std::size_t>(at4(i, a, b, l))] * dja * dkb -
                     B[static_cast<std::size_t>(at4(i, a, b, k))] * dja * dlb -
                     B[static_cast<std::size_t>(at4(j, a, b, l))] * dia * dkb +
                     B[static_cast<std::size_t>(at4(j, a, b, k))] * dia * dlb;
            }
          }
          double quad = 0.0;
          for (int s = 0; s < n; ++s) {
            for (int t = 0; t < n; ++t) {
              quad += (val(h_low, at3(i, k, s)) * val(h_low, at3(j, l, t)) -
                       val(h_low, at3(i, l, s)) * val(h_low, at3(j, k, t))) *
                      ginvv[static_cast<std::size_t>(at2(s, t))];
            }
          }
          const double rhs =
              Riem[static_cast<std::size_t>(at4(i, j, k, l))] + quad;
          gauss_full = std::max(gauss_full, std::fabs(lhs - rhs));
        }
      }
    }
  }
}

// Ambient jets shared by the density-dependent entry points: the mixed
// Hessian of u as a matrix of (2d)-variable jets, its determinant with the
// orientation sign fixed, and f = rho / mt.
Jet ambient_mt(const Jet& U, int d) {
  std::vector<Jet> camb(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      camb[static_cast<std::size_t>(i * d + j)] = U.deriv(i).deriv(d + j);
    }
  }
  Jet det = det_jet(camb, d);
  if (det.value() < 0.0) det = det * -1.0;
  return det;
}

void require_field(const FieldXY& f, int d, const char* who) {
  if (!f) throw DomainError(std::string(who) + ": density field is empty");
  if (f.d != d) {
    throw DomainError(std::string(who) + ": density dimension mismatch");
  }
}

}  // namespace

GeometryReport geometry_report(const SigmaPoint& sp) {
  Surface s(sp);
  const int n = s.d;
  GeometryReport rep;
  rep.d = n;
  rep.mt = s.mt;
  rep.mt_sign = s.mt_sign;
  rep.m = s.m;

  const IndexClass Ub = IndexClass::unbarred;
  const IndexClass Bk = IndexClass::barred;
  rep.c_mixed = Tensor(n, 2, {Ub, Bk});
  rep.c_inv = Tensor(n, 2, {Bk, Ub});
  rep.g = Tensor(n, 2);
  rep.g_inv = Tensor(n, 2);
  std::copy(s.Cv.begin(), s.Cv.end(), rep.c_mixed.data().begin());
  std::copy(s.CImv.begin(), s.CImv.end(), rep.c_inv.data().begin());
  std::copy(s.gv.begin(), s.gv.end(), rep.g.data().begin());
  std::copy(s.ginvv.begin(), s.ginvv.end(), rep.g_inv.data().begin());

  rep.gamma_ambient_x = Tensor(n, 3);
  rep.gamma_ambient_y = Tensor(n, 3, {Bk, Bk, Bk});
  rep.h = Tensor(n, 3);
  rep.h_up = Tensor(n, 3);
  rep.gamma_sigma = Tensor(n, 3);
  rep.H_up = Tensor(n, 1);
  rep.H_low = Tensor(n, 1);
  for (int flat = 0; flat < n * n * n; ++flat) {
    rep.gamma_ambient_x.data()[static_cast<std::size_t>(flat)] =
        s.GX[static_cast<std::size_t>(flat)].value();
    rep.gamma_ambient_y.data()[static_cast<std::size_t>(flat)] =
        s.GY[static_cast<std::size_t>(flat)].value();
    rep.h.data()[static_cast<std::size_t>(flat)] =
        s.h_low[static_cast<std::size_t>(flat)].value();
    rep.h_up.data()[static_cast<std::size_t>(flat)] =
        s.h_up[static_cast<std::size_t>(flat)].value();
    rep.gamma_sigma.data()[static_cast<std::size_t>(flat)] =
        s.gamma[static_cast<std::size_t>(flat)].value();
  }
  for (int k = 0; k < n; ++k) {
    rep.H_up.data()[static_cast<std::size_t>(k)] =
        s.H_up[static_cast<std::size_t>(k)].value();
    rep.H_low.data()[static_cast<std::size_t>(k)] =
        s.H_low[static_cast<std::size_t>(k)].value();
  }

  rep.Rt_tensor = Tensor(n, 4, {Ub, Bk, Bk, Ub});
  rep.R_tensor = Tensor(n, 4);
  std::copy(s.B.begin(), s.B.end(), rep.Rt_tensor.data().begin());
  std::copy(s.Riem.begin(), s.Riem.end(), rep.R_tensor.data().begin());
  rep.Rt_scalar = s.Rt;
  rep.R_scalar = s.R;
  rep.R_scalar_gauss = s.R_gauss;

  rep.hh_raw = s.hh_raw;
  rep.HH_raw = s.HH_raw;
  rep.hh_bracket = -s.hh_raw;
  rep.HH_bracket = -s.HH_raw;

  rep.gauss_residual = std::fabs(s.R - s.R_gauss);
  rep.gauss_residual_full = s.gauss_full;
  rep.h_sym_residual = s.h_sym;
  rep.gamma_residual = s.gamma_res;
  return rep;
}

std::pair<Tensor, double> ambient_metric(const SigmaPoint& sp) {
  const int d = sp.d;
  Tensor c(d, 2, {IndexClass::unbarred, IndexClass::barred});
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      c.at({i, j}) = sp.u_jets.partial_vars({i, d + j});
    }
  }
  std::vector<double> flat(c.data().begin(), c.data().end());
  const double detC = det_dense(std::move(flat), d);
  if (std::fabs(detC) <= 1e-300) {
    throw NonDegeneracyError("mixed Hessian c_{ij} is singular on Sigma");
  }
  return {std::move(c), std::fabs(detC)};
}

std::pair<Tensor, Tensor> ambient_christoffels(const SigmaPoint& sp) {
  const int d = sp.d;
  const Jet& U = sp.u_jets;
  std::vector<double> Cv(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Cv[static_cast<std::size_t>(i * d + j)] = U.partial_vars({i, d + j});
    }
  }
  const std::vector<double> CImv = invert_dense(std::move(Cv), d);
  Tensor gx(d, 3);
  Tensor gy(d, 3,
            {IndexClass::barred, IndexClass::barred, IndexClass::barred});
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double sx = 0.0, sy = 0.0;
        for (int mm = 0; mm < d; ++mm) {
          sx += CImv[static_cast<std::size_t>(mm * d + k)] *
                U.partial_vars({i, j, d + mm});
          sy += CImv[static_cast<std::size_t>(k * d + mm)] *
                U.partial_vars({mm, d + i, d + j});
        }
        gx.at({k, i, j}) = sx;
        gy.at({k, i, j}) = sy;
      }
    }
  }
  return {std::move(gx), std::move(gy)};
}

std::pair<Tensor, double> ambient_curvature(const SigmaPoint& sp) {
  const int d = sp.d;
  const Jet& U = sp.u_jets;
  std::vector<double> Cv(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Cv[static_cast<std::size_t>(i * d + j)] = U.partial_vars({i, d + j});
    }
  }
  const std::vector<double> CImv = invert_dense(std::move(Cv), d);
  Tensor rt(d, 4, {IndexClass::unbarred, IndexClass::barred,
                   IndexClass::barred, IndexClass::unbarred});
  double scalar = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          double corr = 0.0;
          for (int s = 0; s < d; ++s) {
            for (int t = 0; t < d; ++t) {
              corr += U.partial_vars({i, l, d + s}) *
                      CImv[static_cast<std::size_t>(s * d + t)] *
                      U.partial_vars({t, d + j, d + k});
            }
          }
          rt.at({i, j, k, l}) =
              0.5 * (U.partial_vars({i, l, d + j, d + k}) - corr);
        }
      }
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          scalar += 8.0 * CImv[static_cast<std::size_t>(j * d + i)] *
                    CImv[static_cast<std::size_t>(k * d + l)] *
                    rt.at({i, j, k, l});
        }
      }
    }
  }
  return {std::move(rt), scalar};
}

GradientSplit gradient_split(const FieldXY& f, const SigmaPoint& sp) {
  const int d = sp.d;
  require_field(f, d, "gradient_split");
  const Jet& U = sp.u_jets;

  std::vector<double> xy(sp.x);
  xy.insert(xy.end(), sp.y.begin(), sp.y.end());
  const std::vector<Jet> seeds = Jet::seed_vars(xy, 1);
  const Jet F = f.jets({seeds.data(), static_cast<std::size_t>(d)},
                       {seeds.data() + d, static_cast<std::size_t>(d)});

  std::vector<double> Cv(static_cast<std::size_t>(d) * d);
  std::vector<double> gv(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Cv[static_cast<std::size_t>(i * d + j)] = U.partial_vars({i, d + j});
      gv[static_cast<std::size_t>(i * d + j)] = U.partial_vars({i, j});
    }
  }
  const std::vector<double> CImv = invert_dense(Cv, d);

  // Raised ambient differential (xi, eta), then the frame coordinates from
  // the 2d x 2d system  G^i t_i + N^i n_i = (xi, eta).
  std::vector<double> rhs(static_cast<std::size_t>(2 * d), 0.0);
  for (int i = 0; i < d; ++i) {
    double xi = 0.0, eta = 0.0;
    for (int j = 0; j < d; ++j) {
      xi += CImv[static_cast<std::size_t>(j * d + i)] * F.partial_vars({d + j});
      eta += CImv[static_cast<std::size_t>(i * d + j)] * F.partial_vars({j});
    }
    rhs[static_cast<std::size_t>(i)] = -2.0 * xi;
    rhs[static_cast<std::size_t>(d + i)] = -2.0 * eta;
  }
  std::vector<double> M(static_cast<std::size_t>(4 * d) * d, 0.0);
  const int nn = 2 * d;
  for (int i = 0; i < d; ++i) {
    M[static_cast<std::size_t>(i * nn + i)] = 1.0;          // t_i, x-part
    M[static_cast<std::size_t>(i * nn + d + i)] = 1.0;      // n_i, x-part
    for (int mm = 0; mm < d; ++mm) {
      const double w = sp.dy[static_cast<std::size_t>(i * d + mm)];
      M[static_cast<std::size_t>((d + mm) * nn + i)] = w;       // t_i, y-part
      M[static_cast<std::size_t>((d + mm) * nn + d + i)] = -w;  // n_i, y-part
    }
  }
  const std::vector<double> sol = solve_dense(std::move(M), rhs, nn);

  GradientSplit out;
  out.G_up = Tensor(d, 1);
  out.N_up = Tensor(d, 1);
  out.G_low = Tensor(d, 1);
  out.N_low = Tensor(d, 1);
  for (int i = 0; i < d; ++i) {
    out.G_up.data()[static_cast<std::size_t>(i)] =
        sol[static_cast<std::size_t>(i)];
    out.N_up.data()[static_cast<std::size_t>(i)] =
        sol[static_cast<std::size_t>(d + i)];
  }
  for (int i = 0; i < d; ++i) {
    double gl = 0.0, nl = 0.0;
    for (int j = 0; j < d; ++j) {
      gl += gv[static_cast<std::size_t>(i * d + j)] *
            out.G_up.data()[static_cast<std::size_t>(j)];
      nl += gv[static_cast<std::size_t>(i * d + j)] *
            out.N_up.data()[static_cast<std::size_t>(j)];
    }
    out.G_low.data()[static_cast<std::size_t>(i)] = gl;
    out.N_low.data()[static_cast<std::size_t>(i)] = nl;
  }

  for (int i = 0; i < d; ++i) {
    const double lhs = F.partial_vars({i});
    const double split =
        0.5 * (out.G_low.data()[static_cast<std::size_t>(i)] -
               out.N_low.data()[static_cast<std::size_t>(i)]);
    out.dif_residual = std::max(out.dif_residual, std::fabs(lhs - split));

    double rebuilt = 0.0;
    for (int j = 0; j < d; ++j) {
      rebuilt += -0.5 * Cv[static_cast<std::size_t>(j * d + i)] *
                 (sol[static_cast<std::size_t>(j)] +
                  sol[static_cast<std::size_t>(d + j)]);
    }
    out.recon_residual = std::max(
        out.recon_residual, std::fabs(F.partial_vars({d + i}) - rebuilt));
  }
  return out;
}

double ambient_laplacian(const FieldXY& f, const SigmaPoint& sp) {
  const int d = sp.d;
  require_field(f, d, "ambient_laplacian");
  std::vector<double> xy(sp.x);
  xy.insert(xy.end(), sp.y.begin(), sp.y.end());
  const std::vector<Jet> seeds = Jet::seed_vars(xy, 2);
  const Jet F = f.jets({seeds.data(), static_cast<std::size_t>(d)},
                       {seeds.data() + d, static_cast<std::size_t>(d)});

  std::vector<double> Cv(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Cv[static_cast<std::size_t>(i * d + j)] =
          sp.u_jets.partial_vars({i, d + j});
    }
  }
  const std::vector<double> CImv = invert_dense(std::move(Cv), d);
  double lap = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      lap += CImv[static_cast<std::size_t>(i * d + j)] *
             F.partial_vars({d + i, j});
    }
  }
  return -4.0 * lap;
}

std::pair<double, double> u_derivative_check(const SigmaPoint& sp) {
  Surface s(sp);
  const int d = s.d;
  const Jet& U = s.U;
  const auto at2 = [d](int i, int j) { return i * d + j; };
  const auto at3 = [d](int k, int i, int j) { return (k * d + i) * d + j; };

  // E(i; j, k): the mixed third derivative u_{x_j x_k ybar_m} contracted
  // with dy along slot i; the building block of both formulas.
  const auto mixed3 = [&](int i, int j, int k) {
    double s3 = 0.0;
    for (int mm = 0; mm < d; ++mm) {
      s3 += U.partial_vars({j, k, d + mm}) *
            sp.dy[static_cast<std::size_t>(at2(i, mm))];
    }
    return s3;
  };

  double res3 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        const double lhs = U.partial_vars({i, j, k});
        const double rhs = -2.0 * s.val(s.h_low, at3(i, j, k)) -
                           (mixed3(i, j, k) + mixed3(j, i, k) + mixed3(k, i, j));
        res3 = std::max(res3, std::fabs(lhs - rhs));
      }
    }
  }

  // Fourth derivative: one tangential derivative of h plus the five mixed
  // correction groups.
  const auto mixed4_bb = [&](int i, int j, int k, int l) {
    // u_{x_j x_k ybar ybar} dy_i dy_l
    double s4 = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        s4 += U.partial_vars({j, k, d + a, d + b}) *
              sp.dy[static_cast<std::size_t>(at2(i, a))] *
              sp.dy[static_cast<std::size_t>(at2(l, b))];
      }
    }
    return s4;
  };
  const auto mixed4_x = [&](int i, int j, int k, int l) {
    // u_{x_j x_k x_l ybar} dy_i
    double s4 = 0.0;
    for (int a = 0; a < d; ++a) {
      s4 += U.partial_vars({j, k, l, d + a}) *
            sp.dy[static_cast<std::size_t>(at2(i, a))];
    }
    return s4;
  };

  double res4 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          const double lhs = U.partial_vars({i, j, k, l});

          const double dh = Surface::slope(
              s.h_low[static_cast<std::size_t>(at3(i, j, k))], l);

          const double grp_bb = mixed4_bb(i, j, k, l) + mixed4_bb(j, i, k, l) +
                                mixed4_bb(k, i, j, l);
          const double grp_x = mixed4_x(i, j, k, l) + mixed4_x(j, i, k, l) +
                               mixed4_x(k, i, j, l) + mixed4_x(l, i, j, k);

          // d_l y^b c^{st} pairs: dy_l lands on the barred slot of the
          // second factor.
          double grp_pull = 0.0;
          for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
              const double dyia = sp.dy[static_cast<std::size_t>(at2(i, a))];
              const double dyja = sp.dy[static_cast<std::size_t>(at2(j, a))];
              const double dyka = sp.dy[static_cast<std::size_t>(at2(k, a))];
              const double dylb = sp.dy[static_cast<std::size_t>(at2(l, b))];
              for (int ss = 0; ss < d; ++ss) {
                for (int tt = 0; tt < d; ++tt) {
                  const double cst =
                      s.CImv[static_cast<std::size_t>(at2(ss, tt))];
                  grp_pull +=
                      cst * dylb *
                      (U.partial_vars({tt, d + a, d + b}) *
                           U.partial_vars({j, k, d + ss}) * dyia +
                       U.partial_vars({tt, d + a, d + b}) *
                           U.partial_vars({i, k, d + ss}) * dyja +
                       U.partial_vars({tt, d + a, d + b}) *
                           U.partial_vars({i, j, d + ss}) * dyka);
                }
              }
            }
          }

          double grp_uy = 0.0;
          for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
              const double ub = s.ginv_bar[static_cast<std::size_t>(at2(a, b))];
              grp_uy += ub * (U.partial_vars({i, j, d + a}) *
                                  U.partial_vars({k, l, d + b}) +
                              U.partial_vars({i, k, d + a}) *
                                  U.partial_vars({j, l, d + b}) +
                              U.partial_vars({i, l, d + a}) *
                                  U.partial_vars({j, k, d + b}));
            }
          }

          double grp_h = 0.0;
          for (int ss = 0; ss < d; ++ss) {
            for (int tt = 0; tt < d; ++tt) {
              const double cst = s.CImv[static_cast<std::size_t>(at2(ss, tt))];
              grp_h += cst * (U.partial_vars({i, j, d + ss}) *
                                  s.val(s.h_low, at3(k, l, tt)) +
                              U.partial_vars({i, k, d + ss}) *
                                  s.val(s.h_low, at3(j, l, tt)) +
                              U.partial_vars({j, k, d + ss}) *
                                  s.val(s.h_low, at3(i, l, tt)));
            }
          }

          const double rhs = -2.0 * dh - grp_bb - grp_x + grp_pull + grp_uy -
                             2.0 * grp_h;
          res4 = std::max(res4, std::fabs(lhs - rhs));
        }
      }
    }
  }
  return {res3, res4};
}

std::pair<double, double> mt_derivative_check(const SigmaPoint& sp) {
  const int d = sp.d;
  const Jet& U = sp.u_jets;
  const Jet MT = ambient_mt(U, d);
  const double mtv = MT.value();

  std::vector<double> Cv(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Cv[static_cast<std::size_t>(i * d + j)] = U.partial_vars({i, d + j});
    }
  }
  const std::vector<double> CImv = invert_dense(std::move(Cv), d);
  const auto cim = [&](int row, int col) {
    return CImv[static_cast<std::size_t>(row * d + col)];
  };

  double res1 = 0.0;
  for (int i = 0; i < d; ++i) {
    double rhs = 0.0;
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        rhs += cim(k, j) * U.partial_vars({i, j, d + k});
      }
    }
    res1 = std::max(res1, std::fabs(MT.partial_vars({i}) - rhs * mtv));
  }

  double res2 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double t1 = 0.0, t2 = 0.0, t3 = 0.0;
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          t1 += cim(l, k) * U.partial_vars({i, j, k, d + l});
          for (int mm = 0; mm < d; ++mm) {
            for (int nn = 0; nn < d; ++nn) {
              // c^{k nbar} c^{lbar m} c_{i k lbar} c_{j m nbar}
              t2 += cim(nn, k) * cim(l, mm) * U.partial_vars({i, k, d + l}) *
                    U.partial_vars({j, mm, d + nn});
              // c^{k lbar} c^{m nbar} c_{i k lbar} c_{j m nbar}
              t3 += cim(l, k) * cim(nn, mm) * U.partial_vars({i, k, d + l}) *
                    U.partial_vars({j, mm, d + nn});
            }
          }
        }
      }
      const double rhs = (t1 - t2 + t3) * mtv;
      res2 = std::max(res2, std::fabs(MT.partial_vars({i, j}) - rhs));
    }
  }
  return {res1, res2};
}

double laplace_c1(int d, std::span<const double> B, double r0,
                  std::span<const double> r1, std::span<const double> r2,
                  std::span<const double> u3, std::span<const double> u4) {
  const auto b = [&](int i, int j) {
    return B[static_cast<std::size_t>(i * d + j)];
  };
  const auto t3 = [&](int i, int j, int k) {
    return u3[static_cast<std::size_t>((i * d + j) * d + k)];
  };
  const auto t4 = [&](int i, int j, int k, int l) {
    return u4[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
  };

  double quad = 0.0;  // 1/2 B^{ij} r_{ij}
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      quad += 0.5 * b(i, j) * r2[static_cast<std::size_t>(i * d + j)];
    }
  }
  double lin = 0.0;  // -1/2 u_{ijk} B^{ij} B^{kl} r_l
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          lin -= 0.5 * t3(i, j, k) * b(i, j) * b(k, l) *
                 r1[static_cast<std::size_t>(l)];
        }
      }
    }
  }
  double q4 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          q4 += t4(i, j, k, l) * b(i, j) * b(k, l);
          for (int mm = 0; mm < d; ++mm) {
            for (int nn = 0; nn < d; ++nn) {
              s1 += t3(i, j, k) * t3(l, mm, nn) * b(i, j) * b(k, l) * b(mm, nn);
              s2 += t3(i, j, k) * t3(l, mm, nn) * b(i, l) * b(j, mm) * b(k, nn);
            }
          }
        }
      }
    }
  }
  return quad + lin + r0 * (-0.125 * q4 + 0.125 * s1 + s2 / 12.0);
}

IntegrandPoint integrand_point(const SigmaPoint& sp, const FieldXY& rho) {
  const int d = sp.d;
  require_field(rho, d, "integrand_point");
  Surface s(sp);
  const Jet& U = s.U;
  const auto at2 = [d](int i, int j) { return i * d + j; };
  const auto at3 = [d](int k, int i, int j) { return (k * d + i) * d + j; };

  std::vector<double> xy(sp.x);
  xy.insert(xy.end(), sp.y.begin(), sp.y.end());
  const std::vector<Jet> seeds = Jet::seed_vars(xy, 2);
  const Jet rho_amb = rho.jets({seeds.data(), static_cast<std::size_t>(d)},
                               {seeds.data() + d, static_cast<std::size_t>(d)});
  const Jet mt_amb = ambient_mt(U, d);
  const Jet f_amb = rho_amb / mt_amb;

  IntegrandPoint out;
  out.m = s.m;
  out.mt = s.mt;
  out.f = f_amb.value();

  // Ambient Laplacian of f.
  double lap = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      lap += s.CImv[static_cast<std::size_t>(at2(i, j))] *
             f_amb.partial_vars({d + i, j});
    }
  }
  out.lap_f = -4.0 * lap;

  // Frame split of grad f as field jets along Sigma: the raised components
  // (xi, eta), with eta pushed to x-coordinates through dx.
  std::vector<Jet> GF(static_cast<std::size_t>(d));
  std::vector<Jet> NF(static_cast<std::size_t>(d));
  std::vector<Jet> etaF(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    Jet eta = s.CIm[0] * 0.0;
    for (int j = 0; j < d; ++j) {
      eta = eta + s.CIm[static_cast<std::size_t>(at2(i, j))] *
                  field_of(f_amb, {j}, sp);
    }
    etaF[static_cast<std::size_t>(i)] = eta * -2.0;
  }
  for (int i = 0; i < d; ++i) {
    Jet xi = s.CIm[0] * 0.0;
    for (int j = 0; j < d; ++j) {
      xi = xi + s.CIm[static_cast<std::size_t>(at2(j, i))] *
                field_of(f_amb, {d + j}, sp);
    }
    xi = xi * -2.0;
    Jet pushed = xi * 0.0;
    for (int mm = 0; mm < d; ++mm) {
      pushed = pushed + s.dxF[static_cast<std::size_t>(at2(mm, i))] *
                        etaF[static_cast<std::size_t>(mm)];
    }
    GF[static_cast<std::size_t>(i)] = (xi + pushed) * 0.5;
    NF[static_cast<std::size_t>(i)] = (xi - pushed) * 0.5;
  }

  // <N, H> = -N_i H^i.
  double nh = 0.0;
  for (int i = 0; i < d; ++i) {
    double nl = 0.0;
    for (int j = 0; j < d; ++j) {
      nl += s.gv[static_cast<std::size_t>(at2(i, j))] *
            NF[static_cast<std::size_t>(j)].value();
    }
    nh += nl * s.H_up[static_cast<std::size_t>(i)].value();
  }
  out.NH = -nh;

  out.L_geom = -0.125 * out.lap_f + 0.25 * out.NH +
               out.f * ((3.0 / 32.0) * s.Rt - 0.125 * s.R +
                        (1.0 / 24.0) * (-s.hh_raw) - 0.125 * (-s.HH_raw));

  // Coordinate form: classical first-order Laplace coefficient of the inner
  // y-integral at fixed x, divided by mt.
  {
    std::vector<double> uyy(static_cast<std::size_t>(d) * d);
    std::vector<double> r1(static_cast<std::size_t>(d));
    std::vector<double> r2(static_cast<std::size_t>(d) * d);
    std::vector<double> u3(static_cast<std::size_t>(d) * d * d);
    std::vector<double> u4(static_cast<std::size_t>(d) * d * d * d);
    for (int i = 0; i < d; ++i) {
      r1[static_cast<std::size_t>(i)] = rho_amb.partial_vars({d + i});
      for (int j = 0; j < d; ++j) {
        uyy[static_cast<std::size_t>(at2(i, j))] =
            U.partial_vars({d + i, d + j});
        r2[static_cast<std::size_t>(at2(i, j))] =
            rho_amb.partial_vars({d + i, d + j});
        for (int k = 0; k < d; ++k) {
          u3[static_cast<std::size_t>(at3(i, j, k))] =
              U.partial_vars({d + i, d + j, d + k});
          for (int l = 0; l < d; ++l) {
            u4[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)] =
                U.partial_vars({d + i, d + j, d + k, d + l});
          }
        }
      }
    }
    const std::vector<double> Byy = invert_dense(std::move(uyy), d);
    out.L_coord =
        laplace_c1(d, Byy, rho_amb.value(), r1, r2, u3, u4) / s.mt;
  }

  // Boundary field W = G + N - f H and the exact divergence term.
  const Jet fF = field_of(f_amb, {}, sp);
  std::vector<Jet> WF(static_cast<std::size_t>(d));
  std::vector<Jet> WlowF(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    WF[static_cast<std::size_t>(i)] =
        GF[static_cast<std::size_t>(i)] + NF[static_cast<std::size_t>(i)] -
        fF * s.H_up[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < d; ++j) {
    Jet w = WF[0] * 0.0;
    for (int k = 0; k < d; ++k) {
      w = w + s.g[static_cast<std::size_t>(at2(j, k))] *
              WF[static_cast<std::size_t>(k)];
    }
    WlowF[static_cast<std::size_t>(j)] = w;
  }
  double div = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double cov = Surface::slope(WlowF[static_cast<std::size_t>(j)], i);
      for (int k = 0; k < d; ++k) {
        cov -= s.val(s.gamma, at3(k, i, j)) *
               WlowF[static_cast<std::size_t>(k)].value();
      }
      div += s.ginvv[static_cast<std::size_t>(at2(i, j))] * cov;
    }
  }
  out.div_term = 0.25 * div;
  out.identity_residual = out.L_coord - out.L_geom - out.div_term;

  out.W_up = Tensor(d, 1);
  out.W_up_flipped = Tensor(d, 1);
  for (int i = 0; i < d; ++i) {
    out.W_up.data()[static_cast<std::size_t>(i)] =
        WF[static_cast<std::size_t>(i)].value();
    out.W_up_flipped.data()[static_cast<std::size_t>(i)] =
        GF[static_cast<std::size_t>(i)].value() -
        NF[static_cast<std::size_t>(i)].value() +
        fF.value() * s.H_up[static_cast<std::size_t>(i)].value();
  }
  return out;
}

}  // namespace geolap
