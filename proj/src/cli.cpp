// Strict JSON run configuration and the subcommand bodies behind the
// geolaplace binary.  Reports are written with a fixed float rendering
// (%.12e) and fixed iteration orders, so identical configurations produce
// byte-identical output.

#include "geolap/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "geolap/errors.hpp"
#include "geolap/geometry.hpp"
#include "geolap/graph.hpp"
#include "geolap/linalg.hpp"
#include "geolap/quadrature.hpp"
#include "geolap/tensor.hpp"

namespace geolap {
namespace {

using nlohmann::json;

// Residual tolerances applied by the geometry report and the verify table.
constexpr double kGaussTol = 1e-8;
constexpr double kHSymTol = 1e-10;
constexpr double kGammaTol = 1e-8;
constexpr double kLemmaTol = 1e-8;
constexpr double kIsserlisTol = 1e-9;
constexpr double kPointwiseTol = 1e-7;
constexpr double kClosureTol = 1e-6;
constexpr double kOracleTol = 1e-2;

// --------------------------------------------------------------------------
// strict JSON access

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }
}

void check_keys(const json& obj, const std::string& block,
                const std::vector<const char*>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known)
      throw ParseError(
          "config: unknown key \"" + it.key() + "\" in " + block, 0);
  }
}

const json& require_key(const json& obj, const std::string& block,
                        const char* key) {
  if (!obj.contains(key))
    throw ParseError("config: missing required key \"" + std::string(key) +
                         "\" in " + block,
                     0);
  return obj.at(key);
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ParseError("config: " + where + " must be a number", 0);
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer())
    throw ParseError("config: " + where + " must be an integer", 0);
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string())
    throw ParseError("config: " + where + " must be a string", 0);
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean())
    throw ParseError("config: " + where + " must be a boolean", 0);
  return v.get<bool>();
}

double number_or(const json& obj, const char* key, const std::string& block,
                 double fallback) {
  return obj.contains(key) ? as_number(obj.at(key), block + "." + key)
                           : fallback;
}

int int_or(const json& obj, const char* key, const std::string& block,
           int fallback) {
  return obj.contains(key) ? as_int(obj.at(key), block + "." + key) : fallback;
}

bool bool_or(const json& obj, const char* key, const std::string& block,
             bool fallback) {
  return obj.contains(key) ? as_bool(obj.at(key), block + "." + key)
                           : fallback;
}

std::vector<std::array<double, 2>> as_box(const json& v,
                                          const std::string& where) {
  if (!v.is_array())
    throw ParseError(
        "config: " + where + " must be an array of [lo, hi] pairs", 0);
  std::vector<std::array<double, 2>> box;
  box.reserve(v.size());
  for (const auto& side : v) {
    if (!side.is_array() || side.size() != 2)
      throw ParseError(
          "config: " + where + " must be an array of [lo, hi] pairs", 0);
    box.push_back({as_number(side[0], where), as_number(side[1], where)});
  }
  return box;
}

Expr parse_expr(const json& obj, const char* key, int d) {
  return Expr::parse(as_string(require_key(obj, "\"cost\"", key),
                               std::string("cost.") + key),
                     d);
}

// --------------------------------------------------------------------------
// config resolution

CostFunction build_cost(const json& jc) {
  if (!jc.is_object())
    throw ParseError("config: \"cost\" must be an object", 0);
  const std::string family =
      as_string(require_key(jc, "\"cost\"", "family"), "cost.family");
  const int d = as_int(require_key(jc, "\"cost\"", "d"), "cost.d");

  // Only keys meaningful for the requested family are accepted.
  std::vector<const char*> allowed{"family", "d",     "x_box",
                                   "y_box",  "delta", "lambda"};
  if (family == "translation" || family == "bregman")
    allowed.push_back("expr");
  else if (family == "fenchel_young")
    allowed.insert(allowed.end(), {"expr", "fstar"});
  else if (family == "log_divergence")
    allowed.push_back("alpha");
  else if (family == "bayes")
    allowed.push_back("F");
  else if (family == "c_divergence")
    allowed.insert(allowed.end(), {"c", "phi", "psi"});
  else if (family != "quadratic")
    throw ParseError("config: unknown cost family \"" + family + "\"", 0);
  check_keys(jc, "\"cost\"", allowed);

  DomainSpec dom;
  dom.x_box = as_box(require_key(jc, "\"cost\"", "x_box"), "cost.x_box");
  if (jc.contains("y_box")) dom.y_box = as_box(jc.at("y_box"), "cost.y_box");
  dom.tubular_radius = number_or(jc, "delta", "cost", 1.0);
  dom.convexity_lambda = number_or(jc, "lambda", "cost", 1.0);

  if (family == "quadratic") return make_quadratic(d, std::move(dom));
  if (family == "translation")
    return make_translation(parse_expr(jc, "expr", d), d, std::move(dom));
  if (family == "bregman")
    return make_bregman(parse_expr(jc, "expr", d), d, std::move(dom));
  if (family == "fenchel_young") {
    std::optional<Expr> fstar;
    if (jc.contains("fstar")) fstar = parse_expr(jc, "fstar", d);
    return make_fenchel_young(parse_expr(jc, "expr", d), fstar, d,
                              std::move(dom));
  }
  if (family == "log_divergence")
    return make_log_divergence(
        as_number(require_key(jc, "\"cost\"", "alpha"), "cost.alpha"), d,
        std::move(dom));
  if (family == "bayes") {
    const json& jf = require_key(jc, "\"cost\"", "F");
    if (!jf.is_array() || static_cast<int>(jf.size()) != d)
      throw ParseError(
          "config: cost.F must be an array of " + std::to_string(d) +
              " component expressions",
          0);
    std::vector<Expr> comps;
    comps.reserve(jf.size());
    for (const auto& c : jf) comps.push_back(Expr::parse(as_string(c, "cost.F"), d));
    return make_bayes(comps, d, std::move(dom));
  }
  // family == "c_divergence"
  return make_c_divergence(parse_expr(jc, "c", d), parse_expr(jc, "phi", d),
                           parse_expr(jc, "psi", d), d, std::move(dom));
}

// --------------------------------------------------------------------------
// report writers

void write_vector(std::ostream& out, std::span<const double> v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << format_sci(v[i]);
  }
  out << ']';
}

void write_box(std::ostream& out,
               std::span<const std::array<double, 2>> box) {
  out << '[';
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (i) out << ',';
    out << '[' << format_sci(box[i][0]) << ',' << format_sci(box[i][1])
        << ']';
  }
  out << ']';
}

void write_tensor_rec(std::ostream& out, std::span<const double> flat, int d,
                      int rank, std::size_t& pos) {
  if (rank == 0) {
    out << format_sci(flat[pos++]);
    return;
  }
  out << '[';
  for (int i = 0; i < d; ++i) {
    if (i) out << ',';
    write_tensor_rec(out, flat, d, rank - 1, pos);
  }
  out << ']';
}

// Nested-array JSON form of a row-major tensor; a rank-0 tensor prints as a
// bare number.
void write_tensor(std::ostream& out, const Tensor& t) {
  std::size_t pos = 0;
  write_tensor_rec(out, t.data(), t.d(), t.rank(), pos);
}

void write_tensor_field(std::ostream& out, const char* name, const Tensor& t,
                        bool trailing_comma = true) {
  out << "  \"" << name << "\": ";
  write_tensor(out, t);
  out << (trailing_comma ? ",\n" : "\n");
}

// --------------------------------------------------------------------------
// verify helpers

// Gauss-Hermite evaluation of E[z_{i1}...z_{ik}] for z ~ N(0, eps * cov):
// z = sqrt(2 eps) L s against the weight e^{-|s|^2} / pi^{d/2}.
double moment_by_quadrature(const std::vector<double>& cov, int d,
                            std::span<const int> indices, double eps) {
  const auto L = cholesky_lower(cov, d);
  const auto& rule = gauss_hermite(12);
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

// Worst Isserlis-vs-quadrature deviation over random index patterns of
// orders 1..6 against a random SPD covariance (even orders scaled by
// |moment| + 1, odd orders absolute).
double isserlis_worst(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const double eps = 0.37;

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
  double worst = 0.0;
  for (int order = 1; order <= 6; ++order) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<int> idx(static_cast<std::size_t>(order));
      for (auto& i : idx) i = pick(rng);
      const double lhs = isserlis_moment(cov, idx, eps);
      const double rhs = moment_by_quadrature(covm, d, idx, eps);
      const double scale = (order % 2 == 0) ? std::abs(lhs) + 1.0 : 1.0;
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  return worst;
}

// Independent coordinate-route quadrature of L_coord dm at a node count
// decorrelated from the assembled expansion; returns the scaled gap against
// I1_total (divergence-theorem closure).
double closure_residual(const RunConfig& cfg, const ExpansionResult& er) {
  const int d = cfg.cost.d;
  const int n = cfg.quad.interior_nodes + 9;
  std::vector<Rule1D> rules;
  rules.reserve(static_cast<std::size_t>(d));
  int total = 1;
  for (int a = 0; a < d; ++a) {
    const auto& side = cfg.cost.domain.x_box[static_cast<std::size_t>(a)];
    rules.push_back(legendre_on(side[0], side[1], n));
    total *= n;
  }
  std::vector<double> terms(static_cast<std::size_t>(total));
  for (int flat = 0; flat < total; ++flat) {
    std::vector<double> x(static_cast<std::size_t>(d));
    double w = 1.0;
    int rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      const int ia = rem % n;
      rem /= n;
      x[static_cast<std::size_t>(a)] =
          rules[static_cast<std::size_t>(a)].nodes[static_cast<std::size_t>(ia)];
      w *= rules[static_cast<std::size_t>(a)]
               .weights[static_cast<std::size_t>(ia)];
    }
    const SigmaPoint sp = sigma_point(cfg.cost, x);
    const IntegrandPoint ip = integrand_point(sp, cfg.density);
    terms[static_cast<std::size_t>(flat)] = w * ip.L_coord * ip.m;
  }
  const double route = pairwise_sum(terms);
  return std::abs(route - er.I1_total) / std::max(1.0, std::abs(er.I1_total));
}

struct VerifyRow {
  const char* name;
  double worst;
  double tol;
};

}  // namespace

// --------------------------------------------------------------------------

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

RunConfig RunConfig::from_json_text(const std::string& text,
                                    const RunOverrides& ov) {
  json j = parse_document(text);
  if (!j.is_object())
    throw ParseError("config: top-level document must be an object", 0);
  check_keys(j, "the top level",
             {"cost", "density", "quadrature", "verify", "output"});
  if (!j.contains("cost"))
    throw ParseError("config: missing required block \"cost\"", 0);
  if (!j.at("cost").is_object())
    throw ParseError("config: \"cost\" must be an object", 0);
  if (j.contains("quadrature") && !j.at("quadrature").is_object())
    throw ParseError("config: \"quadrature\" must be an object", 0);

  // Overrides rewrite the document before resolution, so validation sees
  // exactly what will run.
  if (ov.d) j["cost"]["d"] = *ov.d;
  if (ov.eps) j["quadrature"]["eps"] = *ov.eps;
  if (ov.nodes) {
    j["quadrature"]["interior_nodes"] = *ov.nodes;
    j["quadrature"]["boundary_nodes"] = *ov.nodes;
    j["quadrature"]["outer_nodes"] = *ov.nodes;
  }

  RunConfig cfg;
  cfg.cost = build_cost(j.at("cost"));

  const std::string density_src =
      j.contains("density") ? as_string(j.at("density"), "density")
                            : std::string("1");
  cfg.density = field_from_expr(Expr::parse(density_src, cfg.cost.d));

  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    check_keys(q, "\"quadrature\"",
               {"interior_nodes", "boundary_nodes", "outer_nodes",
                "hermite_nodes", "sigma_cut", "adaptive_tol", "tail_tol",
                "eps", "inner_scheme", "emit_samples"});
    cfg.quad.interior_nodes =
        int_or(q, "interior_nodes", "quadrature", cfg.quad.interior_nodes);
    cfg.quad.boundary_nodes =
        int_or(q, "boundary_nodes", "quadrature", cfg.quad.boundary_nodes);
    cfg.oracle.outer_nodes =
        int_or(q, "outer_nodes", "quadrature", cfg.oracle.outer_nodes);
    cfg.oracle.hermite_nodes =
        int_or(q, "hermite_nodes", "quadrature", cfg.oracle.hermite_nodes);
    cfg.oracle.sigma_cut =
        number_or(q, "sigma_cut", "quadrature", cfg.oracle.sigma_cut);
    cfg.oracle.adaptive_tol =
        number_or(q, "adaptive_tol", "quadrature", cfg.oracle.adaptive_tol);
    cfg.oracle.tail_tol =
        number_or(q, "tail_tol", "quadrature", cfg.oracle.tail_tol);
    if (q.contains("eps")) {
      if (!q.at("eps").is_array())
        throw ParseError("config: quadrature.eps must be an array of numbers",
                         0);
      std::vector<double> grid;
      grid.reserve(q.at("eps").size());
      for (const auto& e : q.at("eps"))
        grid.push_back(as_number(e, "quadrature.eps"));
      cfg.oracle.eps_list = std::move(grid);
    }
    if (q.contains("inner_scheme")) {
      const std::string scheme =
          as_string(q.at("inner_scheme"), "quadrature.inner_scheme");
      if (scheme == "gauss_hermite")
        cfg.oracle.inner_scheme = InnerScheme::gauss_hermite;
      else if (scheme == "adaptive")
        cfg.oracle.inner_scheme = InnerScheme::adaptive;
      else
        throw ParseError(
            "config: quadrature.inner_scheme must be \"gauss_hermite\" or "
            "\"adaptive\"",
            0);
    }
    cfg.emit_samples = bool_or(q, "emit_samples", "quadrature", false);
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    if (!v.is_object())
      throw ParseError("config: \"verify\" must be an object", 0);
    check_keys(v, "\"verify\"", {"samples", "seed"});
    cfg.verify_samples = int_or(v, "samples", "verify", cfg.verify_samples);
    if (cfg.verify_samples < 1)
      throw ParseError("config: verify.samples must be positive", 0);
    if (v.contains("seed")) {
      if (!v.at("seed").is_number_integer())
        throw ParseError("config: verify.seed must be an integer", 0);
      cfg.verify_seed = static_cast<unsigned>(v.at("seed").get<long long>());
    }
  }

  if (j.contains("output"))
    cfg.output_path = as_string(j.at("output"), "output");
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path,
                               const RunOverrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("config: cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), ov);
}

int cmd_geometry(const RunConfig& cfg, std::span<const double> x,
                 std::ostream& out) {
  if (static_cast<int>(x.size()) != cfg.cost.d)
    throw DomainError("geometry: expected a point with " +
                      std::to_string(cfg.cost.d) + " coordinates, got " +
                      std::to_string(x.size()));
  const SigmaPoint sp = sigma_point(cfg.cost, x);
  const GeometryReport rep = geometry_report(sp);
  const bool pass = rep.gauss_residual_full <= kGaussTol &&
                    rep.h_sym_residual <= kHSymTol &&
                    rep.gamma_residual <= kGammaTol;

  out << "{\n";
  out << "  \"family\": \"" << cfg.cost.family << "\",\n";
  out << "  \"d\": " << rep.d << ",\n";
  out << "  \"x\": ";
  write_vector(out, sp.x);
  out << ",\n  \"y\": ";
  write_vector(out, sp.y);
  out << ",\n";
  out << "  \"graph_residual\": " << format_sci(sp.graph_residual) << ",\n";
  out << "  \"mt\": " << format_sci(rep.mt) << ",\n";
  out << "  \"mt_sign\": " << format_sci(rep.mt_sign) << ",\n";
  out << "  \"m\": " << format_sci(rep.m) << ",\n";
  write_tensor_field(out, "c_mixed", rep.c_mixed);
  write_tensor_field(out, "c_inv", rep.c_inv);
  write_tensor_field(out, "g", rep.g);
  write_tensor_field(out, "g_inv", rep.g_inv);
  write_tensor_field(out, "gamma_ambient_x", rep.gamma_ambient_x);
  write_tensor_field(out, "gamma_ambient_y", rep.gamma_ambient_y);
  write_tensor_field(out, "gamma_sigma", rep.gamma_sigma);
  write_tensor_field(out, "h", rep.h);
  write_tensor_field(out, "h_up", rep.h_up);
  write_tensor_field(out, "H_up", rep.H_up);
  write_tensor_field(out, "H_low", rep.H_low);
  write_tensor_field(out, "Rt_tensor", rep.Rt_tensor);
  out << "  \"Rt_scalar\": " << format_sci(rep.Rt_scalar) << ",\n";
  write_tensor_field(out, "R_tensor", rep.R_tensor);
  out << "  \"R_scalar\": " << format_sci(rep.R_scalar) << ",\n";
  out << "  \"R_scalar_gauss\": " << format_sci(rep.R_scalar_gauss) << ",\n";
  out << "  \"hh_bracket\": " << format_sci(rep.hh_bracket) << ",\n";
  out << "  \"HH_bracket\": " << format_sci(rep.HH_bracket) << ",\n";
  out << "  \"residuals\": {\"gauss\": " << format_sci(rep.gauss_residual)
      << ", \"gauss_full\": " << format_sci(rep.gauss_residual_full)
      << ", \"h_sym\": " << format_sci(rep.h_sym_residual)
      << ", \"gamma\": " << format_sci(rep.gamma_residual) << "},\n";
  out << "  \"tolerances\": {\"gauss_full\": " << format_sci(kGaussTol)
      << ", \"h_sym\": " << format_sci(kHSymTol)
      << ", \"gamma\": " << format_sci(kGammaTol) << "},\n";
  out << "  \"pass\": " << (pass ? "true" : "false") << "\n}\n";
  return pass ? 0 : 1;
}

int cmd_expand(const RunConfig& cfg, std::ostream& out) {
  const ExpansionResult er = expand(cfg.cost, cfg.density, cfg.quad);
  out << "{\n";
  out << "  \"family\": \"" << cfg.cost.family << "\",\n";
  out << "  \"d\": " << cfg.cost.d << ",\n";
  out << "  \"interior_nodes\": " << er.interior_nodes << ",\n";
  out << "  \"boundary_nodes\": " << er.boundary_nodes << ",\n";
  out << "  \"x_box\": ";
  write_box(out, er.x_box);
  out << ",\n";
  out << "  \"I0\": " << format_sci(er.I0) << ",\n";
  out << "  \"I1_interior\": " << format_sci(er.I1_interior) << ",\n";
  out << "  \"I1_boundary\": " << format_sci(er.I1_boundary) << ",\n";
  out << "  \"I1_total\": " << format_sci(er.I1_total);
  if (cfg.emit_samples) {
    out << ",\n  \"samples\": [\n";
    for (std::size_t i = 0; i < er.samples.size(); ++i) {
      const auto& s = er.samples[i];
      out << "    {\"x\": ";
      write_vector(out, s.x);
      out << ", \"m\": " << format_sci(s.m) << ", \"f\": " << format_sci(s.f)
          << ", \"L_geom\": " << format_sci(s.L_geom)
          << ", \"L_coord\": " << format_sci(s.L_coord) << "}"
          << (i + 1 < er.samples.size() ? ",\n" : "\n");
    }
    out << "  ]";
  }
  out << "\n}\n";
  return 0;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  cfg.oracle.validate();
  std::vector<double> values;
  values.reserve(cfg.oracle.eps_list.size());
  for (double eps : cfg.oracle.eps_list)
    values.push_back(integrate_full(cfg.cost, cfg.density, eps, cfg.oracle));
  const EmpiricalFit fit = fit_coefficients(cfg.oracle.eps_list, values);
  out << "{\n  \"eps\": ";
  write_vector(out, cfg.oracle.eps_list);
  out << ",\n  \"I\": ";
  write_vector(out, values);
  out << ",\n  \"I0_hat\": " << format_sci(fit.I0_hat)
      << ",\n  \"I1_hat\": " << format_sci(fit.I1_hat)
      << ",\n  \"fit_residual\": " << format_sci(fit.fit_residual) << "\n}\n";
  return 0;
}

int cmd_scan(const RunConfig& cfg, std::ostream& out) {
  cfg.oracle.validate();
  const ExpansionResult er = expand(cfg.cost, cfg.density, cfg.quad);
  out << "eps,I_oracle,I0,I1_interior,I1_boundary,I1_total,residual\n";
  for (double eps : cfg.oracle.eps_list) {
    const double value = integrate_full(cfg.cost, cfg.density, eps, cfg.oracle);
    const double residual = value - er.I0 - eps * er.I1_total;
    out << format_sci(eps) << ',' << format_sci(value) << ','
        << format_sci(er.I0) << ',' << format_sci(er.I1_interior) << ','
        << format_sci(er.I1_boundary) << ',' << format_sci(er.I1_total) << ','
        << format_sci(residual) << '\n';
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const int d = cfg.cost.d;
  std::mt19937 rng(cfg.verify_seed);

  // Pointwise residual maxima over random surface points in the x-box.
  double h_sym = 0.0, gauss = 0.0, gamma = 0.0;
  double dmt = 0.0, ddmt = 0.0, uijk = 0.0, uijkl = 0.0;
  double dif = 0.0, pointwise = 0.0;
  for (int s = 0; s < cfg.verify_samples; ++s) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
      const auto& side = cfg.cost.domain.x_box[static_cast<std::size_t>(a)];
      std::uniform_real_distribution<double> coord(side[0], side[1]);
      x[static_cast<std::size_t>(a)] = coord(rng);
    }
    const SigmaPoint sp = sigma_point(cfg.cost, x);
    const GeometryReport rep = geometry_report(sp);
    h_sym = std::max(h_sym, rep.h_sym_residual);
    gauss = std::max(gauss, rep.gauss_residual_full);
    gamma = std::max(gamma, rep.gamma_residual);
    const auto [r_dmt, r_ddmt] = mt_derivative_check(sp);
    dmt = std::max(dmt, r_dmt);
    ddmt = std::max(ddmt, r_ddmt);
    const auto [r_u3, r_u4] = u_derivative_check(sp);
    uijk = std::max(uijk, r_u3);
    uijkl = std::max(uijkl, r_u4);
    dif = std::max(dif, gradient_split(cfg.density, sp).dif_residual);
    pointwise = std::max(
        pointwise, std::abs(integrand_point(sp, cfg.density).identity_residual));
  }

  // Module self-check: Isserlis moments against dense quadrature in the
  // cost's dimension, capped at three.
  const double iss = isserlis_worst(std::min(d, 3), rng);

  // Assembled expansion, its closure against an independent coordinate
  // route, and the oracle agreement.
  const ExpansionResult er = expand(cfg.cost, cfg.density, cfg.quad);
  const double closure = closure_residual(cfg, er);

  cfg.oracle.validate();
  std::vector<double> values;
  values.reserve(cfg.oracle.eps_list.size());
  for (double eps : cfg.oracle.eps_list)
    values.push_back(integrate_full(cfg.cost, cfg.density, eps, cfg.oracle));
  const EmpiricalFit fit = fit_coefficients(cfg.oracle.eps_list, values);
  const double rel0 =
      std::abs(fit.I0_hat - er.I0) / std::max(std::abs(er.I0), 1e-12);
  const double scale1 =
      std::max(std::abs(er.I1_total), 0.01 * std::max(std::abs(er.I0), 1e-12));
  const double rel1 = std::abs(fit.I1_hat - er.I1_total) / scale1;
  const double oracle_gap = std::max(rel0, rel1);

  const VerifyRow rows[] = {
      {"h_symmetry", h_sym, kHSymTol},
      {"gauss_identity", gauss, kGaussTol},
      {"connection_double_entry", gamma, kGammaTol},
      {"mt_gradient", dmt, kLemmaTol},
      {"mt_hessian", ddmt, kLemmaTol},
      {"u_third_on_sigma", uijk, kLemmaTol},
      {"u_fourth_on_sigma", uijkl, kLemmaTol},
      {"gradient_split", dif, kLemmaTol},
      {"isserlis_vs_quadrature", iss, kIsserlisTol},
      {"pointwise_identity", pointwise, kPointwiseTol},
      {"divergence_closure", closure, kClosureTol},
      {"oracle_vs_formula", oracle_gap, kOracleTol},
  };

  bool all_pass = true;
  char line[128];
  std::snprintf(line, sizeof line, "%-26s %-20s %-10s %s\n", "check", "worst",
                "tolerance", "status");
  out << line;
  for (const VerifyRow& row : rows) {
    const bool pass = row.worst <= row.tol;
    all_pass = all_pass && pass;
    char tol[16];
    std::snprintf(tol, sizeof tol, "%.1e", row.tol);
    std::snprintf(line, sizeof line, "%-26s %-20s %-10s %s\n", row.name,
                  format_sci(row.worst).c_str(), tol, pass ? "PASS" : "FAIL");
    out << line;
  }
  out << "overall: " << (all_pass ? "PASS" : "FAIL") << '\n';
  return all_pass ? 0 : 1;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const DomainError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const CapabilityError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const NotADivergenceError*>(&e) != nullptr) return 2;
  return 3;
}

}  // namespace geolap
