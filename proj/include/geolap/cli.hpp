#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geolap/cost.hpp"
#include "geolap/expansion.hpp"
#include "geolap/oracle.hpp"

namespace geolap {

// Command-line overrides applied to the document before it is resolved.
struct RunOverrides {
  std::optional<std::vector<double>> eps;  // replaces the oracle epsilon grid
  std::optional<int> nodes;                // replaces every node count
  std::optional<int> d;                    // replaces the cost dimension
};

// A fully resolved run: cost, density, quadrature and oracle settings, and
// verification knobs.  Parses from a single strict JSON document; unknown
// keys anywhere raise ParseError naming the key and block.
//
// Schema ("cost" required, the rest optional):
//   {
//     "cost": {
//       "family": "quadratic" | "translation" | "bregman" |
//                 "fenchel_young" | "log_divergence" | "bayes" |
//                 "c_divergence",
//       "d": 1,
//       "x_box": [[-1, 1]],              // required
//       "y_box": [[-3, 3]],
//       "delta": 2.0, "lambda": 1.0,     // tube radius / convexity rate
//       "expr": "cosh(x1) - 1",          // translation U, bregman & FY f
//       "fstar": "x1*log(x1) - x1",      // FY conjugate (omit for numeric)
//       "alpha": 1.0,                    // log_divergence rate
//       "F": ["x1 + 0.1*x1^3"],          // bayes map components
//       "c": "...", "phi": "...", "psi": "..."  // c_divergence pieces
//     },
//     "density": "1",
//     "quadrature": { "interior_nodes": 32, "boundary_nodes": 32,
//                     "outer_nodes": 64, "hermite_nodes": 40,
//                     "sigma_cut": 16.0, "adaptive_tol": 1e-10,
//                     "tail_tol": 1e-3, "eps": [1e-1, ...],
//                     "inner_scheme": "gauss_hermite" | "adaptive",
//                     "emit_samples": false },
//     "verify": { "samples": 10, "seed": 20240817 },
//     "output": "report.json"
//   }
struct RunConfig {
  CostFunction cost;
  FieldXY density;
  QuadratureSpec quad;
  OracleConfig oracle;
  bool emit_samples = false;
  int verify_samples = 10;
  unsigned verify_seed = 20240817;
  std::optional<std::string> output_path;

  static RunConfig from_json_text(const std::string& text,
                                  const RunOverrides& ov = {});
  static RunConfig from_file(const std::string& path,
                             const RunOverrides& ov = {});
};

// Subcommand bodies.  Each writes its report to `out` and returns the
// process exit code: 0 on success, 1 when an invariant is breached beyond
// tolerance.  Configuration and numeric errors escape as exceptions; the
// binary maps them to exit codes with exit_code_for.  All floating-point
// output goes through format_sci, so identical configurations produce
// byte-identical reports.

// Full geometry report at the surface point over x, as JSON.  Exit 1 when
// any report residual (Gauss, h-symmetry, connection double-entry) exceeds
// its tolerance.
int cmd_geometry(const RunConfig& cfg, std::span<const double> x,
                 std::ostream& out);
// First-order expansion of the double integral, as JSON.
int cmd_expand(const RunConfig& cfg, std::ostream& out);
// Oracle values over the epsilon grid and the fitted coefficients, as JSON.
int cmd_oracle(const RunConfig& cfg, std::ostream& out);
// CSV sweep: eps,I_oracle,I0,I1_interior,I1_boundary,I1_total,residual
// where residual = I_oracle - I0 - eps * I1_total.
int cmd_scan(const RunConfig& cfg, std::ostream& out);
// Invariant table for the configured cost: h-symmetry, Gauss identity,
// on-surface derivative formulas, gradient split, Isserlis moments against
// quadrature, the pointwise expansion identity, the divergence-theorem
// closure, and the oracle-vs-formula agreement.  Exit 0 iff every row
// passes.
int cmd_verify(const RunConfig& cfg, std::ostream& out);

// Documented process exit code for an escaped exception: 2 for
// configuration/usage problems, 3 for numeric failures.
int exit_code_for(const std::exception& e);

// %.12e rendering used for every float in reports.
std::string format_sci(double v);

}  // namespace geolap
