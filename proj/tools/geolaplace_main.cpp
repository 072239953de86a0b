// Command-line driver: five subcommands over a strict JSON run
// configuration.  Exit codes: 0 success, 1 invariant breached beyond
// tolerance, 2 usage or configuration error, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "geolap/cli.hpp"
#include "geolap/errors.hpp"

namespace {

std::vector<double> parse_csv_doubles(const std::string& text,
                                      const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok =
        comma == std::string::npos ? text.substr(pos)
                                   : text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw geolap::DomainError(
          std::string(what) +
          ": expected a comma-separated list of numbers, got \"" + text +
          "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vanishing-surface geometry and first-order Laplace "
               "expansions of Gaussian double integrals"};
  app.require_subcommand(1);

  std::string config_path;
  std::string at_text, eps_text, out_path;
  int nodes = 0, dim = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--eps", eps_text,
                    "override the epsilon grid (comma-separated)");
    sub->add_option("--nodes", nodes,
                    "override every quadrature node count");
    sub->add_option("--d", dim, "override the cost dimension");
    sub->add_option("--out", out_path, "write the report to this file");
  };

  CLI::App* geometry =
      app.add_subcommand("geometry", "pointwise geometry report (JSON)");
  add_common(geometry);
  geometry->add_option(
      "--at", at_text,
      "surface point x, comma-separated (default: x-box center)");
  CLI::App* expand = app.add_subcommand(
      "expand", "first-order expansion of the double integral (JSON)");
  add_common(expand);
  CLI::App* oracle = app.add_subcommand(
      "oracle", "brute-force integral values and fitted coefficients (JSON)");
  add_common(oracle);
  CLI::App* scan = app.add_subcommand(
      "scan", "epsilon sweep comparing the oracle and the expansion (CSV)");
  add_common(scan);
  CLI::App* verify = app.add_subcommand(
      "verify", "invariant checklist for the configured cost");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit cleanly; anything else is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    geolap::RunOverrides ov;
    if (!eps_text.empty()) ov.eps = parse_csv_doubles(eps_text, "--eps");
    if (nodes > 0) ov.nodes = nodes;
    if (dim > 0) ov.d = dim;
    const geolap::RunConfig cfg =
        geolap::RunConfig::from_file(config_path, ov);

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    const std::string sink =
        !out_path.empty() ? out_path : cfg.output_path.value_or("");
    if (!sink.empty()) {
      file_out.open(sink, std::ios::binary);
      if (!file_out)
        throw geolap::DomainError("cannot open output file: " + sink);
      out = &file_out;
    }

    if (geometry->parsed()) {
      std::vector<double> x;
      if (!at_text.empty()) {
        x = parse_csv_doubles(at_text, "--at");
      } else {
        x.reserve(cfg.cost.domain.x_box.size());
        for (const auto& side : cfg.cost.domain.x_box)
          x.push_back(0.5 * (side[0] + side[1]));
      }
      return geolap::cmd_geometry(cfg, x, *out);
    }
    if (expand->parsed()) return geolap::cmd_expand(cfg, *out);
    if (oracle->parsed()) return geolap::cmd_oracle(cfg, *out);
    if (scan->parsed()) return geolap::cmd_scan(cfg, *out);
    return geolap::cmd_verify(cfg, *out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return geolap::exit_code_for(e);
  }
}
