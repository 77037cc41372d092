#include "sparfima_cli/cli.hpp"

#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sparfima/diagnostics.hpp"
#include "sparfima/error.hpp"
#include "sparfima/estimation.hpp"
#include "sparfima/field_io.hpp"
#include "sparfima/format.hpp"
#include "sparfima/model.hpp"
#include "sparfima/montecarlo.hpp"

namespace sparfima::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t effective_seed(std::uint64_t seed) {
  const char* env = std::getenv(kSeedEnv);
  if (!env || !*env) return seed;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (*end != '\0') throw UsageError(std::string(kSeedEnv) + " must be a non-negative integer");
  return value;
}

bool queen_flag(const std::string& weights) {
  if (weights == "queen") return true;
  if (weights == "rook") return false;
  throw UsageError("--weights must be queen or rook");
}

WeightMatrix lattice_weights(const LatticeField& field, bool queen, bool standardized) {
  const auto& grid = field.sites.grid();
  if (!grid) fail(ErrorKind::unsupported_layout, "data must lie on a regular grid");
  WeightMatrix raw = grid_contiguity(grid->rows, grid->cols, queen);
  return standardized ? row_standardize(raw) : raw;
}

std::string error_json(std::string_view kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  return j.dump();
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return kExitUsage;
    case ErrorKind::domain:
    case ErrorKind::numerical_failure:
    case ErrorKind::unsupported_matrix:
    case ErrorKind::convergence_failure:
    case ErrorKind::degenerate_geometry:
    case ErrorKind::degenerate_input: return kExitNumerical;
    default: return kExitFailure;
  }
}

struct SimulateArgs {
  std::size_t rows = 0, cols = 0;
  double rho = 0.0, lambda = 0.0, d = 1.0, alpha = 0.0, sigma2 = 1.0;
  std::string weights = "queen";
  std::string innovations = "gaussian";
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const bool queen = queen_flag(a.weights);
  if (a.innovations != "gaussian" && a.innovations != "uniform") {
    throw UsageError("--innovations must be gaussian or uniform");
  }
  Parameters p{a.alpha, a.rho, a.lambda, a.d, a.sigma2};
  const ModelSpec spec = ModelSpec::grid(a.rows, a.cols, p, queen);
  const std::uint64_t seed = effective_seed(a.seed);
  const LatticeField y = simulate(spec, seed, a.stream,
                                  a.innovations == "uniform" ? uniform_innovations() : gaussian_innovations());
  write_field_csv(y, a.out);
  nlohmann::ordered_json meta = nlohmann::ordered_json::parse(to_json(spec));
  meta["seed"] = seed;
  meta["stream"] = a.stream;
  meta["innovations"] = a.innovations;
  write_text(a.out + ".spec.json", meta.dump(2) + "\n");
  out << "wrote " << a.out << " (" << spec.n() << " sites)\n";
  return kExitOk;
}

struct DataArgs {
  std::string data;
  std::string format = "long";
  bool standardize = false;
  std::string weights = "queen";
};

LatticeField load(const DataArgs& a) {
  FieldFormat format;
  try {
    format = parse_field_format(a.format);
  } catch (const Error&) {
    throw UsageError("--format must be long or dense");
  }
  return load_field(a.data, format, a.standardize);
}

struct FitArgs {
  DataArgs data;
  std::string variant = "sparfima";
  std::string out;
  bool inline_residuals = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  Variant variant;
  try {
    variant = parse_variant(a.variant);
  } catch (const Error&) {
    throw UsageError("--variant must be one of sparfima, sparfima-noma, sarma, sar");
  }
  const bool queen = queen_flag(a.data.weights);
  const LatticeField y = load(a.data);
  const WeightMatrix w = lattice_weights(y, queen, true);
  FitConfig config;
  config.variant = variant;
  const FitResult fit = fit_qml(y, w, w, config);
  if (!fit.converged && fit.residuals.size() == 0) {
    fail(ErrorKind::convergence_failure, "no multi-start produced a finite likelihood");
  }
  const ResidualDiagnostics diag = residual_diagnostics(fit, w);
  FitJsonOptions options;
  options.include_timing = false;  // timing goes to a sidecar so the result is reproducible
  options.include_residuals = a.inline_residuals;
  write_text(a.out, to_json(fit, options, to_json(diag)) + "\n");

  std::ostringstream residuals;
  residuals << "row,col,residual\n";
  const auto cols = y.sites.grid()->cols;
  for (Eigen::Index i = 0; i < fit.residuals.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    residuals << k / cols << ',' << k % cols << ',' << format_number(fit.residuals(i)) << '\n';
  }
  write_text(a.out + ".residuals.csv", residuals.str());
  nlohmann::ordered_json timing;
  timing["wall_time_seconds"] = fit.wall_time_seconds;
  timing["evaluations"] = fit.evaluations;
  write_text(a.out + ".timing.json", timing.dump(2) + "\n");

  out << "variant " << to_string(variant) << ": loglik " << format_number(fit.loglik) << ", aic "
      << format_number(fit.aic) << (fit.converged ? "" : " (not converged)")
      << (fit.boundary_warning ? " (boundary)" : "") << '\n';
  return fit.converged ? kExitOk : kExitNumerical;
}

struct AcfArgs {
  DataArgs data;
  std::size_t max_lag = 6;
  std::string out;
};

int cmd_acf(const AcfArgs& a, std::ostream& out) {
  const bool queen = queen_flag(a.data.weights);
  const LatticeField y = load(a.data);
  const SpatialAcf acf = spatial_acf(y.values, lattice_weights(y, queen, false), a.max_lag);
  write_text(a.out, acf_csv(acf));
  out << "wrote " << acf.size() << " lags to " << a.out << '\n';
  return kExitOk;
}

struct InfluenceArgs {
  std::size_t rows = 20, cols = 20;
  double rho = 0.0, d = 1.0;
  std::string weights = "queen";
  std::optional<std::size_t> center_row, center_col;
  std::string out;
};

int cmd_influence(const InfluenceArgs& a, std::ostream& out) {
  const bool queen = queen_flag(a.weights);
  Parameters p;
  p.rho = a.rho;
  p.d = a.d;
  const ModelSpec spec = ModelSpec::grid(a.rows, a.cols, p, queen);
  const std::size_t r = a.center_row.value_or(a.rows / 2);
  const std::size_t c = a.center_col.value_or(a.cols / 2);
  if (r >= a.rows || c >= a.cols) throw UsageError("center lies outside the grid");
  std::ostringstream csv;
  csv << "row,col,distance,weight\n";
  for (const InfluencePoint& pt : influence_profile(spec, r * a.cols + c)) {
    csv << pt.site / a.cols << ',' << pt.site % a.cols << ',' << format_number(pt.distance) << ','
        << format_number(pt.weight) << '\n';
  }
  write_text(a.out, csv.str());
  out << "wrote influence profile of site (" << r << "," << c << ") to " << a.out << '\n';
  return kExitOk;
}

struct McArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> replications;
};

int cmd_mc(const McArgs& a, std::ostream& out) {
  McConfig config = load_mc_config(a.config);
  if (a.workers) config.workers = *a.workers;
  if (a.replications) config.replications = *a.replications;
  config.seed = effective_seed(config.seed);
  const McReport report = run_mc(config);
  write_mc_outputs(report, a.out_dir);
  std::size_t failures = 0;
  for (const auto& c : report.cells) failures += c.failures;
  out << "mc: " << report.cells.size() << " cells x " << config.replications << " replications, " << failures
      << " failed fits" << (report.degraded ? " (DEGRADED)" : "") << '\n';
  return report.degraded ? kExitDegraded : kExitOk;
}

std::string version_text() {
  std::ostringstream s;
  s << "sparfima " << kVersion << "\n"
    << "schemas: sparfima.model/1 sparfima.fit/1 sparfima.weights/1 sparfima.mc_config/1 "
    << kMcTableSchema << ' ' << kMcReplicationsSchema << ' ' << kMcTimingSchema << " sparfima.mc_manifest/1\n";
  return s.str();
}

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Input field CSV")->required();
  cmd->add_option("--format", a.format, "long (row,col,value) or dense (one grid row per line)");
  cmd->add_flag("--standardize", a.standardize, "z-score the data before use");
  cmd->add_option("--weights", a.weights, "queen or rook contiguity");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial ARFIMA simulation, estimation and diagnostics", "sparfima"};
  app.require_subcommand(1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print version and output schema versions");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a field on a regular grid");
  simulate_cmd->add_option("--rows", sim.rows)->required()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--cols", sim.cols)->required()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--rho", sim.rho);
  simulate_cmd->add_option("--lambda", sim.lambda);
  simulate_cmd->add_option("--d", sim.d);
  simulate_cmd->add_option("--alpha", sim.alpha);
  simulate_cmd->add_option("--sigma2", sim.sigma2);
  simulate_cmd->add_option("--weights", sim.weights);
  simulate_cmd->add_option("--innovations", sim.innovations, "gaussian or uniform");
  simulate_cmd->add_option("--seed", sim.seed);
  simulate_cmd->add_option("--stream", sim.stream);
  simulate_cmd->add_option("--out", sim.out)->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model by quasi-maximum likelihood");
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--variant", fit.variant, "sparfima, sparfima-noma, sarma or sar");
  fit_cmd->add_flag("--inline-residuals", fit.inline_residuals, "Also embed residuals in the JSON");
  fit_cmd->add_option("--out", fit.out, "Output JSON")->required();

  AcfArgs acf;
  auto* acf_cmd = app.add_subcommand("acf", "Spatial autocorrelation function (Moran's I by lag order)");
  add_data_options(acf_cmd, acf.data);
  acf_cmd->add_option("--max-lag", acf.max_lag)->check(CLI::PositiveNumber);
  acf_cmd->add_option("--out", acf.out)->required();

  InfluenceArgs infl;
  auto* influence_cmd = app.add_subcommand("influence", "Export the influence profile of one site");
  influence_cmd->add_option("--rows", infl.rows)->check(CLI::PositiveNumber);
  influence_cmd->add_option("--cols", infl.cols)->check(CLI::PositiveNumber);
  influence_cmd->add_option("--rho", infl.rho);
  influence_cmd->add_option("--d", infl.d);
  influence_cmd->add_option("--weights", infl.weights);
  influence_cmd->add_option("--center-row", infl.center_row);
  influence_cmd->add_option("--center-col", infl.center_col);
  influence_cmd->add_option("--out", infl.out)->required();

  McArgs mc;
  auto* mc_cmd = app.add_subcommand("mc", "Run a Monte Carlo experiment");
  mc_cmd->add_option("--config", mc.config, "JSON experiment description")->required();
  mc_cmd->add_option("--out-dir", mc.out_dir)->required();
  mc_cmd->add_option("--workers", mc.workers)->check(CLI::PositiveNumber);
  mc_cmd->add_option("--replications", mc.replications)->check(CLI::PositiveNumber);

  // --version alone is allowed without a subcommand.
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--version") {
      out << version_text();
      return kExitOk;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what(), kExitUsage) << '\n';
    return kExitUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*acf_cmd) return cmd_acf(acf, out);
    if (*influence_cmd) return cmd_influence(infl, out);
    if (*mc_cmd) return cmd_mc(mc, out);
  } catch (const UsageError& e) {
    err << error_json("usage", e.what(), kExitUsage) << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_json(to_string(e.kind()), e.what(), code) << '\n';
    return code;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), kExitFailure) << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sparfima::cli
