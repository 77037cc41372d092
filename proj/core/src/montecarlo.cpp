#include "sparfima/montecarlo.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sparfima/error.hpp"
#include "sparfima/field_io.hpp"
#include "sparfima/format.hpp"
#include "sparfima/model.hpp"

namespace sparfima {

namespace {

using nlohmann::ordered_json;

template <typename T>
std::vector<T> read_list(const ordered_json& j, const char* key) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::invalid_argument, std::string(key) + " must be a non-empty array");
  return j.get<std::vector<T>>();
}

Parameters truth_of(const McConfig& config, const McCell& cell) {
  Parameters p;
  p.alpha = config.alpha;
  p.rho = cell.rho;
  p.lambda = cell.lambda;
  p.d = cell.d;
  p.sigma2 = config.sigma2;
  return p;
}

std::string cell_prefix(const McCell& cell) {
  return std::to_string(cell.grid) + ',' + std::to_string(cell.grid * cell.grid) + ',' +
         format_number(cell.rho) + ',' + format_number(cell.d) + ',' + format_number(cell.lambda);
}

}  // namespace

void McConfig::validate() const {
  if (grid_sizes.empty() || rho_values.empty() || d_values.empty() || lambda_values.empty()) {
    fail(ErrorKind::invalid_argument, "Monte Carlo parameter grids must be non-empty");
  }
  if (replications == 0) fail(ErrorKind::invalid_argument, "replications must be at least 1");
  if (workers == 0) fail(ErrorKind::invalid_argument, "workers must be at least 1");
  for (std::size_t g : grid_sizes) {
    if (g < 3) fail(ErrorKind::invalid_argument, "grid sizes must be at least 3");
    const WeightMatrix w = row_standardize(grid_contiguity(g, g, queen));
    for (const McCell& cell : mc_cells(*this)) {
      if (cell.grid != g) continue;
      ModelSpec spec(SiteSet::regular_grid(g, g), truth_of(*this, cell), w);
      spec.validate();
    }
  }
}

McConfig parse_mc_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, std::string("Monte Carlo config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::parse, "Monte Carlo config must be a JSON object");
  McConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "grid_sizes") c.grid_sizes = read_list<std::size_t>(value, "grid_sizes");
      else if (key == "rho_values") c.rho_values = read_list<double>(value, "rho_values");
      else if (key == "d_values") c.d_values = read_list<double>(value, "d_values");
      else if (key == "lambda_values") c.lambda_values = read_list<double>(value, "lambda_values");
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "sigma2") c.sigma2 = value.get<double>();
      else if (key == "replications") c.replications = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "variant") c.variant = parse_variant(value.get<std::string>());
      else if (key == "workers" || key == "parallelism") c.workers = value.get<std::size_t>();
      else if (key == "weights") {
        const auto w = value.get<std::string>();
        if (w != "queen" && w != "rook") fail(ErrorKind::invalid_argument, "weights must be queen or rook");
        c.queen = w == "queen";
      } else if (key == "innovations") {
        const auto e = value.get<std::string>();
        if (e != "gaussian" && e != "uniform") {
          fail(ErrorKind::invalid_argument, "innovations must be gaussian or uniform");
        }
        c.uniform_innovations = e == "uniform";
      } else if (key == "schema") {
        // accepted for round trips of to_json()
      } else {
        fail(ErrorKind::invalid_argument, "unknown Monte Carlo config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("bad Monte Carlo config value: ") + e.what());
  }
  c.validate();
  return c;
}

McConfig load_mc_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_mc_config(text.str());
}

std::string to_json(const McConfig& c) {
  ordered_json j;
  j["schema"] = "sparfima.mc_config/1";
  j["grid_sizes"] = c.grid_sizes;
  j["rho_values"] = c.rho_values;
  j["d_values"] = c.d_values;
  j["lambda_values"] = c.lambda_values;
  j["alpha"] = c.alpha;
  j["sigma2"] = c.sigma2;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["variant"] = std::string(to_string(c.variant));
  j["workers"] = c.workers;
  j["weights"] = c.queen ? "queen" : "rook";
  j["innovations"] = c.uniform_innovations ? "uniform" : "gaussian";
  return j.dump(2);
}

std::vector<McCell> mc_cells(const McConfig& config) {
  std::vector<McCell> cells;
  for (std::size_t g : config.grid_sizes)
    for (double rho : config.rho_values)
      for (double d : config.d_values)
        for (double lambda : config.lambda_values) cells.push_back({g, rho, d, lambda});
  return cells;
}

std::uint64_t replication_stream(const McConfig& config, const McCell& cell, std::size_t replication) {
  return derive_stream({cell.grid, std::bit_cast<std::uint64_t>(cell.rho), std::bit_cast<std::uint64_t>(cell.d),
                        std::bit_cast<std::uint64_t>(cell.lambda), std::bit_cast<std::uint64_t>(config.alpha),
                        std::bit_cast<std::uint64_t>(config.sigma2), config.queen ? 1u : 0u,
                        static_cast<std::uint64_t>(replication)});
}

McReport run_mc(const McConfig& config) {
  config.validate();
  McReport report;
  report.config = config;
  const std::vector<McCell> cells = mc_cells(config);

  // One weight matrix per lattice, decomposed before the workers start.
  std::map<std::size_t, WeightMatrix> weights;
  for (std::size_t g : config.grid_sizes) {
    if (weights.count(g)) continue;
    WeightMatrix w = row_standardize(grid_contiguity(g, g, config.queen));
    (void)w.spectrum();
    weights.emplace(g, std::move(w));
  }

  FitConfig fit_config;
  fit_config.variant = config.variant;
  fit_config.compute_std_errors = false;
  const InnovationSampler sampler = config.uniform_innovations ? uniform_innovations() : gaussian_innovations();

  const std::size_t total = cells.size() * config.replications;
  report.replications.resize(total);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      McReplication& rec = report.replications[job];
      rec.cell = job / config.replications;
      rec.replication = job % config.replications;
      const McCell& cell = cells[rec.cell];
      const WeightMatrix& w = weights.at(cell.grid);
      const auto started = std::chrono::steady_clock::now();
      try {
        ModelSpec spec(SiteSet::regular_grid(cell.grid, cell.grid), truth_of(config, cell), w);
        const LatticeField y =
            simulate(spec, config.seed, replication_stream(config, cell, rec.replication), sampler);
        const FitResult fit = fit_qml(Likelihood(y.values, w, w, fit_config.frac), fit_config);
        rec.ok = fit.converged;
        rec.boundary = fit.boundary_warning;
        rec.estimates = fit.estimates;
        rec.loglik = fit.loglik;
        if (!fit.converged) rec.error = "optimizer did not converge";
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      rec.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
  };
  const std::size_t workers = std::min(config.workers, std::max<std::size_t>(total, 1));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  const std::vector<Param> free = free_parameters(config.variant);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    McCellReport cr;
    cr.cell = cells[c];
    cr.truth = truth_of(config, cells[c]);
    std::array<double, 5> sum{};
    std::vector<std::array<double, 5>> errors;
    double time = 0.0;
    for (std::size_t r = 0; r < config.replications; ++r) {
      const McReplication& rec = report.replications[c * config.replications + r];
      time += rec.wall_time_seconds;
      if (!rec.ok) {
        ++cr.failures;
        continue;
      }
      ++cr.successes;
      std::array<double, 5> e{};
      for (Param p : free) {
        const auto i = static_cast<std::size_t>(p);
        e[i] = get(rec.estimates, p) - get(cr.truth, p);
        sum[i] += e[i];
      }
      errors.push_back(e);
    }
    cr.mean_wall_time_seconds = time / static_cast<double>(config.replications);
    if (cr.successes > 0) {
      const double m = static_cast<double>(cr.successes);
      for (Param p : free) {
        const auto i = static_cast<std::size_t>(p);
        const double bias = sum[i] / m;
        double spread = 0.0;
        for (const auto& e : errors) spread += (e[i] - bias) * (e[i] - bias);
        // sqrt(bias^2 + spread/m) keeps rmse >= |bias| under rounding.
        cr.bias[i] = bias;
        cr.rmse[i] = std::sqrt(bias * bias + spread / m);
      }
    }
    if (2 * cr.failures > config.replications) report.degraded = true;
    report.cells.push_back(cr);
  }
  return report;
}

std::string mc_table_csv(const McReport& report) {
  std::ostringstream out;
  out << "grid,n,rho,d,lambda,parameter,true_value,rmse,bias,successes,failures\n";
  const std::vector<Param> free = free_parameters(report.config.variant);
  for (const McCellReport& c : report.cells) {
    for (Param p : free) {
      const auto i = static_cast<std::size_t>(p);
      out << cell_prefix(c.cell) << ',' << to_string(p) << ',' << format_number(get(c.truth, p)) << ','
          << (c.rmse[i] ? format_number(*c.rmse[i]) : "NA") << ','
          << (c.bias[i] ? format_number(*c.bias[i]) : "NA") << ',' << c.successes << ',' << c.failures << '\n';
    }
  }
  return out.str();
}

std::string mc_replications_csv(const McReport& report) {
  std::ostringstream out;
  out << "grid,n,rho,d,lambda,replication,status,alpha_hat,rho_hat,lambda_hat,d_hat,sigma2_hat,loglik\n";
  const std::vector<McCell> cells = mc_cells(report.config);
  for (const McReplication& r : report.replications) {
    out << cell_prefix(cells[r.cell]) << ',' << r.replication << ','
        << (r.ok ? (r.boundary ? "boundary" : "ok") : "failed");
    for (Param p : kAllParams) out << ',' << (r.ok ? format_number(get(r.estimates, p)) : "NA");
    out << ',' << (r.ok ? format_number(r.loglik) : "NA") << '\n';
  }
  return out.str();
}

std::string mc_timing_csv(const McReport& report) {
  std::ostringstream out;
  out << "grid,n,rho,d,lambda,mean_wall_seconds,replications\n";
  for (const McCellReport& c : report.cells) {
    // Clock granularity can report zero for trivially small fits.
    const double t = std::max(c.mean_wall_time_seconds, 1e-9);
    out << cell_prefix(c.cell) << ',' << format_number(t) << ',' << report.config.replications << '\n';
  }
  return out.str();
}

void write_mc_outputs(const McReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  write_text((base / "table.csv").string(), mc_table_csv(report));
  write_text((base / "replications.csv").string(), mc_replications_csv(report));
  write_text((base / "timing.csv").string(), mc_timing_csv(report));

  ordered_json manifest;
  manifest["schema"] = "sparfima.mc_manifest/1";
  manifest["files"] = {{"table.csv", kMcTableSchema},
                       {"replications.csv", kMcReplicationsSchema},
                       {"timing.csv", kMcTimingSchema}};
  manifest["config"] = ordered_json::parse(to_json(report.config));
  manifest["degraded"] = report.degraded;
  std::size_t failures = 0;
  for (const auto& c : report.cells) failures += c.failures;
  manifest["failures"] = failures;
  write_text((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace sparfima
