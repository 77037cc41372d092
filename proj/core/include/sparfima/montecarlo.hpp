#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparfima/estimation.hpp"

namespace sparfima {

struct McConfig {
  std::vector<std::size_t> grid_sizes{15, 20, 25};
  std::vector<double> rho_values{0.5, 0.9};
  std::vector<double> d_values{0.8, 1.0, 1.5};
  std::vector<double> lambda_values{0.0};
  double alpha = 0.0;
  double sigma2 = 1.0;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  Variant variant = Variant::sparfima_noma;
  std::size_t workers = 1;
  bool queen = true;
  bool uniform_innovations = false;  // Gaussian unless set

  // Throws invalid_argument / domain when a cell violates the model
  // invariants or the grids are empty.
  void validate() const;
};

// Unknown keys are rejected so that typos do not silently fall back to
// defaults.
McConfig parse_mc_config(const std::string& json_text);
McConfig load_mc_config(const std::string& path);
std::string to_json(const McConfig& config);

struct McCell {
  std::size_t grid = 0;  // delta: the lattice is grid x grid
  double rho = 0.0;
  double d = 1.0;
  double lambda = 0.0;
};

// Cells in nested order: grid, rho, d, lambda.
std::vector<McCell> mc_cells(const McConfig& config);

// Seed stream for one replication. Depends only on the cell's parameters
// and the replication index, never on the cell's position in the grid.
std::uint64_t replication_stream(const McConfig& config, const McCell& cell, std::size_t replication);

struct McReplication {
  std::size_t cell = 0;
  std::size_t replication = 0;
  bool ok = false;
  bool boundary = false;
  std::string error;  // why the fit failed; empty on success
  Parameters estimates;
  double loglik = 0.0;
  double wall_time_seconds = 0.0;
};

// Moments over the successful replications, indexed by Param; nullopt for
// parameters the variant does not estimate, or when every fit failed.
struct McCellReport {
  McCell cell;
  Parameters truth;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::array<std::optional<double>, 5> rmse{};
  std::array<std::optional<double>, 5> bias{};
  double mean_wall_time_seconds = 0.0;
};

struct McReport {
  McConfig config;
  std::vector<McCellReport> cells;
  std::vector<McReplication> replications;
  // Some cell lost more than half of its replications.
  bool degraded = false;
};

McReport run_mc(const McConfig& config);

// Frozen CSV layouts (see the `--version` output of the CLI).
inline constexpr const char* kMcTableSchema = "sparfima.mc_table/1";
inline constexpr const char* kMcReplicationsSchema = "sparfima.mc_replications/1";
inline constexpr const char* kMcTimingSchema = "sparfima.mc_timing/1";

std::string mc_table_csv(const McReport& report);
std::string mc_replications_csv(const McReport& report);
std::string mc_timing_csv(const McReport& report);

// table.csv, replications.csv, timing.csv and manifest.json in `dir`.
// Everything except timing.csv is a deterministic function of the config.
void write_mc_outputs(const McReport& report, const std::string& dir);

}  // namespace sparfima
