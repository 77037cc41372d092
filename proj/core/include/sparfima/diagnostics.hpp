#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparfima/estimation.hpp"
#include "sparfima/weights.hpp"

namespace sparfima {

struct MoranResult {
  double i_stat = 0.0;
  double expected = 0.0;  // -1 / (n - 1)
  double variance = 0.0;  // normality-assumption null variance
  double z_score = 0.0;
  double p_value = 0.5;   // upper tail: evidence of positive autocorrelation
  std::size_t lag_order = 1;
};

// I = (n / S0) z'Wz / z'z with z centred and S0 the sum of all weights.
double morans_i(const Eigen::VectorXd& values, const WeightMatrix& w);

MoranResult morans_test(const Eigen::VectorXd& values, const WeightMatrix& w,
                        std::size_t lag_order = 1);

struct PermutationResult {
  double i_stat = 0.0;
  double p_value = 1.0;  // (#{I_perm >= I} + 1) / (draws + 1)
  std::size_t draws = 0;
  double mean = 0.0;
  double sd = 0.0;
};

PermutationResult morans_permutation_test(const Eigen::VectorXd& values, const WeightMatrix& w,
                                          std::size_t draws, std::uint64_t seed,
                                          std::uint64_t stream = 0);

// Entry k-1 holds lag k against row_standardize(lag_order_matrix(w, k)), or
// nullopt when no pair of sites is exactly k steps apart.
using SpatialAcf = std::vector<std::optional<MoranResult>>;
SpatialAcf spatial_acf(const Eigen::VectorXd& values, const WeightMatrix& w_raw,
                       std::size_t max_lag);

// CSV with header `lag,moran_i,expected,z,p`; absent lags are written as NA.
std::string acf_csv(const SpatialAcf& acf);

struct ResidualDiagnostics {
  double residual_sd = 0.0;  // denominator n - 1
  MoranResult moran;
};

ResidualDiagnostics residual_diagnostics(const FitResult& fit, const WeightMatrix& w);
std::string to_json(const ResidualDiagnostics& diagnostics);

}  // namespace sparfima
