#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparfima/fracop.hpp"
#include "sparfima/rng.hpp"
#include "sparfima/weights.hpp"

namespace sparfima {

struct Parameters {
  double alpha = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  double d = 1.0;
  double sigma2 = 1.0;
};

// Process (I - rho W1)^d Y = alpha 1 + (I - lambda W2) eps.
//
// The moving-average sign follows the process definition above, so lambda
// here corresponds to -lambda under the "I + lambda W" convention.
struct ModelSpec {
  ModelSpec(SiteSet sites, Parameters params, WeightMatrix w1, std::optional<WeightMatrix> w2 = {});

  // Row-standardized Queen (or Rook) weights on a rows x cols grid, W1 = W2.
  static ModelSpec grid(std::size_t rows, std::size_t cols, Parameters params, bool queen = true);

  SiteSet sites;
  Parameters params;
  WeightMatrix w1;
  WeightMatrix w2;
  // Replaces I - rho W1 (higher-order or polynomial forms); rho and w1 are
  // then only used for reporting.
  std::optional<SpatialOperator> ar_override;
  // Optional regression term X beta added to the intercept. Carried through
  // simulation and moments; not estimated.
  std::optional<Eigen::MatrixXd> design;
  std::optional<Eigen::VectorXd> beta;
  FracOptions options;

  std::size_t n() const noexcept { return sites.size(); }
  // Throws domain / invalid_argument when the invariants do not hold.
  void validate() const;
};

struct LatticeField {
  LatticeField(SiteSet sites, Eigen::VectorXd values);

  SiteSet sites;
  Eigen::VectorXd values;

  std::size_t size() const noexcept { return sites.size(); }
};

// Unit-variance iid draw; scaled by sigma inside simulate().
using InnovationSampler = std::function<double(RandomStream&)>;
InnovationSampler gaussian_innovations();
InnovationSampler uniform_innovations();  // U(-sqrt 3, sqrt 3)

// eps_i = sigma * sampler(stream) for i = 0..n-1 on RandomStream(seed, stream).
Eigen::VectorXd draw_innovations(std::size_t n, double sigma2, std::uint64_t seed,
                                 std::uint64_t stream = 0,
                                 const InnovationSampler& sampler = gaussian_innovations());

SpatialOperator ar_operator(const ModelSpec& spec);

// Y = (I - rho W1)^-d (alpha 1 + X beta + (I - lambda W2) eps).
Eigen::VectorXd generate(const ModelSpec& spec, const Eigen::VectorXd& innovations);

LatticeField simulate(const ModelSpec& spec, std::uint64_t seed, std::uint64_t stream = 0,
                      const InnovationSampler& sampler = gaussian_innovations());

Eigen::VectorXd mean_vector(const ModelSpec& spec);
Eigen::MatrixXd covariance_matrix(const ModelSpec& spec);

struct InfluencePoint {
  std::size_t site;
  double distance;
  double weight;
};

// Column `center` of (I - rho W1)^-d against Euclidean distance from the
// center site, sorted by distance then site index. Regular grids only.
std::vector<InfluencePoint> influence_profile(const ModelSpec& spec, std::size_t center);

// I - sum_i rhos[i] ws[i].
SpatialOperator higher_order_operator(const std::vector<WeightMatrix>& ws,
                                      const std::vector<double>& rhos);
// (I - rho_a W_a)(I - rho_b W_b).
SpatialOperator polynomial_operator(const WeightMatrix& w_a, double rho_a, const WeightMatrix& w_b,
                                    double rho_b);

std::string to_json(const ModelSpec& spec);

}  // namespace sparfima
