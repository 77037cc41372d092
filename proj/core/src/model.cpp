#include "sparfima/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sparfima/error.hpp"

namespace sparfima {

ModelSpec::ModelSpec(SiteSet sites_, Parameters params_, WeightMatrix w1_,
                     std::optional<WeightMatrix> w2_)
    : sites(std::move(sites_)),
      params(params_),
      w1(w1_),
      w2(w2_ ? std::move(*w2_) : std::move(w1_)) {}

ModelSpec ModelSpec::grid(std::size_t rows, std::size_t cols, Parameters params, bool queen) {
  WeightMatrix w = row_standardize(grid_contiguity(rows, cols, queen));
  return ModelSpec(SiteSet::regular_grid(rows, cols), params, w);
}

void ModelSpec::validate() const {
  const std::size_t n = sites.size();
  if (w1.n() != n || w2.n() != n) {
    fail(ErrorKind::invalid_argument, "weight matrices do not match the number of sites");
  }
  if (!std::isfinite(params.alpha) || !std::isfinite(params.rho) || !std::isfinite(params.lambda)) {
    fail(ErrorKind::domain, "model parameters must be finite");
  }
  if (!(params.d > 0.0) || !(params.d <= options.d_max)) {
    std::ostringstream msg;
    msg << "d = " << params.d << " outside (0, " << options.d_max << "]";
    fail(ErrorKind::domain, msg.str());
  }
  if (!(params.sigma2 > 0.0) || !std::isfinite(params.sigma2)) {
    fail(ErrorKind::domain, "sigma2 must be positive");
  }
  if (ar_override && ar_override->n() != n) {
    fail(ErrorKind::invalid_argument, "autoregressive operator does not match the number of sites");
  }
  if (!ar_override) (void)SpatialOperator::first_order(w1, params.rho, options);
  (void)SpatialOperator::first_order(w2, params.lambda, options);
  if (design.has_value() != beta.has_value()) {
    fail(ErrorKind::invalid_argument, "design matrix and beta must be given together");
  }
  if (design && (static_cast<std::size_t>(design->rows()) != n || design->cols() != beta->size())) {
    fail(ErrorKind::invalid_argument, "design matrix shape does not match beta / sites");
  }
}

LatticeField::LatticeField(SiteSet sites_, Eigen::VectorXd values_)
    : sites(std::move(sites_)), values(std::move(values_)) {
  if (static_cast<std::size_t>(values.size()) != sites.size()) {
    fail(ErrorKind::invalid_argument, "field length does not match the number of sites");
  }
  if (!values.allFinite()) fail(ErrorKind::invalid_argument, "field values must be finite");
}

InnovationSampler gaussian_innovations() {
  return [](RandomStream& rng) { return rng.normal(); };
}

InnovationSampler uniform_innovations() {
  return [](RandomStream& rng) { return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0); };
}

Eigen::VectorXd draw_innovations(std::size_t n, double sigma2, std::uint64_t seed,
                                 std::uint64_t stream, const InnovationSampler& sampler) {
  RandomStream rng(seed, stream);
  const double sigma = std::sqrt(sigma2);
  Eigen::VectorXd eps(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = sigma * sampler(rng);
  return eps;
}

SpatialOperator ar_operator(const ModelSpec& spec) {
  if (spec.ar_override) return *spec.ar_override;
  return SpatialOperator::first_order(spec.w1, spec.params.rho, spec.options);
}

namespace {

Eigen::VectorXd intercept(const ModelSpec& spec) {
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.n()), spec.params.alpha);
  if (spec.design) mean += *spec.design * *spec.beta;
  return mean;
}

}  // namespace

Eigen::VectorXd generate(const ModelSpec& spec, const Eigen::VectorXd& innovations) {
  spec.validate();
  if (static_cast<std::size_t>(innovations.size()) != spec.n()) {
    fail(ErrorKind::invalid_argument, "innovation vector has the wrong length");
  }
  Eigen::VectorXd rhs = intercept(spec) + innovations;
  if (spec.params.lambda != 0.0) rhs -= spec.params.lambda * (spec.w2.entries() * innovations);
  return ar_operator(spec).apply_power(-spec.params.d, rhs);
}

LatticeField simulate(const ModelSpec& spec, std::uint64_t seed, std::uint64_t stream,
                      const InnovationSampler& sampler) {
  const Eigen::VectorXd eps = draw_innovations(spec.n(), spec.params.sigma2, seed, stream, sampler);
  return LatticeField(spec.sites, generate(spec, eps));
}

Eigen::VectorXd mean_vector(const ModelSpec& spec) {
  spec.validate();
  return ar_operator(spec).apply_power(-spec.params.d, intercept(spec));
}

Eigen::MatrixXd covariance_matrix(const ModelSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd inv = ar_operator(spec).power(-spec.params.d);
  Eigen::MatrixXd ma = -spec.params.lambda * spec.w2.dense();
  ma.diagonal().array() += 1.0;
  const Eigen::MatrixXd g = inv * ma;
  Eigen::MatrixXd cov = spec.params.sigma2 * (g * g.transpose());
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

std::vector<InfluencePoint> influence_profile(const ModelSpec& spec, std::size_t center) {
  if (!spec.sites.is_regular_grid()) {
    fail(ErrorKind::unsupported_layout, "influence profiles require a regular grid");
  }
  if (center >= spec.n()) fail(ErrorKind::invalid_argument, "center site out of range");
  spec.validate();
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.n()));
  unit(static_cast<Eigen::Index>(center)) = 1.0;
  const Eigen::VectorXd column = ar_operator(spec).apply_power(-spec.params.d, unit);
  const Eigen::VectorXd origin = spec.sites.point(center);
  std::vector<InfluencePoint> profile;
  profile.reserve(spec.n());
  for (std::size_t j = 0; j < spec.n(); ++j) {
    profile.push_back({j, (spec.sites.point(j) - origin).norm(), column(static_cast<Eigen::Index>(j))});
  }
  std::stable_sort(profile.begin(), profile.end(),
                   [](const InfluencePoint& a, const InfluencePoint& b) { return a.distance < b.distance; });
  return profile;
}

SpatialOperator higher_order_operator(const std::vector<WeightMatrix>& ws,
                                      const std::vector<double>& rhos) {
  return SpatialOperator::linear_combination(ws, rhos);
}

SpatialOperator polynomial_operator(const WeightMatrix& w_a, double rho_a, const WeightMatrix& w_b,
                                    double rho_b) {
  return SpatialOperator::product(SpatialOperator::first_order(w_a, rho_a),
                                  SpatialOperator::first_order(w_b, rho_b));
}

std::string to_json(const ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["schema"] = "sparfima.model/1";
  j["alpha"] = spec.params.alpha;
  j["rho"] = spec.params.rho;
  j["lambda"] = spec.params.lambda;
  j["d"] = spec.params.d;
  j["sigma2"] = spec.params.sigma2;
  j["n"] = spec.n();
  if (const auto& g = spec.sites.grid()) j["grid"] = {{"rows", g->rows}, {"cols", g->cols}};
  j["w1"] = spec.w1.provenance();
  j["w2"] = spec.w2.provenance();
  j["ar_override"] = spec.ar_override.has_value();
  j["has_design"] = spec.design.has_value();
  return j.dump(2);
}

}  // namespace sparfima
