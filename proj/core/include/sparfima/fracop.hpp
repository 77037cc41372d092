#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sparfima/weights.hpp"

namespace sparfima {

struct FracOptions {
  // Eigenbases with a larger condition estimate are not used for powers.
  double condition_cap = 1e8;
  // Fall back to the binomial series when the eigenbasis is unusable;
  // otherwise raise numerical_failure.
  bool series_fallback = true;
  double series_tolerance = 1e-12;
  std::size_t max_terms = 10000;
  double d_max = 5.0;
};

// Generalized binomial coefficient prod_{j<k} (d - j) / (j + 1).
double gen_binomial(double d, std::size_t k);

struct SeriesResult {
  Eigen::MatrixXd matrix;
  std::size_t terms = 0;  // index K of the last term included
  double tail_bound = 0.0;
};

// The autoregressive operator M = I - B for B = aW, a linear combination of
// weight matrices, or a product of such operators. Powers M^p are taken
// spectrally, M^p = V diag(mu^p) V^-1, where mu are the eigenvalues of M and
// V is either the cached eigenbasis of W (first-order and same-W products)
// or a dedicated decomposition of M.
class SpatialOperator {
 public:
  static SpatialOperator first_order(const WeightMatrix& w, double a, FracOptions options = {});
  // I - sum_i coefs[i] * ws[i].
  static SpatialOperator linear_combination(std::span<const WeightMatrix> ws,
                                            std::span<const double> coefs,
                                            FracOptions options = {});
  // lhs * rhs; the log-determinant is the sum of the factors' Ord sums.
  static SpatialOperator product(const SpatialOperator& lhs, const SpatialOperator& rhs);

  std::size_t n() const noexcept { return n_; }
  bool is_first_order() const noexcept { return first_order_; }
  const FracOptions& options() const noexcept { return options_; }

  // Eigenvalues of M; all strictly positive by construction.
  const Eigen::VectorXd& spectrum() const noexcept { return mu_; }

  Eigen::MatrixXd matrix() const;
  // M^p for any real p.
  Eigen::MatrixXd power(double p) const;
  Eigen::VectorXd apply_power(double p, const Eigen::VectorXd& v) const;
  // log |M| = sum_i log mu_i.
  double log_det() const noexcept { return log_det_; }

  // Eigenbasis used for powers, or nullptr if powers go through the series.
  const SpectralBasis* basis() const;

 private:
  SpatialOperator() = default;

  std::size_t n_ = 0;
  bool first_order_ = false;
  std::shared_ptr<const WeightMatrix> w_;  // basis source; series generator for first order
  double a_ = 0.0;
  std::shared_ptr<const Spectrum> own_;    // dedicated decomposition of M
  std::shared_ptr<const Eigen::MatrixXd> m_;  // dense M for composite operators
  Eigen::VectorXd mu_;
  double log_det_ = 0.0;
  FracOptions options_;
};

// (I - aW)^d with d in (0, d_max] and a real, strictly positive shifted
// spectrum 1 - a*lambda_i.
class FractionalOperator {
 public:
  FractionalOperator(const WeightMatrix& w, double a, double d, FracOptions options = {});

  double coefficient() const noexcept { return a_; }
  double exponent() const noexcept { return d_; }
  const Eigen::VectorXd& spectrum_shift() const noexcept { return op_.spectrum(); }
  const SpatialOperator& base() const noexcept { return op_; }

  Eigen::MatrixXd matrix() const { return op_.power(d_); }
  Eigen::MatrixXd inverse_matrix() const { return op_.power(-d_); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return op_.apply_power(d_, v); }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const { return op_.apply_power(-d_, v); }
  double log_det() const noexcept { return d_ * op_.log_det(); }

 private:
  SpatialOperator op_;
  double a_;
  double d_;
};

// V diag((1 - a*lambda)^d) V^-1. Falls back to the series when the eigenbasis
// is missing or too ill-conditioned and options.series_fallback is set.
Eigen::MatrixXd frac_power_spectral(const WeightMatrix& w, double a, double d,
                                    const FracOptions& options = {});

// Partial sum of sum_k C(d,k) (-1)^k (aW)^k, stopping at the first K with
// |C(d,K)| ||aW||_inf^K < tol or when the terms vanish identically. For a
// strictly triangular (nilpotent) W the finite sum is always taken in full.
SeriesResult frac_power_series(const WeightMatrix& w, double a, double d, double tol = 1e-12,
                               std::size_t max_terms = 10000);

// Same series applied to a vector for an arbitrary real exponent p.
Eigen::VectorXd frac_power_series_apply(const WeightMatrix& w, double a, double p,
                                        const Eigen::VectorXd& v, double tol = 1e-12,
                                        std::size_t max_terms = 10000);

// (I - aW)^-d v.
Eigen::VectorXd apply_inverse_frac(const WeightMatrix& w, double a, double d,
                                   const Eigen::VectorXd& v, const FracOptions& options = {});

// d * sum_i log(1 - a*lambda_i).
double log_det_frac(const WeightMatrix& w, double a, double d);

struct ConditionReport {
  double min_inverse_gain = 1.0;  // min_i (1 - a*lambda_i)^-d
  double max_inverse_gain = 1.0;  // max_i (1 - a*lambda_i)^-d
  double ratio = 1.0;
  bool near_degenerate = false;
};

ConditionReport condition_report(const WeightMatrix& w, double a, double d,
                                 double threshold = 1e6);

// Admissible open interval for a such that 1 - a*lambda_i > 0 for every
// eigenvalue, intersected with (-1, 1).
struct CoefficientRange {
  double lower;
  double upper;
};
CoefficientRange admissible_range(const WeightMatrix& w);

}  // namespace sparfima
