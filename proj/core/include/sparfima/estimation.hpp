#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sparfima/fracop.hpp"
#include "sparfima/model.hpp"
#include "sparfima/nelder_mead.hpp"
#include "sparfima/weights.hpp"

namespace sparfima {

enum class Variant {
  sparfima,       // alpha, rho, lambda, d, sigma2 free
  sparfima_noma,  // lambda fixed at 0
  sarma,          // d fixed at 1
  sar,            // d fixed at 1, lambda fixed at 0
};

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);

enum class Param : std::size_t { alpha = 0, rho, lambda, d, sigma2 };
inline constexpr std::array<Param, 5> kAllParams{Param::alpha, Param::rho, Param::lambda, Param::d,
                                                 Param::sigma2};
std::string_view to_string(Param p) noexcept;

double get(const Parameters& p, Param which) noexcept;
void set(Parameters& p, Param which, double value) noexcept;

// Free parameters of a variant, in kAllParams order.
std::vector<Param> free_parameters(Variant v);

// Logistic map between R and the open interval (lower, upper).
struct BoxTransform {
  double lower;
  double upper;

  double to_bounded(double u) const noexcept;
  double to_unbounded(double x) const noexcept;
};

struct Bounds {
  double rho_lower = -1.0;
  double rho_upper = 1.0;
  double lambda_lower = -1.0;
  double lambda_upper = 1.0;
  double d_lower = 0.05;
  double d_upper = 5.0;
};

// rho, lambda in (max(-1, 1/lambda_min) + margin, min(1, 1/lambda_max) - margin);
// d in [0.05, 5].
Bounds default_bounds(const WeightMatrix& w1, const WeightMatrix& w2, double margin = 1e-6);

struct FitConfig {
  Variant variant = Variant::sparfima;
  std::optional<Bounds> bounds;  // default_bounds() when unset
  NelderMeadOptions optimizer;
  // Multi-start grid; coordinates fixed by the variant are ignored.
  std::vector<double> rho_starts{0.0, 0.5};
  std::vector<double> d_starts{0.5, 1.0, 1.5};
  std::vector<double> lambda_starts{0.0, 0.3};
  double hessian_step = 1e-4;
  double boundary_margin = 1e-4;
  bool compute_std_errors = true;
  FracOptions frac;
};

struct ConcentratedValue {
  double value;
  double alpha_hat;
  double sigma2_hat;
};

// Gaussian log-likelihood of the process for fixed data and weights.
//
// The eigenbasis of W1 (and W2) is taken from the weight matrices' caches;
// the data are projected onto it once so that each evaluation costs one to
// three dense mat-vecs and no decompositions.
class Likelihood {
 public:
  Likelihood(Eigen::VectorXd y, const WeightMatrix& w1, const WeightMatrix& w2,
             FracOptions options = {});

  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  const Eigen::VectorXd& data() const noexcept { return y_; }
  const WeightMatrix& w1() const noexcept { return w1_; }
  const WeightMatrix& w2() const noexcept { return w2_; }

  // xi(y) = (I - lambda W2)^-1 [(I - rho W1)^d y - alpha 1].
  Eigen::VectorXd residuals(const Parameters& theta) const;
  double log_likelihood(const Parameters& theta) const;
  // alpha and sigma2 replaced by their conditional maximizers.
  ConcentratedValue concentrated(double rho, double lambda, double d) const;

 private:
  struct Transformed;
  Transformed transform(double rho, double lambda, double d) const;
  double log_jacobian(double rho, double lambda, double d) const;

  Eigen::VectorXd y_;
  WeightMatrix w1_;
  WeightMatrix w2_;
  FracOptions options_;
  const SpectralBasis* basis1_ = nullptr;
  const SpectralBasis* basis2_ = nullptr;
  bool shared_basis_ = false;
  Eigen::VectorXd lambda1_;
  Eigen::VectorXd lambda2_;
  Eigen::VectorXd y_hat_;     // V1^-1 y
  Eigen::VectorXd ones_hat_;  // V1^-1 1 (shared basis) or V2^-1 1
};

Eigen::VectorXd residual_map(const Parameters& theta, const LatticeField& y, const WeightMatrix& w1,
                             const WeightMatrix& w2);
double log_likelihood(const Parameters& theta, const LatticeField& y, const WeightMatrix& w1,
                      const WeightMatrix& w2);
ConcentratedValue concentrated_log_likelihood(double rho, double lambda, double d,
                                              const LatticeField& y, const WeightMatrix& w1,
                                              const WeightMatrix& w2);

// Per-parameter values; nullopt where not free or not defined.
using ParameterErrors = std::array<std::optional<double>, 5>;

struct StdErrorReport {
  ParameterErrors errors{};
  bool negative_definite = false;
  Eigen::MatrixXd hessian;   // over free parameters, kAllParams order
  Eigen::VectorXd gradient;  // central differences at the estimate
  double gradient_max_abs = 0.0;
  std::string note;
};

struct FitResult {
  Variant variant = Variant::sparfima;
  std::size_t n = 0;
  std::size_t free_count = 0;
  Parameters estimates;
  ParameterErrors std_errors{};
  bool hessian_negative_definite = false;
  double gradient_max_abs = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  Eigen::VectorXd residuals;
  bool converged = false;
  bool boundary_warning = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t starts = 0;
  std::size_t converged_starts = 0;
  double wall_time_seconds = 0.0;
};

FitResult fit_qml(const LatticeField& y, const WeightMatrix& w1, const WeightMatrix& w2,
                  const FitConfig& config = {});
FitResult fit_qml(const Likelihood& likelihood, const FitConfig& config = {});

// Central finite-difference Hessian of the full log-likelihood at the fit.
StdErrorReport std_errors(const FitResult& fit, const Likelihood& likelihood, double step = 1e-4);
StdErrorReport std_errors(const FitResult& fit, const LatticeField& y, const WeightMatrix& w1,
                          const WeightMatrix& w2, double step = 1e-4);

struct InformationCriteria {
  double aic;
  double bic;
};
InformationCriteria information_criteria(double loglik, std::size_t free_count, std::size_t n);
InformationCriteria information_criteria(const FitResult& fit);

struct FitJsonOptions {
  bool include_residuals = false;
  bool include_timing = true;
};
// Versioned JSON document (schema "sparfima.fit/1"). A non-empty
// `diagnostics_json` is embedded as the top-level "diagnostics" object.
std::string to_json(const FitResult& fit, const FitJsonOptions& options = {},
                    const std::string& diagnostics_json = {});

}  // namespace sparfima
