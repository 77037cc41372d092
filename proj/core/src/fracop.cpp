#include "sparfima/fracop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sparfima/error.hpp"

namespace sparfima {

namespace {

void require_exponent(double d, const FracOptions& options) {
  if (!(d > 0.0) || !(d <= options.d_max)) {
    std::ostringstream msg;
    msg << "fractional exponent d = " << d << " outside (0, " << options.d_max << "]";
    fail(ErrorKind::domain, msg.str());
  }
}

// Eigenvalues within rounding of zero count as a unit root (e.g. rho = 1 for a
// row-standardized W, whose computed top eigenvalue may sit just below 1).
constexpr double kMinShift = 1e-12;

void require_positive(const Eigen::VectorXd& mu, const char* what) {
  const double lowest = mu.size() ? mu.minCoeff() : 1.0;
  if (!(lowest > kMinShift)) {
    std::ostringstream msg;
    msg << what << " not real-powerable: smallest eigenvalue " << lowest << " <= 0";
    fail(ErrorKind::domain, msg.str());
  }
}

double inf_norm(const WeightMatrix::Sparse& m) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (WeightMatrix::Sparse::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

bool strictly_triangular(const WeightMatrix::Sparse& m) {
  bool lower = true;
  bool upper = true;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (WeightMatrix::Sparse::InnerIterator it(m, r); it; ++it) {
      if (it.col() >= r) lower = false;
      if (it.col() <= r) upper = false;
    }
  }
  return lower || upper;
}

// Shared preconditions for the binomial series: returns ||aW||_inf. A
// strictly triangular W is nilpotent, so its series is a finite sum and is
// always summed in full.
double series_norm(const WeightMatrix& w, double a, bool& nilpotent) {
  const double norm = std::abs(a) * inf_norm(w.entries());
  nilpotent = strictly_triangular(w.entries());
  if (norm >= 1.0 && !nilpotent) {
    std::ostringstream msg;
    msg << "binomial series requires ||aW||_inf < 1 (got " << norm << ")";
    fail(ErrorKind::domain, msg.str());
  }
  return norm;
}

const SpectralBasis* usable(const std::optional<SpectralBasis>& basis, const FracOptions& options) {
  if (!basis || !(basis->condition <= options.condition_cap)) return nullptr;
  return &*basis;
}

}  // namespace

double gen_binomial(double d, std::size_t k) {
  double value = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    value *= (d - static_cast<double>(j)) / static_cast<double>(j + 1);
  }
  return value;
}

SpatialOperator SpatialOperator::first_order(const WeightMatrix& w, double a, FracOptions options) {
  if (!std::isfinite(a)) fail(ErrorKind::domain, "operator coefficient must be finite");
  SpatialOperator op;
  op.n_ = w.n();
  op.first_order_ = true;
  op.w_ = std::make_shared<const WeightMatrix>(w);
  op.a_ = a;
  op.options_ = options;
  op.mu_ = (1.0 - a * w.eigenvalues().array()).matrix();
  require_positive(op.mu_, "operator I - aW");
  op.log_det_ = op.mu_.array().log().sum();
  return op;
}

SpatialOperator SpatialOperator::linear_combination(std::span<const WeightMatrix> ws,
                                                    std::span<const double> coefs,
                                                    FracOptions options) {
  if (ws.empty() || ws.size() != coefs.size()) {
    fail(ErrorKind::invalid_argument, "need equally many weight matrices and coefficients");
  }
  if (ws.size() == 1) return first_order(ws[0], coefs[0], options);
  const std::size_t n = ws[0].n();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws[i].n() != n) fail(ErrorKind::invalid_argument, "weight matrices differ in size");
    m -= coefs[i] * ws[i].dense();
  }
  SpatialOperator op;
  op.n_ = n;
  op.options_ = options;
  op.own_ = std::make_shared<const Spectrum>(real_spectrum(m));
  op.mu_ = op.own_->eigenvalues;
  require_positive(op.mu_, "composite operator");
  op.log_det_ = op.mu_.array().log().sum();
  op.m_ = std::make_shared<const Eigen::MatrixXd>(std::move(m));
  return op;
}

SpatialOperator SpatialOperator::product(const SpatialOperator& lhs, const SpatialOperator& rhs) {
  if (lhs.n_ != rhs.n_) fail(ErrorKind::invalid_argument, "operators differ in size");
  SpatialOperator op;
  op.n_ = lhs.n_;
  op.options_ = lhs.options_;
  op.m_ = std::make_shared<const Eigen::MatrixXd>(lhs.matrix() * rhs.matrix());
  const bool shared_basis = !lhs.own_ && !rhs.own_ && lhs.w_ && rhs.w_ &&
                            lhs.w_->cache_id() == rhs.w_->cache_id();
  if (shared_basis) {
    // Polynomials in one W share its eigenvectors.
    op.w_ = lhs.w_;
    op.mu_ = lhs.mu_.cwiseProduct(rhs.mu_);
  } else {
    op.own_ = std::make_shared<const Spectrum>(real_spectrum(*op.m_));
    op.mu_ = op.own_->eigenvalues;
  }
  require_positive(op.mu_, "composite operator");
  op.log_det_ = lhs.log_det_ + rhs.log_det_;
  return op;
}

const SpectralBasis* SpatialOperator::basis() const {
  if (own_) return usable(own_->basis, options_);
  return usable(w_->spectrum().basis, options_);
}

Eigen::MatrixXd SpatialOperator::matrix() const {
  if (m_) return *m_;
  Eigen::MatrixXd m = -a_ * w_->dense();
  m.diagonal().array() += 1.0;
  return m;
}

Eigen::MatrixXd SpatialOperator::power(double p) const {
  if (const SpectralBasis* b = basis()) {
    const Eigen::VectorXd scaled = mu_.array().pow(p).matrix();
    return b->vectors * scaled.asDiagonal() * b->inverse;
  }
  if (first_order_ && options_.series_fallback) {
    return frac_power_series(*w_, a_, p, options_.series_tolerance, options_.max_terms).matrix;
  }
  fail(ErrorKind::numerical_failure, "no usable eigenbasis for fractional power");
}

Eigen::VectorXd SpatialOperator::apply_power(double p, const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != n_) {
    fail(ErrorKind::invalid_argument, "vector length does not match operator size");
  }
  if (const SpectralBasis* b = basis()) {
    const Eigen::VectorXd coords = b->inverse * v;
    return b->vectors * (mu_.array().pow(p) * coords.array()).matrix();
  }
  if (first_order_ && options_.series_fallback) {
    return frac_power_series_apply(*w_, a_, p, v, options_.series_tolerance, options_.max_terms);
  }
  fail(ErrorKind::numerical_failure, "no usable eigenbasis for fractional power");
}

FractionalOperator::FractionalOperator(const WeightMatrix& w, double a, double d, FracOptions options)
    : op_(SpatialOperator::first_order(w, a, options)), a_(a), d_(d) {
  require_exponent(d, options);
}

Eigen::MatrixXd frac_power_spectral(const WeightMatrix& w, double a, double d,
                                    const FracOptions& options) {
  return FractionalOperator(w, a, d, options).matrix();
}

SeriesResult frac_power_series(const WeightMatrix& w, double a, double d, double tol,
                               std::size_t max_terms) {
  bool nilpotent = false;
  const double norm = series_norm(w, a, nilpotent);
  const auto n = static_cast<Eigen::Index>(w.n());
  const WeightMatrix::Sparse aw = a * w.entries();

  SeriesResult out;
  out.matrix = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  double coef = 1.0;
  double sign = 1.0;
  for (std::size_t k = 1;; ++k) {
    if (k > max_terms) {
      std::ostringstream msg;
      msg << "binomial series did not reach tolerance " << tol << " within " << max_terms << " terms";
      throw ConvergenceError(msg.str(), out.tail_bound);
    }
    coef *= (d - static_cast<double>(k - 1)) / static_cast<double>(k);
    sign = -sign;
    if (coef == 0.0) break;  // integer exponent: remaining terms vanish
    Eigen::MatrixXd next = power * aw;
    if ((next.array() == 0.0).all()) break;  // nilpotent: (aW)^k = 0
    power.swap(next);
    out.matrix.noalias() += (sign * coef) * power;
    out.terms = k;
    out.tail_bound = nilpotent ? 0.0 : std::abs(coef) * std::pow(norm, static_cast<double>(k));
    if (!nilpotent && out.tail_bound < tol) break;
  }
  if (out.terms == 0) out.tail_bound = 0.0;
  return out;
}

Eigen::VectorXd frac_power_series_apply(const WeightMatrix& w, double a, double p,
                                        const Eigen::VectorXd& v, double tol,
                                        std::size_t max_terms) {
  bool nilpotent = false;
  const double norm = series_norm(w, a, nilpotent);
  const WeightMatrix::Sparse aw = a * w.entries();
  Eigen::VectorXd result = v;
  Eigen::VectorXd term = v;
  double coef = 1.0;
  double sign = 1.0;
  double bound = 0.0;
  for (std::size_t k = 1;; ++k) {
    if (k > max_terms) {
      throw ConvergenceError("binomial series did not reach tolerance", bound);
    }
    coef *= (p - static_cast<double>(k - 1)) / static_cast<double>(k);
    sign = -sign;
    if (coef == 0.0) break;
    Eigen::VectorXd next = aw * term;
    if ((next.array() == 0.0).all()) break;
    term.swap(next);
    result.noalias() += (sign * coef) * term;
    if (nilpotent) continue;
    bound = std::abs(coef) * std::pow(norm, static_cast<double>(k));
    if (bound < tol) break;
  }
  return result;
}

Eigen::VectorXd apply_inverse_frac(const WeightMatrix& w, double a, double d,
                                   const Eigen::VectorXd& v, const FracOptions& options) {
  return FractionalOperator(w, a, d, options).apply_inverse(v);
}

double log_det_frac(const WeightMatrix& w, double a, double d) {
  const Eigen::VectorXd mu = (1.0 - a * w.eigenvalues().array()).matrix();
  require_positive(mu, "operator I - aW");
  return d * mu.array().log().sum();
}

ConditionReport condition_report(const WeightMatrix& w, double a, double d, double threshold) {
  const Eigen::VectorXd mu = (1.0 - a * w.eigenvalues().array()).matrix();
  require_positive(mu, "operator I - aW");
  const Eigen::ArrayXd gains = mu.array().pow(-d);
  ConditionReport report;
  report.min_inverse_gain = gains.minCoeff();
  report.max_inverse_gain = gains.maxCoeff();
  report.ratio = report.max_inverse_gain / report.min_inverse_gain;
  report.near_degenerate = report.ratio > threshold;
  return report;
}

CoefficientRange admissible_range(const WeightMatrix& w) {
  const Spectrum& s = w.spectrum();
  const double lo = s.min();
  const double hi = s.max();
  CoefficientRange range{-1.0, 1.0};
  if (lo < 0.0) range.lower = std::max(-1.0, 1.0 / lo);
  if (hi > 0.0) range.upper = std::min(1.0, 1.0 / hi);
  return range;
}

}  // namespace sparfima
