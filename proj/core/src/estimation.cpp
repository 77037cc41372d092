#include "sparfima/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "sparfima/error.hpp"

namespace sparfima {

namespace {

const SpectralBasis* usable_basis(const WeightMatrix& w, const FracOptions& options) {
  const auto& basis = w.spectrum().basis;
  if (!basis || !(basis->condition <= options.condition_cap)) return nullptr;
  return &*basis;
}

Eigen::VectorXd shifted(const Eigen::VectorXd& eigenvalues, double a, const char* what) {
  Eigen::VectorXd mu = (1.0 - a * eigenvalues.array()).matrix();
  if (mu.size() && !(mu.minCoeff() > 0.0)) {
    std::ostringstream msg;
    msg << what << " coefficient " << a << " violates the spectrum constraint";
    fail(ErrorKind::domain, msg.str());
  }
  return mu;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::sparfima: return "sparfima";
    case Variant::sparfima_noma: return "sparfima-noma";
    case Variant::sarma: return "sarma";
    case Variant::sar: return "sar";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "sparfima") return Variant::sparfima;
  if (name == "sparfima-noma" || name == "sparfima_noma") return Variant::sparfima_noma;
  if (name == "sarma") return Variant::sarma;
  if (name == "sar") return Variant::sar;
  fail(ErrorKind::invalid_argument, "unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(Param p) noexcept {
  switch (p) {
    case Param::alpha: return "alpha";
    case Param::rho: return "rho";
    case Param::lambda: return "lambda";
    case Param::d: return "d";
    case Param::sigma2: return "sigma2";
  }
  return "unknown";
}

double get(const Parameters& p, Param which) noexcept {
  switch (which) {
    case Param::alpha: return p.alpha;
    case Param::rho: return p.rho;
    case Param::lambda: return p.lambda;
    case Param::d: return p.d;
    case Param::sigma2: return p.sigma2;
  }
  return 0.0;
}

void set(Parameters& p, Param which, double value) noexcept {
  switch (which) {
    case Param::alpha: p.alpha = value; break;
    case Param::rho: p.rho = value; break;
    case Param::lambda: p.lambda = value; break;
    case Param::d: p.d = value; break;
    case Param::sigma2: p.sigma2 = value; break;
  }
}

std::vector<Param> free_parameters(Variant v) {
  switch (v) {
    case Variant::sparfima: return {Param::alpha, Param::rho, Param::lambda, Param::d, Param::sigma2};
    case Variant::sparfima_noma: return {Param::alpha, Param::rho, Param::d, Param::sigma2};
    case Variant::sarma: return {Param::alpha, Param::rho, Param::lambda, Param::sigma2};
    case Variant::sar: return {Param::alpha, Param::rho, Param::sigma2};
  }
  return {};
}

double BoxTransform::to_bounded(double u) const noexcept {
  const double s = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  return std::min(upper, lower + (upper - lower) * s);
}

double BoxTransform::to_unbounded(double x) const noexcept {
  return std::log((x - lower) / (upper - x));
}

Bounds default_bounds(const WeightMatrix& w1, const WeightMatrix& w2, double margin) {
  const CoefficientRange r1 = admissible_range(w1);
  const CoefficientRange r2 = admissible_range(w2);
  Bounds b;
  b.rho_lower = r1.lower + margin;
  b.rho_upper = r1.upper - margin;
  b.lambda_lower = r2.lower + margin;
  b.lambda_upper = r2.upper - margin;
  return b;
}

// ---------------------------------------------------------------------------
// Likelihood

struct Likelihood::Transformed {
  Eigen::VectorXd u;  // (I - lambda W2)^-1 (I - rho W1)^d y
  Eigen::VectorXd m;  // (I - lambda W2)^-1 1
};

Likelihood::Likelihood(Eigen::VectorXd y, const WeightMatrix& w1, const WeightMatrix& w2,
                       FracOptions options)
    : y_(std::move(y)), w1_(w1), w2_(w2), options_(options) {
  if (w1_.n() != static_cast<std::size_t>(y_.size()) || w2_.n() != w1_.n()) {
    fail(ErrorKind::invalid_argument, "data length does not match the weight matrices");
  }
  if (!y_.allFinite()) fail(ErrorKind::invalid_argument, "data must be finite");
  lambda1_ = w1_.eigenvalues();
  lambda2_ = w2_.eigenvalues();
  basis1_ = usable_basis(w1_, options_);
  basis2_ = usable_basis(w2_, options_);
  shared_basis_ = basis1_ && w1_.cache_id() == w2_.cache_id();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y_.size());
  if (basis1_) y_hat_ = basis1_->inverse * y_;
  if (shared_basis_) {
    ones_hat_ = basis1_->inverse * ones;
  } else if (basis2_) {
    ones_hat_ = basis2_->inverse * ones;
  }
}

Likelihood::Transformed Likelihood::transform(double rho, double lambda, double d) const {
  const Eigen::VectorXd mu1 = shifted(lambda1_, rho, "autoregressive");
  const Eigen::VectorXd mu2 = shifted(lambda2_, lambda, "moving-average");
  const auto n = y_.size();
  Transformed t;
  if (basis1_ && (lambda == 0.0 || shared_basis_)) {
    Eigen::ArrayXd coeffs = mu1.array().pow(d) * y_hat_.array();
    if (lambda == 0.0) {
      t.u = basis1_->vectors * coeffs.matrix();
      t.m = Eigen::VectorXd::Ones(n);
    } else {
      const Eigen::ArrayXd inv2 = mu2.array().inverse();
      t.u = basis1_->vectors * (inv2 * coeffs).matrix();
      t.m = basis1_->vectors * (inv2 * ones_hat_.array()).matrix();
    }
    return t;
  }
  Eigen::VectorXd z;
  if (basis1_) {
    z = basis1_->vectors * (mu1.array().pow(d) * y_hat_.array()).matrix();
  } else {
    z = SpatialOperator::first_order(w1_, rho, options_).apply_power(d, y_);
  }
  if (lambda == 0.0) {
    t.u = std::move(z);
    t.m = Eigen::VectorXd::Ones(n);
  } else if (basis2_) {
    const Eigen::ArrayXd inv2 = mu2.array().inverse();
    t.u = basis2_->vectors * (inv2 * (basis2_->inverse * z).array()).matrix();
    t.m = basis2_->vectors * (inv2 * ones_hat_.array()).matrix();
  } else {
    const SpatialOperator ma = SpatialOperator::first_order(w2_, lambda, options_);
    t.u = ma.apply_power(-1.0, z);
    t.m = ma.apply_power(-1.0, Eigen::VectorXd::Ones(n));
  }
  return t;
}

double Likelihood::log_jacobian(double rho, double lambda, double d) const {
  const Eigen::VectorXd mu1 = shifted(lambda1_, rho, "autoregressive");
  const Eigen::VectorXd mu2 = shifted(lambda2_, lambda, "moving-average");
  return d * mu1.array().log().sum() - mu2.array().log().sum();
}

Eigen::VectorXd Likelihood::residuals(const Parameters& theta) const {
  Transformed t = transform(theta.rho, theta.lambda, theta.d);
  return t.u - theta.alpha * t.m;
}

double Likelihood::log_likelihood(const Parameters& theta) const {
  if (!(theta.sigma2 > 0.0)) fail(ErrorKind::domain, "sigma2 must be positive");
  if (!(theta.d > 0.0)) fail(ErrorKind::domain, "d must be positive");
  const double nn = static_cast<double>(n());
  const Eigen::VectorXd xi = residuals(theta);
  return -0.5 * nn * std::log(2.0 * std::numbers::pi) - 0.5 * nn * std::log(theta.sigma2) +
         log_jacobian(theta.rho, theta.lambda, theta.d) - xi.squaredNorm() / (2.0 * theta.sigma2);
}

ConcentratedValue Likelihood::concentrated(double rho, double lambda, double d) const {
  if (!(d > 0.0)) fail(ErrorKind::domain, "d must be positive");
  const Transformed t = transform(rho, lambda, d);
  const double mm = t.m.squaredNorm();
  if (!(mm > 0.0)) fail(ErrorKind::numerical_failure, "degenerate intercept direction");
  const double alpha = t.m.dot(t.u) / mm;
  const double nn = static_cast<double>(n());
  const double sigma2 = (t.u - alpha * t.m).squaredNorm() / nn;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorKind::numerical_failure, "residual variance is zero or not finite");
  }
  const double value = -0.5 * nn * (std::log(2.0 * std::numbers::pi) + 1.0) -
                       0.5 * nn * std::log(sigma2) + log_jacobian(rho, lambda, d);
  return {value, alpha, sigma2};
}

Eigen::VectorXd residual_map(const Parameters& theta, const LatticeField& y, const WeightMatrix& w1,
                             const WeightMatrix& w2) {
  return Likelihood(y.values, w1, w2).residuals(theta);
}

double log_likelihood(const Parameters& theta, const LatticeField& y, const WeightMatrix& w1,
                      const WeightMatrix& w2) {
  return Likelihood(y.values, w1, w2).log_likelihood(theta);
}

ConcentratedValue concentrated_log_likelihood(double rho, double lambda, double d,
                                              const LatticeField& y, const WeightMatrix& w1,
                                              const WeightMatrix& w2) {
  return Likelihood(y.values, w1, w2).concentrated(rho, lambda, d);
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct SearchCoord {
  Param param;
  BoxTransform box;
  const std::vector<double>* starts;
};

struct Candidate {
  Parameters theta;
  double loglik;
  bool converged;
  std::size_t iterations;
  std::size_t evaluations;
};

bool better(const Candidate& a, const Candidate& b) {
  const double scale = 1e-9 * (1.0 + std::abs(b.loglik));
  if (a.loglik > b.loglik + scale) return true;
  if (a.loglik < b.loglik - scale) return false;
  return a.theta.d < b.theta.d;
}

double clamp_interior(double x, const BoxTransform& box) {
  const double pad = 1e-3 * (box.upper - box.lower);
  return std::clamp(x, box.lower + pad, box.upper - pad);
}

}  // namespace

FitResult fit_qml(const LatticeField& y, const WeightMatrix& w1, const WeightMatrix& w2,
                  const FitConfig& config) {
  return fit_qml(Likelihood(y.values, w1, w2, config.frac), config);
}

FitResult fit_qml(const Likelihood& likelihood, const FitConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<Param> free = free_parameters(config.variant);
  const std::size_t n = likelihood.n();
  if (n < free.size() + 1) {
    fail(ErrorKind::invalid_argument, "need at least p + 1 observations for the fit");
  }
  const Bounds bounds = config.bounds ? *config.bounds : default_bounds(likelihood.w1(), likelihood.w2());

  std::vector<SearchCoord> coords;
  for (Param p : free) {
    switch (p) {
      case Param::rho: coords.push_back({p, {bounds.rho_lower, bounds.rho_upper}, &config.rho_starts}); break;
      case Param::lambda:
        coords.push_back({p, {bounds.lambda_lower, bounds.lambda_upper}, &config.lambda_starts});
        break;
      case Param::d: coords.push_back({p, {bounds.d_lower, bounds.d_upper}, &config.d_starts}); break;
      default: break;
    }
  }
  for (const auto& c : coords) {
    if (c.starts->empty()) fail(ErrorKind::invalid_argument, "empty multi-start grid");
    if (!(c.box.lower < c.box.upper)) fail(ErrorKind::invalid_argument, "empty parameter box");
  }

  auto assemble = [&](const Eigen::VectorXd& u) {
    Parameters theta;
    theta.lambda = 0.0;
    theta.d = 1.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      set(theta, coords[i].param, coords[i].box.to_bounded(u(static_cast<Eigen::Index>(i))));
    }
    return theta;
  };
  auto objective = [&](const Eigen::VectorXd& u) {
    const Parameters theta = assemble(u);
    try {
      return -likelihood.concentrated(theta.rho, theta.lambda, theta.d).value;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Cartesian product of per-coordinate start lists.
  std::vector<Eigen::VectorXd> starts;
  {
    std::vector<std::size_t> idx(coords.size(), 0);
    for (;;) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(coords.size()));
      for (std::size_t i = 0; i < coords.size(); ++i) {
        const double x = clamp_interior((*coords[i].starts)[idx[i]], coords[i].box);
        u(static_cast<Eigen::Index>(i)) = coords[i].box.to_unbounded(x);
      }
      starts.push_back(std::move(u));
      std::size_t k = 0;
      while (k < coords.size() && ++idx[k] == coords[k].starts->size()) idx[k++] = 0;
      if (k == coords.size()) break;
    }
  }

  FitResult fit;
  fit.variant = config.variant;
  fit.n = n;
  fit.free_count = free.size();
  fit.starts = starts.size();

  std::optional<Candidate> best;
  for (const Eigen::VectorXd& u0 : starts) {
    const NelderMeadResult r = nelder_mead(objective, u0, config.optimizer);
    fit.iterations += r.iterations;
    fit.evaluations += r.evaluations;
    if (!std::isfinite(r.value)) continue;
    Candidate cand{assemble(r.x), -r.value, r.converged, r.iterations, r.evaluations};
    if (cand.converged) ++fit.converged_starts;
    // Converged optima take precedence over stalled runs.
    if (!best || (cand.converged && !best->converged) ||
        (cand.converged == best->converged && better(cand, *best))) {
      best = cand;
    }
  }

  fit.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!best) {
    fit.converged = false;
    fit.loglik = -std::numeric_limits<double>::infinity();
    return fit;
  }

  Parameters theta = best->theta;
  const ConcentratedValue cv = likelihood.concentrated(theta.rho, theta.lambda, theta.d);
  theta.alpha = cv.alpha_hat;
  theta.sigma2 = cv.sigma2_hat;
  fit.estimates = theta;
  fit.converged = best->converged;
  fit.loglik = likelihood.log_likelihood(theta);
  const InformationCriteria ic = information_criteria(fit.loglik, fit.free_count, n);
  fit.aic = ic.aic;
  fit.bic = ic.bic;
  fit.residuals = likelihood.residuals(theta);
  for (const auto& c : coords) {
    const double x = get(theta, c.param);
    if (x - c.box.lower < config.boundary_margin || c.box.upper - x < config.boundary_margin) {
      fit.boundary_warning = true;
    }
  }

  if (config.compute_std_errors && fit.converged && !fit.boundary_warning) {
    const StdErrorReport report = std_errors(fit, likelihood, config.hessian_step);
    fit.std_errors = report.errors;
    fit.hessian_negative_definite = report.negative_definite;
    fit.gradient_max_abs = report.gradient_max_abs;
  }
  fit.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return fit;
}

StdErrorReport std_errors(const FitResult& fit, const Likelihood& likelihood, double step) {
  StdErrorReport report;
  const std::vector<Param> free = free_parameters(fit.variant);
  const auto k = static_cast<Eigen::Index>(free.size());
  Eigen::VectorXd theta0(k);
  Eigen::VectorXd h(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    theta0(i) = get(fit.estimates, free[static_cast<std::size_t>(i)]);
    h(i) = step * std::max(1.0, std::abs(theta0(i)));
  }
  auto f = [&](const Eigen::VectorXd& x) {
    Parameters p = fit.estimates;
    for (Eigen::Index i = 0; i < k; ++i) set(p, free[static_cast<std::size_t>(i)], x(i));
    return likelihood.log_likelihood(p);
  };

  report.hessian = Eigen::MatrixXd::Zero(k, k);
  report.gradient = Eigen::VectorXd::Zero(k);
  try {
    const double f0 = f(theta0);
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::VectorXd xp = theta0, xm = theta0;
      xp(i) += h(i);
      xm(i) -= h(i);
      const double fp = f(xp);
      const double fm = f(xm);
      report.gradient(i) = (fp - fm) / (2.0 * h(i));
      report.hessian(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
      for (Eigen::Index j = 0; j < i; ++j) {
        Eigen::VectorXd pp = theta0, pm = theta0, mp = theta0, mm = theta0;
        pp(i) += h(i); pp(j) += h(j);
        pm(i) += h(i); pm(j) -= h(j);
        mp(i) -= h(i); mp(j) += h(j);
        mm(i) -= h(i); mm(j) -= h(j);
        const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h(i) * h(j));
        report.hessian(i, j) = v;
        report.hessian(j, i) = v;
      }
    }
  } catch (const Error& e) {
    report.note = std::string("Hessian stencil left the parameter domain: ") + e.what();
    return report;
  }
  report.gradient_max_abs = report.gradient.cwiseAbs().maxCoeff();

  const Eigen::MatrixXd neg = -report.hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() != Eigen::Success) {
    report.note = "negative Hessian is not positive definite";
    return report;
  }
  report.negative_definite = true;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));
  for (Eigen::Index i = 0; i < k; ++i) {
    if (cov(i, i) > 0.0) {
      report.errors[static_cast<std::size_t>(free[static_cast<std::size_t>(i)])] = std::sqrt(cov(i, i));
    }
  }
  return report;
}

StdErrorReport std_errors(const FitResult& fit, const LatticeField& y, const WeightMatrix& w1,
                          const WeightMatrix& w2, double step) {
  return std_errors(fit, Likelihood(y.values, w1, w2), step);
}

InformationCriteria information_criteria(double loglik, std::size_t free_count, std::size_t n) {
  const double p = static_cast<double>(free_count);
  return {-2.0 * loglik + 2.0 * p, -2.0 * loglik + p * std::log(static_cast<double>(n))};
}

InformationCriteria information_criteria(const FitResult& fit) {
  return information_criteria(fit.loglik, fit.free_count, fit.n);
}

std::string to_json(const FitResult& fit, const FitJsonOptions& options,
                    const std::string& diagnostics_json) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = "sparfima.fit/1";
  j["variant"] = std::string(to_string(fit.variant));
  j["n"] = fit.n;
  const std::vector<Param> free = free_parameters(fit.variant);
  ordered_json free_names = ordered_json::array();
  ordered_json fixed = ordered_json::object();
  for (Param p : kAllParams) {
    if (std::find(free.begin(), free.end(), p) != free.end()) {
      free_names.push_back(std::string(to_string(p)));
    } else {
      fixed[std::string(to_string(p))] = get(fit.estimates, p);
    }
  }
  j["free_parameters"] = free_names;
  j["fixed"] = fixed;
  ordered_json est = ordered_json::object();
  ordered_json se = ordered_json::object();
  for (Param p : kAllParams) {
    const std::string name(to_string(p));
    est[name] = get(fit.estimates, p);
    const auto& e = fit.std_errors[static_cast<std::size_t>(p)];
    se[name] = e ? ordered_json(*e) : ordered_json(nullptr);
  }
  j["estimates"] = est;
  j["std_errors"] = se;
  j["loglik"] = fit.loglik;
  j["aic"] = fit.aic;
  j["bic"] = fit.bic;
  j["convergence"] = {{"converged", fit.converged},
                      {"boundary_warning", fit.boundary_warning},
                      {"hessian_negative_definite", fit.hessian_negative_definite},
                      {"gradient_max_abs", fit.gradient_max_abs},
                      {"iterations", fit.iterations},
                      {"evaluations", fit.evaluations},
                      {"starts", fit.starts},
                      {"converged_starts", fit.converged_starts}};
  if (options.include_timing) j["timing"] = {{"wall_time_seconds", fit.wall_time_seconds}};
  if (options.include_residuals) {
    j["residuals"] = std::vector<double>(fit.residuals.begin(), fit.residuals.end());
  }
  if (!diagnostics_json.empty()) j["diagnostics"] = ordered_json::parse(diagnostics_json);
  return j.dump(2);
}

}  // namespace sparfima
