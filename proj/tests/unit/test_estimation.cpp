#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"

#include "oracles.hpp"
#include "sparfima/error.hpp"
#include "sparfima/estimation.hpp"
#include "sparfima/model.hpp"

using namespace sparfima;

namespace {

Parameters params(double rho, double d, double lambda = 0.0, double alpha = 0.0) {
  Parameters p;
  p.alpha = alpha;
  p.rho = rho;
  p.lambda = lambda;
  p.d = d;
  return p;
}

// Dense reference: log N(xi; 0, sigma2 I) + log|A^d| - log|I - lambda W2|.
double dense_loglik(const Parameters& t, const Eigen::VectorXd& y, const WeightMatrix& w1,
                    const WeightMatrix& w2) {
  const auto n = static_cast<double>(y.size());
  const Eigen::MatrixXd ad = oracle::real_power(oracle::shifted(w1, t.rho), t.d);
  const Eigen::MatrixXd b = oracle::shifted(w2, t.lambda);
  const Eigen::VectorXd xi = b.lu().solve(ad * y - Eigen::VectorXd::Constant(y.size(), t.alpha));
  return -0.5 * n * std::log(2.0 * M_PI * t.sigma2) - xi.squaredNorm() / (2.0 * t.sigma2) +
         oracle::log_abs_det(ad) - oracle::log_abs_det(b);
}

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (Variant v : {Variant::sparfima, Variant::sparfima_noma, Variant::sarma, Variant::sar}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("arfima"), Error);
  EXPECT_EQ(free_parameters(Variant::sar).size(), 3u);
  EXPECT_EQ(free_parameters(Variant::sparfima).size(), 5u);
}

TEST(BoxTransform, RoundTrip) {
  const BoxTransform t{-0.9, 0.99};
  for (double x : {-0.89, -0.3, 0.0, 0.5, 0.98}) EXPECT_NEAR(t.to_bounded(t.to_unbounded(x)), x, 1e-12);
  EXPECT_GT(t.to_bounded(800.0), -0.9);
  EXPECT_LE(t.to_bounded(800.0), 0.99);
}

TEST(Likelihood, ResidualsAreDataAtZeroParameters) {
  const ModelSpec spec = ModelSpec::grid(5, 5, params(0.5, 1.0));
  const LatticeField y = simulate(spec, 1);
  Parameters zero = params(0.0, 1.0);
  EXPECT_LT((residual_map(zero, y, spec.w1, spec.w2) - y.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Likelihood, ConcentratedAtZeroIsSampleMoments) {
  const ModelSpec spec = ModelSpec::grid(5, 5, params(0.5, 1.0));
  const LatticeField y = simulate(spec, 2);
  const ConcentratedValue c = concentrated_log_likelihood(0.0, 0.0, 1.0, y, spec.w1, spec.w2);
  const double mean = y.values.mean();
  const double var = (y.values.array() - mean).square().sum() / 25.0;
  EXPECT_NEAR(c.alpha_hat, mean, 1e-12);
  EXPECT_NEAR(c.sigma2_hat, var, 1e-12);
}

TEST(Likelihood, MatchesDenseReference) {
  const ModelSpec spec = ModelSpec::grid(6, 6, params(0.7, 1.3, 0.3, 0.5));
  const LatticeField y = simulate(spec, 3);
  const Likelihood lik(y.values, spec.w1, spec.w2);
  for (const Parameters& t : {params(0.7, 1.3, 0.3, 0.5), params(-0.4, 0.6, -0.2, 1.0), params(0.95, 2.5, 0.0)}) {
    EXPECT_NEAR(lik.log_likelihood(t), dense_loglik(t, y.values, spec.w1, spec.w2), 1e-8);
  }
}

TEST(Likelihood, DistinctW2MatchesSharedBasisPath) {
  // A copy of W built separately has its own cache, forcing the second basis.
  const ModelSpec spec = ModelSpec::grid(6, 6, params(0.6, 1.2, 0.4));
  const WeightMatrix w2 = row_standardize(queen_contiguity(6, 6));
  ASSERT_NE(w2.cache_id(), spec.w1.cache_id());
  const LatticeField y = simulate(spec, 4);
  const Likelihood shared(y.values, spec.w1, spec.w1);
  const Likelihood split(y.values, spec.w1, w2);
  const Parameters t = params(0.6, 1.2, 0.4, 0.1);
  EXPECT_NEAR(shared.log_likelihood(t), split.log_likelihood(t), 1e-8);
  EXPECT_NEAR(split.log_likelihood(t), dense_loglik(t, y.values, spec.w1, w2), 1e-8);
}

TEST(Likelihood, NoDecompositionPerEvaluation) {
  const ModelSpec spec = ModelSpec::grid(8, 8, params(0.5, 1.0));
  const LatticeField y = simulate(spec, 5);
  const Likelihood lik(y.values, spec.w1, spec.w2);
  const std::size_t before = eigendecomposition_count();
  for (int i = 0; i < 50; ++i) (void)lik.concentrated(0.01 * i, 0.1, 0.5 + 0.02 * i);
  EXPECT_EQ(eigendecomposition_count(), before);
}

TEST(Likelihood, OutsideDomainRaises) {
  const ModelSpec spec = ModelSpec::grid(4, 4, params(0.5, 1.0));
  const Likelihood lik(simulate(spec, 6).values, spec.w1, spec.w2);
  try {
    (void)lik.concentrated(1.5, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(InformationCriteria, Algebra) {
  const InformationCriteria ic = information_criteria(-100.0, 4, 225);
  EXPECT_DOUBLE_EQ(ic.aic, 208.0);
  EXPECT_DOUBLE_EQ(ic.bic, 200.0 + 4.0 * std::log(225.0));
}

TEST(Fit, NestedVariantsOrderedByLikelihood) {
  const ModelSpec spec = ModelSpec::grid(10, 10, params(0.8, 1.4, 0.3, 0.5));
  const LatticeField y = simulate(spec, 7);
  const Likelihood lik(y.values, spec.w1, spec.w2);
  FitConfig c;
  c.compute_std_errors = false;
  c.variant = Variant::sar;
  const double sar = fit_qml(lik, c).loglik;
  c.variant = Variant::sarma;
  const double sarma = fit_qml(lik, c).loglik;
  c.variant = Variant::sparfima;
  const FitResult full = fit_qml(lik, c);
  EXPECT_LE(sar, sarma + 1e-6);
  EXPECT_LE(sarma, full.loglik + 1e-6);
  EXPECT_TRUE(full.converged);
  EXPECT_EQ(full.free_count, 5u);
  EXPECT_NEAR(full.aic, -2.0 * full.loglik + 10.0, 1e-9);
}

TEST(Fit, FractionalBeatsSarMostOfTheTime) {
  // The fractional model nests SAR, so its maximized likelihood should never
  // fall below it beyond optimizer tolerance.
  const ModelSpec spec = ModelSpec::grid(8, 8, params(0.7, 1.3));
  FitConfig c;
  c.compute_std_errors = false;
  int ok = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const LatticeField y = simulate(spec, 77, r);
    const Likelihood lik(y.values, spec.w1, spec.w2);
    c.variant = Variant::sar;
    const double sar = fit_qml(lik, c).loglik;
    c.variant = Variant::sparfima_noma;
    ok += fit_qml(lik, c).loglik >= sar - 1e-6;
  }
  EXPECT_GE(ok, 19);
}

TEST(Fit, SarStandardErrorsAndFixedComponents) {
  const ModelSpec spec = ModelSpec::grid(12, 12, params(0.5, 1.0, 0.0, 1.0));
  const LatticeField y = simulate(spec, 8);
  FitConfig c;
  c.variant = Variant::sar;
  const FitResult fit = fit_qml(y, spec.w1, spec.w2, c);
  ASSERT_TRUE(fit.converged);
  EXPECT_EQ(fit.estimates.d, 1.0);
  EXPECT_EQ(fit.estimates.lambda, 0.0);
  EXPECT_TRUE(fit.hessian_negative_definite);
  EXPECT_TRUE(fit.std_errors[static_cast<std::size_t>(Param::rho)].has_value());
  EXPECT_FALSE(fit.std_errors[static_cast<std::size_t>(Param::d)].has_value());

  const auto j = nlohmann::json::parse(to_json(fit));
  EXPECT_EQ(j["schema"], "sparfima.fit/1");
  EXPECT_EQ(j["fixed"]["d"], 1.0);
  EXPECT_TRUE(j["std_errors"]["d"].is_null());
  EXPECT_FALSE(j.contains("residuals"));
}

TEST(Fit, NarrowBoundsFlagBoundary) {
  const ModelSpec spec = ModelSpec::grid(8, 8, params(0.9, 1.5));
  const LatticeField y = simulate(spec, 9);
  FitConfig c;
  c.variant = Variant::sparfima_noma;
  Bounds b;
  b.rho_lower = -0.1;
  b.rho_upper = 0.1;
  c.bounds = b;
  const FitResult fit = fit_qml(y, spec.w1, spec.w2, c);
  EXPECT_TRUE(fit.boundary_warning);
  EXPECT_FALSE(fit.std_errors[static_cast<std::size_t>(Param::rho)].has_value());
}

TEST(Fit, StdErrorsReportAgreesWithFit) {
  const ModelSpec spec = ModelSpec::grid(10, 10, params(0.6, 1.0, 0.0, 0.0));
  const LatticeField y = simulate(spec, 10);
  FitConfig c;
  c.variant = Variant::sar;
  const Likelihood lik(y.values, spec.w1, spec.w2);
  const FitResult fit = fit_qml(lik, c);
  const StdErrorReport r = std_errors(fit, lik);
  EXPECT_EQ(r.hessian.rows(), 3);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(r.errors[k].has_value(), fit.std_errors[k].has_value());
  EXPECT_LT(r.gradient_max_abs, 1e-3 * std::max(1.0, std::abs(fit.loglik)));
}

TEST(InfluenceShape, SecondOrderFractionalVersusMatchedSar) {
  // (I - aW)^-2 weights the k-th power of W by (k+1) a^k; a first-order SAR
  // with the same total response needs b > a, so its far tail is heavier.
  const WeightMatrix w = time_shift_matrix(60);
  const double a = 0.5;
  const FractionalOperator frac(w, a, 2.0);
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(60);
  e0(0) = 1.0;
  const Eigen::VectorXd f = frac.apply_inverse(e0);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(f(k), (k + 1) * std::pow(a, k), 1e-12);
  const double b = 1.0 - (1.0 - a) * (1.0 - a);  // equal total mass: 1/(1-b) = 1/(1-a)^2
  EXPECT_GT(f(1), b);                               // heavier at lag one
  EXPECT_LT(f(40), std::pow(b, 40));                // lighter far out
}
