#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "sparfima/error.hpp"
#include "sparfima/fracop.hpp"

using namespace sparfima;

namespace {

WeightMatrix queen_std(std::size_t g) { return row_standardize(queen_contiguity(g, g)); }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(GenBinomial, SmallCases) {
  EXPECT_EQ(gen_binomial(0.5, 0), 1.0);
  EXPECT_EQ(gen_binomial(0.5, 1), 0.5);
  EXPECT_DOUBLE_EQ(gen_binomial(0.5, 2), -0.125);
  EXPECT_DOUBLE_EQ(gen_binomial(5.0, 2), 10.0);
  EXPECT_EQ(gen_binomial(2.0, 3), 0.0);
}

TEST(FractionalOperator, MatchesIndependentMatrixPower) {
  const WeightMatrix w = queen_std(6);
  for (double rho : {-0.6, 0.3, 0.95}) {
    for (double d : {0.25, 1.0, 1.7, 3.0}) {
      const FractionalOperator op(w, rho, d);
      const Eigen::MatrixXd ref = oracle::real_power(oracle::shifted(w, rho), d);
      EXPECT_LT(max_abs(op.matrix() - ref), 1e-9 * std::max(1.0, max_abs(ref))) << rho << " " << d;
    }
  }
}

TEST(FractionalOperator, ApplyInverseUndoesApply) {
  const WeightMatrix w = queen_std(7);
  const FractionalOperator op(w, 0.8, 1.4);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(49, -1.0, 2.0);
  EXPECT_LT((op.apply_inverse(op.apply(v)) - v).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((op.apply(v) - op.matrix() * v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FractionalOperator, DomainChecks) {
  const WeightMatrix w = queen_std(4);
  EXPECT_THROW(FractionalOperator(w, 1.0, 1.0), Error);   // 1 - rho * 1 = 0
  EXPECT_THROW(FractionalOperator(w, 0.5, 0.0), Error);   // d must be positive
  EXPECT_THROW(FractionalOperator(w, 0.5, 6.0), Error);   // above d_max
  try {
    FractionalOperator(w, 1.2, 1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Series, AgreesWithSpectralAndReportsTail) {
  const WeightMatrix w = queen_std(5);
  const SeriesResult s = frac_power_series(w, 0.7, 1.3, 1e-13);
  EXPECT_LT(s.tail_bound, 1e-13);
  EXPECT_GT(s.terms, 10u);
  EXPECT_LT(max_abs(s.matrix - frac_power_spectral(w, 0.7, 1.3)), 1e-10);
}

TEST(Series, IntegerExponentIsFinite) {
  const WeightMatrix w = queen_std(4);
  const SeriesResult s = frac_power_series(w, 0.5, 2.0);
  EXPECT_EQ(s.terms, 2u);
  const Eigen::MatrixXd m = oracle::shifted(w, 0.5);
  EXPECT_LT(max_abs(s.matrix - m * m), 1e-14);
}

TEST(Series, RejectsDivergentNorm) {
  EXPECT_THROW(frac_power_series(queen_std(4), 1.0, 0.5), Error);
}

TEST(Series, MaxTermsRaisesConvergenceError) {
  try {
    frac_power_series(queen_std(4), 0.99, 0.5, 1e-14, 5);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.achieved_bound(), 1e-14);
  }
}

TEST(Series, FallbackUsedWhenNoBasis) {
  const WeightMatrix w = time_shift_matrix(8);
  const FractionalOperator op(w, 0.9, 0.6);
  const Eigen::MatrixXd m = op.matrix();
  EXPECT_DOUBLE_EQ(m(1, 0), -0.6 * 0.9);
  EXPECT_EQ(m(0, 1), 0.0);
  // Without fallback the missing basis is a hard error.
  FracOptions strict;
  strict.series_fallback = false;
  EXPECT_THROW(FractionalOperator(w, 0.9, 0.6, strict).matrix(), Error);
}

TEST(LogDet, OrdSumMatchesDenseDeterminant) {
  const WeightMatrix w = queen_std(8);
  for (double rho : {-0.9, 0.2, 0.99}) {
    EXPECT_NEAR(log_det_frac(w, rho, 1.0), oracle::log_abs_det(oracle::shifted(w, rho)), 1e-9);
    EXPECT_NEAR(log_det_frac(w, rho, 2.0), 2.0 * log_det_frac(w, rho, 1.0), 1e-12);
  }
}

TEST(LogDet, FractionalDeterminantIdentity) {
  const WeightMatrix w = queen_std(6);
  const FractionalOperator op(w, 0.6, 1.7);
  EXPECT_NEAR(op.log_det(), oracle::log_abs_det(op.matrix()), 1e-9);
}

TEST(AdmissibleRange, RowStandardizedQueen) {
  const WeightMatrix w = queen_std(5);
  const CoefficientRange r = admissible_range(w);
  EXPECT_NEAR(r.upper, 1.0, 1e-12);
  EXPECT_NEAR(r.lower, std::max(-1.0, 1.0 / w.spectrum().min()), 1e-12);
  EXPECT_LT(r.lower, 0.0);
}

TEST(ConditionReport, FlagsNearUnitRoot) {
  const WeightMatrix w = queen_std(5);
  EXPECT_FALSE(condition_report(w, 0.5, 1.0).near_degenerate);
  const ConditionReport bad = condition_report(w, 0.999999, 2.0);
  EXPECT_TRUE(bad.near_degenerate);
  EXPECT_GT(bad.ratio, 1e6);
}

TEST(SpatialOperator, LinearCombinationOfLagMatrices) {
  const WeightMatrix raw = queen_contiguity(5, 5);
  const std::vector<WeightMatrix> ws{row_standardize(lag_order_matrix(raw, 1)),
                                     row_standardize(lag_order_matrix(raw, 2))};
  const std::vector<double> coefs{0.4, 0.2};
  const SpatialOperator op = SpatialOperator::linear_combination(ws, coefs);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(25, 25) - 0.4 * ws[0].dense() - 0.2 * ws[1].dense();
  EXPECT_LT(max_abs(op.matrix() - m), 1e-15);
  EXPECT_LT(max_abs(op.power(1.5) - oracle::real_power(m, 1.5)), 1e-9);
  EXPECT_NEAR(op.log_det(), oracle::log_abs_det(m), 1e-10);
}

TEST(SpatialOperator, ProductSharesBasisForSameW) {
  const WeightMatrix w = queen_std(5);
  const SpatialOperator a = SpatialOperator::first_order(w, 0.5);
  const SpatialOperator b = SpatialOperator::first_order(w, -0.3);
  const std::size_t before = eigendecomposition_count();
  const SpatialOperator p = SpatialOperator::product(a, b);
  EXPECT_EQ(eigendecomposition_count(), before);
  const Eigen::MatrixXd m = oracle::shifted(w, 0.5) * oracle::shifted(w, -0.3);
  EXPECT_LT(max_abs(p.matrix() - m), 1e-14);
  EXPECT_LT(max_abs(p.power(0.7) - oracle::real_power(m, 0.7)), 1e-10);
  EXPECT_NEAR(p.log_det(), a.log_det() + b.log_det(), 1e-14);
}
