#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "sparfima/error.hpp"
#include "sparfima/weights.hpp"

using namespace sparfima;

namespace {

std::size_t cell(std::size_t r, std::size_t c, std::size_t cols) { return r * cols + c; }

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::io;
}

}  // namespace

TEST(Queen, NeighbourCounts) {
  const WeightMatrix w = queen_contiguity(3, 3);
  EXPECT_EQ(w.neighbor_count(cell(1, 1, 3)), 8u);
  EXPECT_EQ(w.neighbor_count(cell(0, 0, 3)), 3u);
  EXPECT_EQ(w.neighbor_count(cell(0, 1, 3)), 5u);
  EXPECT_TRUE(w.is_symmetric());
  EXPECT_EQ(w.standardization(), Standardization::raw);
}

TEST(Queen, SmallestLattice) {
  const Eigen::MatrixXd w = queen_contiguity(1, 2).dense();
  EXPECT_EQ(w, (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
}

TEST(Queen, MatchesBruteForceAdjacency) {
  for (bool queen : {true, false}) {
    EXPECT_EQ(grid_contiguity(4, 6, queen).dense(), oracle::lattice_adjacency(4, 6, queen));
  }
}

TEST(Queen, RejectsBadDimensions) {
  EXPECT_EQ(kind_of([] { queen_contiguity(0, 3); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { queen_contiguity(1, 1); }), ErrorKind::invalid_argument);
}

TEST(Rook, CenterHasFourNeighbours) {
  EXPECT_EQ(rook_contiguity(3, 3).neighbor_count(4), 4u);
}

TEST(Knn, TieBrokenByLowestIndex) {
  Eigen::MatrixXd coords(3, 1);
  coords << 0.0, 1.0, 2.0;
  const WeightMatrix w = knn(SiteSet::irregular(coords), 1);
  EXPECT_EQ(w.dense()(1, 0), 1.0);
  EXPECT_EQ(w.dense()(1, 2), 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(w.neighbor_count(i), 1u);
}

TEST(Knn, RejectsKAtLeastN) {
  Eigen::MatrixXd coords(3, 1);
  coords << 0.0, 1.0, 2.0;
  EXPECT_EQ(kind_of([&] { knn(SiteSet::irregular(coords), 3); }), ErrorKind::invalid_argument);
}

TEST(InverseDistance, Values) {
  Eigen::MatrixXd coords(2, 2);
  coords << 0.0, 0.0, 2.0, 0.0;
  const Eigen::MatrixXd w = inverse_distance(SiteSet::irregular(coords), 1.0).dense();
  EXPECT_DOUBLE_EQ(w(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.5);
  EXPECT_EQ(w(0, 0), 0.0);
}

TEST(InverseDistance, DuplicateSitesAreDegenerate) {
  Eigen::MatrixXd coords(3, 2);
  coords << 0, 0, 1, 1, 0, 0;
  EXPECT_EQ(kind_of([&] { inverse_distance(SiteSet::irregular(coords), 2.0); }), ErrorKind::degenerate_geometry);
}

TEST(RowStandardize, RowsSumToOne) {
  const WeightMatrix w = row_standardize(queen_contiguity(5, 4));
  EXPECT_TRUE(w.is_row_standardized());
  EXPECT_LT((w.row_sums().array() - 1.0).abs().maxCoeff(), 1e-12);
  ASSERT_TRUE(w.symmetrizer().has_value());
}

TEST(RowStandardize, IsolatesWarnAndStayZero) {
  Eigen::MatrixXd coords(3, 1);
  coords << 0.0, 1.0, 10.0;
  const WeightMatrix w = row_standardize(inverse_distance(SiteSet::irregular(coords), 1.0, 2.0));
  EXPECT_FALSE(w.warnings().empty());
  EXPECT_EQ(w.row_sums()(2), 0.0);
  EXPECT_DOUBLE_EQ(w.row_sums()(0), 1.0);
}

TEST(RowStandardize, TwiceIsAnError) {
  const WeightMatrix w = row_standardize(queen_contiguity(3, 3));
  EXPECT_EQ(kind_of([&] { row_standardize(w); }), ErrorKind::invalid_state);
}

TEST(Spectrum, EigenvaluesAnnihilateCharacteristicPolynomial) {
  const WeightMatrix w = row_standardize(queen_contiguity(4, 4));
  const Eigen::MatrixXd a = w.dense();
  const Eigen::VectorXd ev = w.eigenvalues();
  ASSERT_EQ(ev.size(), 16);
  // Compare with an independent dense solver.
  Eigen::VectorXd ref = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues().real();
  std::sort(ref.data(), ref.data() + ref.size());
  Eigen::VectorXd got = ev;
  std::sort(got.data(), got.data() + got.size());
  EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(got.maxCoeff(), 1.0, 1e-12);
  const auto& basis = w.spectrum().basis;
  ASSERT_TRUE(basis.has_value());
  EXPECT_LT((basis->vectors * ev.asDiagonal() * basis->inverse - a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectrum, ComputedOnceAndShared) {
  const WeightMatrix w = row_standardize(queen_contiguity(6, 6));
  const WeightMatrix copy = w;
  const std::size_t before = eigendecomposition_count();
  (void)w.spectrum();
  (void)copy.spectrum();
  (void)w.eigenvalues();
  EXPECT_EQ(eigendecomposition_count(), before + 1);
  EXPECT_EQ(w.cache_id(), copy.cache_id());
}

TEST(Spectrum, TimeShiftIsNilpotent) {
  const WeightMatrix w = time_shift_matrix(6);
  EXPECT_EQ(w.eigenvalues(), Eigen::VectorXd::Zero(6));
  EXPECT_FALSE(w.spectrum().basis.has_value());
  EXPECT_EQ(w.dense()(3, 2), 1.0);
  EXPECT_EQ(w.dense()(2, 3), 0.0);
}

TEST(Spectrum, ComplexSpectrumRejected) {
  // Directed 3-cycle: eigenvalues are the cube roots of unity.
  WeightMatrix::Sparse s(3, 3);
  s.insert(0, 1) = 1.0;
  s.insert(1, 2) = 1.0;
  s.insert(2, 0) = 1.0;
  const WeightMatrix w(s, Standardization::raw, "cycle");
  EXPECT_EQ(kind_of([&] { (void)w.spectrum(); }), ErrorKind::unsupported_matrix);
}

TEST(WeightMatrix, RejectsNonZeroDiagonal) {
  WeightMatrix::Sparse s(2, 2);
  s.insert(0, 0) = 1.0;
  s.insert(0, 1) = 1.0;
  EXPECT_EQ(kind_of([&] { WeightMatrix(s, Standardization::raw, "bad"); }), ErrorKind::invalid_argument);
}

TEST(LagOrder, RingsOnQueenLattice) {
  const WeightMatrix w = queen_contiguity(5, 5);
  EXPECT_EQ(lag_order_matrix(w, 1).dense(), w.dense());
  const WeightMatrix lag2 = lag_order_matrix(w, 2);
  EXPECT_EQ(lag2.neighbor_count(cell(2, 2, 5)), 16u);
  EXPECT_EQ(lag2.dense()(cell(2, 2, 5), cell(0, 0, 5)), 1.0);
  EXPECT_EQ(lag_order_matrix(w, 5).nonzeros(), 0u);
}

TEST(LagOrder, RequiresRawBinary) {
  EXPECT_EQ(kind_of([] { lag_order_matrix(row_standardize(queen_contiguity(3, 3)), 2); }),
            ErrorKind::invalid_state);
}

TEST(TripletIo, RoundTripKeepsValuesAndSymmetrizer) {
  const auto dir = oracle::scratch_dir("weights");
  const std::string path = (dir / "w.csv").string();
  const WeightMatrix w = row_standardize(queen_contiguity(4, 3));
  write_weight_triplets(w, path);
  const WeightMatrix back = read_weight_triplets(path);
  EXPECT_EQ(back.dense(), w.dense());
  EXPECT_EQ(back.standardization(), w.standardization());
  EXPECT_EQ(back.provenance(), w.provenance());
  EXPECT_TRUE(back.symmetrizer().has_value());
  std::filesystem::remove_all(dir);
}

TEST(TripletIo, MalformedLineReportsLineNumber) {
  const auto dir = oracle::scratch_dir("weights-bad");
  const std::string path = (dir / "w.csv").string();
  write_weight_triplets(queen_contiguity(2, 2), path);
  {
    std::ofstream out(path, std::ios::app);
    out << "1,x,2\n";
  }
  try {
    read_weight_triplets(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 1u);
  }
  std::filesystem::remove_all(dir);
}
