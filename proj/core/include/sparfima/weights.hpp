#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace sparfima {

enum class Standardization { raw, row_standardized };

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

// Site coordinates in R^q. Regular grids enumerate (row, col) row-major, so
// site index = row * cols + col and coords(i) = (row, col).
class SiteSet {
 public:
  static SiteSet regular_grid(std::size_t rows, std::size_t cols);
  static SiteSet irregular(Eigen::MatrixXd coords);

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(coords_.cols()); }
  const Eigen::MatrixXd& coords() const noexcept { return coords_; }
  Eigen::VectorXd point(std::size_t i) const { return coords_.row(static_cast<Eigen::Index>(i)).transpose(); }

  const std::optional<GridShape>& grid() const noexcept { return grid_; }
  bool is_regular_grid() const noexcept { return grid_.has_value(); }

 private:
  SiteSet(Eigen::MatrixXd coords, std::optional<GridShape> grid)
      : coords_(std::move(coords)), grid_(grid) {}

  Eigen::MatrixXd coords_;
  std::optional<GridShape> grid_;
};

// W = vectors * diag(eigenvalues) * inverse.
struct SpectralBasis {
  Eigen::MatrixXd vectors;
  Eigen::MatrixXd inverse;
  // 1-norm condition estimate ||V||_1 ||V^-1||_1 (exact 2-norm value for the
  // symmetric and symmetrizable paths).
  double condition = 1.0;
};

struct Spectrum {
  Eigen::VectorXd eigenvalues;
  // Absent when W is not diagonalizable (e.g. the nilpotent time shift).
  std::optional<SpectralBasis> basis;

  double min() const { return eigenvalues.size() ? eigenvalues.minCoeff() : 0.0; }
  double max() const { return eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0; }
};

// Real eigen-structure of a dense matrix: symmetric solver when exactly
// symmetric, zero spectrum without basis when strictly triangular, general
// solver otherwise. Same error contract as WeightMatrix::spectrum().
Spectrum real_spectrum(const Eigen::MatrixXd& a);

// Immutable n x n spatial weight matrix with zero diagonal.
//
// Copies share the lazily computed spectrum; the first caller of spectrum()
// performs the eigendecomposition, concurrent callers block until it is
// available.
class WeightMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  WeightMatrix(Sparse entries, Standardization standardization, std::string provenance);

  std::size_t n() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Sparse& entries() const noexcept { return entries_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(entries_); }
  Standardization standardization() const noexcept { return standardization_; }
  bool is_row_standardized() const noexcept {
    return standardization_ == Standardization::row_standardized;
  }
  const std::string& provenance() const noexcept { return provenance_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  bool is_symmetric() const noexcept { return symmetric_; }
  std::size_t nonzeros() const noexcept { return static_cast<std::size_t>(entries_.nonZeros()); }
  std::size_t neighbor_count(std::size_t i) const;
  Eigen::VectorXd row_sums() const;

  // Cached eigen-structure. Throws unsupported_matrix for spectra with an
  // imaginary part above 1e-8 and numerical_failure on solver breakdown.
  const Spectrum& spectrum() const;
  const Eigen::VectorXd& eigenvalues() const { return spectrum().eigenvalues; }

  // Positive d with W = diag(d)^-1 A for a symmetric A, recorded by
  // row_standardize; enables the symmetric eigensolver path.
  const std::optional<Eigen::VectorXd>& symmetrizer() const noexcept { return symmetrizer_; }

  // Identity of the shared spectrum cache; equal for copies of one matrix.
  const void* cache_id() const noexcept { return cache_.get(); }

  WeightMatrix with_symmetrizer(Eigen::VectorXd degrees) const;
  WeightMatrix with_warning(std::string warning) const;

 private:
  struct Cache;

  Sparse entries_;
  Standardization standardization_;
  std::string provenance_;
  std::vector<std::string> warnings_;
  std::optional<Eigen::VectorXd> symmetrizer_;
  bool symmetric_ = false;
  std::shared_ptr<Cache> cache_;
};

WeightMatrix queen_contiguity(std::size_t rows, std::size_t cols);
WeightMatrix rook_contiguity(std::size_t rows, std::size_t cols);
WeightMatrix grid_contiguity(std::size_t rows, std::size_t cols, bool queen);

// Binary k-nearest-neighbour weights; ties broken by lowest site index.
// Generally asymmetric.
WeightMatrix knn(const SiteSet& sites, std::size_t k);

// Entry (i, j) = ||s_i - s_j||^-power, zero beyond cutoff.
WeightMatrix inverse_distance(const SiteSet& sites, double power,
                              std::optional<double> cutoff = std::nullopt);

// Rows of isolated sites stay zero and are reported in warnings().
WeightMatrix row_standardize(const WeightMatrix& w);

// Binary matrix of pairs at graph distance exactly `order` in the adjacency
// graph of w. Requires a raw binary matrix.
WeightMatrix lag_order_matrix(const WeightMatrix& w, std::size_t order);

// Lower shift matrix: ones on the first subdiagonal.
WeightMatrix time_shift_matrix(std::size_t t);

inline const Eigen::VectorXd& eigenvalues(const WeightMatrix& w) { return w.eigenvalues(); }

// Number of eigendecompositions performed process-wide (instrumentation).
std::size_t eigendecomposition_count() noexcept;

// Sparse triplet CSV (`i,j,w`, zero-based) with a `<path>.meta.json`
// sidecar holding n, standardization and provenance.
void write_weight_triplets(const WeightMatrix& w, const std::string& path);
WeightMatrix read_weight_triplets(const std::string& path);

}  // namespace sparfima
