#include "sparfima/weights.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sparfima/error.hpp"

namespace sparfima {

namespace {

std::atomic<std::size_t> g_decompositions{0};

constexpr double kImagTolerance = 1e-8;
constexpr double kReconstructionTolerance = 1e-8;

using Triplet = Eigen::Triplet<double>;

WeightMatrix::Sparse from_triplets(std::size_t n, const std::vector<Triplet>& triplets) {
  WeightMatrix::Sparse m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

bool exactly_symmetric(const WeightMatrix::Sparse& m) {
  const WeightMatrix::Sparse t = m.transpose();
  if (t.nonZeros() != m.nonZeros()) return false;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    WeightMatrix::Sparse::InnerIterator a(m, r);
    WeightMatrix::Sparse::InnerIterator b(t, r);
    for (; a && b; ++a, ++b) {
      if (a.col() != b.col() || a.value() != b.value()) return false;
    }
    if (a || b) return false;
  }
  return true;
}

bool strictly_triangular(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  bool lower = true;
  bool upper = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      if (j >= i) lower = false;
      if (j <= i) upper = false;
    }
  }
  return lower || upper;
}

Spectrum symmetric_spectrum(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::numerical_failure, "symmetric eigensolver did not converge");
  }
  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.basis = SpectralBasis{solver.eigenvectors(), solver.eigenvectors().transpose(), 1.0};
  return s;
}

// W = G^-1 A with A symmetric: S = G^-1/2 A G^-1/2 is symmetric and similar to W.
Spectrum symmetrizable_spectrum(const Eigen::MatrixXd& w, const Eigen::VectorXd& g) {
  const Eigen::VectorXd root = g.cwiseSqrt();
  const Eigen::VectorXd inv_root = root.cwiseInverse();
  Eigen::MatrixXd s = root.asDiagonal() * w * inv_root.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::numerical_failure, "symmetric eigensolver did not converge");
  }
  Spectrum out;
  out.eigenvalues = solver.eigenvalues();
  const Eigen::MatrixXd& u = solver.eigenvectors();
  out.basis = SpectralBasis{inv_root.asDiagonal() * u, u.transpose() * root.asDiagonal(),
                            std::sqrt(g.maxCoeff() / g.minCoeff())};
  return out;
}

Spectrum general_spectrum(const Eigen::MatrixXd& w) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(w, true);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::numerical_failure, "general eigensolver did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const double max_imag = values.imag().cwiseAbs().maxCoeff();
  if (max_imag > kImagTolerance) {
    std::ostringstream msg;
    msg << "weight matrix has a complex spectrum (max |imag| = " << max_imag << ")";
    fail(ErrorKind::unsupported_matrix, msg.str());
  }
  Spectrum out;
  out.eigenvalues = values.real();

  const Eigen::MatrixXd v = solver.eigenvectors().real();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(v);
  const double det = lu.determinant();
  if (!std::isfinite(det) || det == 0.0) return out;
  Eigen::MatrixXd v_inv = lu.inverse();
  if (!v_inv.allFinite()) return out;

  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd recon = v * out.eigenvalues.asDiagonal() * v_inv;
  if ((recon - w).cwiseAbs().maxCoeff() > kReconstructionTolerance * scale) return out;

  const double cond = v.cwiseAbs().colwise().sum().maxCoeff() *
                      v_inv.cwiseAbs().colwise().sum().maxCoeff();
  out.basis = SpectralBasis{v, std::move(v_inv), cond};
  return out;
}

}  // namespace

Spectrum real_spectrum(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Spectrum s;
  if ((a.array() == 0.0).all()) {
    s.eigenvalues = Eigen::VectorXd::Zero(n);
    s.basis = SpectralBasis{Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n), 1.0};
  } else if (strictly_triangular(a)) {
    // Nonzero nilpotent: all eigenvalues vanish and no eigenbasis exists.
    s.eigenvalues = Eigen::VectorXd::Zero(n);
  } else if (a == a.transpose()) {
    s = symmetric_spectrum(a);
  } else {
    s = general_spectrum(a);
  }
  g_decompositions.fetch_add(1, std::memory_order_relaxed);
  return s;
}

struct WeightMatrix::Cache {
  std::once_flag once;
  Spectrum spectrum;
};

SiteSet SiteSet::regular_grid(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) fail(ErrorKind::invalid_argument, "grid dimensions must be >= 1");
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(rows * cols), 2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto i = static_cast<Eigen::Index>(r * cols + c);
      coords(i, 0) = static_cast<double>(r);
      coords(i, 1) = static_cast<double>(c);
    }
  }
  return SiteSet(std::move(coords), GridShape{rows, cols});
}

SiteSet SiteSet::irregular(Eigen::MatrixXd coords) {
  if (coords.rows() < 1 || coords.cols() < 1) {
    fail(ErrorKind::invalid_argument, "site set needs at least one point in dimension >= 1");
  }
  if (!coords.allFinite()) fail(ErrorKind::invalid_argument, "site coordinates must be finite");
  return SiteSet(std::move(coords), std::nullopt);
}

WeightMatrix::WeightMatrix(Sparse entries, Standardization standardization, std::string provenance)
    : entries_(std::move(entries)),
      standardization_(standardization),
      provenance_(std::move(provenance)),
      cache_(std::make_shared<Cache>()) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    fail(ErrorKind::invalid_argument, "weight matrix must be square and non-empty");
  }
  entries_.prune(0.0);
  entries_.makeCompressed();
  for (Eigen::Index r = 0; r < entries_.outerSize(); ++r) {
    for (Sparse::InnerIterator it(entries_, r); it; ++it) {
      if (!std::isfinite(it.value())) fail(ErrorKind::invalid_argument, "non-finite weight");
      if (it.col() == r) fail(ErrorKind::invalid_argument, "weight matrix diagonal must be zero");
    }
  }
  symmetric_ = exactly_symmetric(entries_);
}

std::size_t WeightMatrix::neighbor_count(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return static_cast<std::size_t>(entries_.outerIndexPtr()[r + 1] - entries_.outerIndexPtr()[r]);
}

Eigen::VectorXd WeightMatrix::row_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(entries_.rows());
  for (Eigen::Index r = 0; r < entries_.outerSize(); ++r) {
    for (Sparse::InnerIterator it(entries_, r); it; ++it) sums(r) += it.value();
  }
  return sums;
}

const Spectrum& WeightMatrix::spectrum() const {
  std::call_once(cache_->once, [this] {
    const Eigen::MatrixXd a = dense();
    if (symmetrizer_ && !symmetric_ && entries_.nonZeros() > 0) {
      cache_->spectrum = symmetrizable_spectrum(a, *symmetrizer_);
      g_decompositions.fetch_add(1, std::memory_order_relaxed);
    } else {
      cache_->spectrum = real_spectrum(a);
    }
  });
  return cache_->spectrum;
}

WeightMatrix WeightMatrix::with_symmetrizer(Eigen::VectorXd degrees) const {
  if (degrees.size() != entries_.rows() || (degrees.array() <= 0.0).any()) {
    fail(ErrorKind::invalid_argument, "symmetrizer must be a positive vector of length n");
  }
  WeightMatrix copy(entries_, standardization_, provenance_);
  copy.warnings_ = warnings_;
  copy.symmetrizer_ = std::move(degrees);
  return copy;
}

WeightMatrix WeightMatrix::with_warning(std::string warning) const {
  WeightMatrix copy(entries_, standardization_, provenance_);
  copy.warnings_ = warnings_;
  copy.warnings_.push_back(std::move(warning));
  copy.symmetrizer_ = symmetrizer_;
  return copy;
}

std::size_t eigendecomposition_count() noexcept {
  return g_decompositions.load(std::memory_order_relaxed);
}

WeightMatrix grid_contiguity(std::size_t rows, std::size_t cols, bool queen) {
  if (rows < 1 || cols < 1) fail(ErrorKind::invalid_argument, "grid dimensions must be >= 1");
  if (rows * cols < 2) fail(ErrorKind::invalid_argument, "grid must contain at least two cells");
  std::vector<Triplet> triplets;
  triplets.reserve(rows * cols * (queen ? 8 : 4));
  const auto R = static_cast<long>(rows);
  const auto C = static_cast<long>(cols);
  for (long r = 0; r < R; ++r) {
    for (long c = 0; c < C; ++c) {
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (!queen && dr != 0 && dc != 0) continue;
          const long rr = r + dr;
          const long cc = c + dc;
          if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
          triplets.emplace_back(static_cast<int>(r * C + c), static_cast<int>(rr * C + cc), 1.0);
        }
      }
    }
  }
  std::ostringstream prov;
  prov << (queen ? "queen" : "rook") << "(" << rows << "," << cols << ")";
  return WeightMatrix(from_triplets(rows * cols, triplets), Standardization::raw, prov.str());
}

WeightMatrix queen_contiguity(std::size_t rows, std::size_t cols) {
  return grid_contiguity(rows, cols, true);
}

WeightMatrix rook_contiguity(std::size_t rows, std::size_t cols) {
  return grid_contiguity(rows, cols, false);
}

WeightMatrix knn(const SiteSet& sites, std::size_t k) {
  const std::size_t n = sites.size();
  if (k < 1 || k >= n) fail(ErrorKind::invalid_argument, "knn requires 1 <= k < n");
  const Eigen::MatrixXd& x = sites.coords();
  std::vector<Triplet> triplets;
  triplets.reserve(n * k);
  std::vector<std::pair<double, std::size_t>> candidates(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist2 =
          (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
      candidates[m++] = {dist2, j};
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(k), candidates.end());
    for (std::size_t t = 0; t < k; ++t) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(candidates[t].second), 1.0);
    }
  }
  return WeightMatrix(from_triplets(n, triplets), Standardization::raw,
                      "knn(k=" + std::to_string(k) + ")");
}

WeightMatrix inverse_distance(const SiteSet& sites, double power, std::optional<double> cutoff) {
  if (!(power > 0.0) || !std::isfinite(power)) {
    fail(ErrorKind::invalid_argument, "inverse-distance power must be positive");
  }
  if (cutoff && !(*cutoff > 0.0)) fail(ErrorKind::invalid_argument, "cutoff must be positive");
  const std::size_t n = sites.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "inverse distance needs at least two sites");
  const Eigen::MatrixXd& x = sites.coords();
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist =
          (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
      if (dist == 0.0) {
        fail(ErrorKind::degenerate_geometry,
             "duplicate coordinates at sites " + std::to_string(i) + " and " + std::to_string(j));
      }
      if (cutoff && dist > *cutoff) continue;
      const double value = std::pow(dist, -power);
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), value);
      triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), value);
    }
  }
  std::ostringstream prov;
  prov << "inverse_distance(power=" << power;
  if (cutoff) prov << ",cutoff=" << *cutoff;
  prov << ")";
  return WeightMatrix(from_triplets(n, triplets), Standardization::raw, prov.str());
}

WeightMatrix row_standardize(const WeightMatrix& w) {
  if (w.is_row_standardized()) {
    fail(ErrorKind::invalid_state, "weight matrix is already row-standardized");
  }
  WeightMatrix::Sparse m = w.entries();
  const Eigen::VectorXd sums = w.row_sums();
  std::size_t isolates = 0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    if (sums(r) == 0.0) {
      ++isolates;
      continue;
    }
    for (WeightMatrix::Sparse::InnerIterator it(m, r); it; ++it) it.valueRef() /= sums(r);
  }
  WeightMatrix out(std::move(m), Standardization::row_standardized,
                   "row_standardize(" + w.provenance() + ")");
  if (w.is_symmetric()) {
    Eigen::VectorXd degrees = sums;
    for (Eigen::Index i = 0; i < degrees.size(); ++i) {
      if (degrees(i) == 0.0) degrees(i) = 1.0;
    }
    out = out.with_symmetrizer(std::move(degrees));
  }
  if (isolates > 0) {
    out = out.with_warning(std::to_string(isolates) + " isolated site(s) left with zero rows");
  }
  return out;
}

WeightMatrix lag_order_matrix(const WeightMatrix& w, std::size_t order) {
  if (order < 1) fail(ErrorKind::invalid_argument, "lag order must be >= 1");
  if (w.is_row_standardized()) {
    fail(ErrorKind::invalid_state, "lag orders require a raw contiguity matrix");
  }
  const WeightMatrix::Sparse& a = w.entries();
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    for (WeightMatrix::Sparse::InnerIterator it(a, r); it; ++it) {
      if (it.value() != 1.0) fail(ErrorKind::invalid_argument, "lag orders require a binary matrix");
    }
  }
  const std::size_t n = w.n();
  std::vector<Triplet> triplets;
  std::vector<std::size_t> dist(n);
  std::deque<std::size_t> queue;
  constexpr std::size_t unseen = static_cast<std::size_t>(-1);
  for (std::size_t src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), unseen);
    dist[src] = 0;
    queue.assign(1, src);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      if (dist[u] == order) {
        triplets.emplace_back(static_cast<int>(src), static_cast<int>(u), 1.0);
        continue;
      }
      for (WeightMatrix::Sparse::InnerIterator it(a, static_cast<Eigen::Index>(u)); it; ++it) {
        const auto v = static_cast<std::size_t>(it.col());
        if (dist[v] != unseen) continue;
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return WeightMatrix(from_triplets(n, triplets), Standardization::raw,
                      "lag_order(" + std::to_string(order) + "," + w.provenance() + ")");
}

WeightMatrix time_shift_matrix(std::size_t t) {
  if (t < 2) fail(ErrorKind::invalid_argument, "time shift matrix needs t >= 2");
  std::vector<Triplet> triplets;
  for (std::size_t i = 1; i < t; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i - 1), 1.0);
  }
  return WeightMatrix(from_triplets(t, triplets), Standardization::raw,
                      "time_shift(" + std::to_string(t) + ")");
}

}  // namespace sparfima
