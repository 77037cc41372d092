#include "sparfima/diagnostics.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sparfima/error.hpp"
#include "sparfima/format.hpp"
#include "sparfima/rng.hpp"

namespace sparfima {

namespace {

struct Centered {
  Eigen::VectorXd z;
  double zz;
};

Centered center(const Eigen::VectorXd& values, const WeightMatrix& w) {
  const auto n = values.size();
  if (static_cast<std::size_t>(n) != w.n()) {
    fail(ErrorKind::invalid_argument, "values do not match the weight matrix size");
  }
  if (n < 3) fail(ErrorKind::invalid_argument, "Moran's I needs at least 3 sites");
  if (!values.allFinite()) fail(ErrorKind::invalid_argument, "values must be finite");
  Centered c;
  c.z = values.array() - values.mean();
  c.zz = c.z.squaredNorm();
  const double scale = values.cwiseAbs().maxCoeff();
  if (!(c.zz > 1e-26 * static_cast<double>(n) * scale * scale) || c.zz == 0.0) {
    fail(ErrorKind::degenerate_input, "Moran's I is undefined for a constant field");
  }
  return c;
}

double statistic(const Centered& c, const Eigen::VectorXd& z, const WeightMatrix& w, double s0) {
  const double n = static_cast<double>(z.size());
  return n / s0 * z.dot(w.entries() * z) / c.zz;
}

// For row-standardized weights every non-isolated row sums to one, so S0 is
// the count of such rows; using the count keeps I = -1 exact on checkerboards.
double total_weight(const WeightMatrix& w) {
  double s0 = 0.0;
  if (w.is_row_standardized()) {
    for (std::size_t i = 0; i < w.n(); ++i) s0 += w.neighbor_count(i) > 0 ? 1.0 : 0.0;
  } else {
    s0 = w.entries().sum();
  }
  if (!(s0 != 0.0)) fail(ErrorKind::degenerate_input, "weight matrix has no links");
  return s0;
}

}  // namespace

double morans_i(const Eigen::VectorXd& values, const WeightMatrix& w) {
  const Centered c = center(values, w);
  return statistic(c, c.z, w, total_weight(w));
}

MoranResult morans_test(const Eigen::VectorXd& values, const WeightMatrix& w, std::size_t lag_order) {
  const Centered c = center(values, w);
  const double s0 = total_weight(w);
  const double n = static_cast<double>(values.size());

  const WeightMatrix::Sparse& a = w.entries();
  const WeightMatrix::Sparse at = a.transpose();
  const WeightMatrix::Sparse sym = a + at;
  const double s1 = 0.5 * sym.squaredNorm();
  Eigen::VectorXd rows = w.row_sums();
  Eigen::VectorXd cols = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    for (WeightMatrix::Sparse::InnerIterator it(a, r); it; ++it) cols(it.col()) += it.value();
  }
  const double s2 = (rows + cols).squaredNorm();

  MoranResult out;
  out.lag_order = lag_order;
  out.i_stat = statistic(c, c.z, w, s0);
  out.expected = -1.0 / (n - 1.0);
  const double second = (n * n * s1 - n * s2 + 3.0 * s0 * s0) / ((n * n - 1.0) * s0 * s0);
  out.variance = second - out.expected * out.expected;
  if (!(out.variance > 0.0)) fail(ErrorKind::degenerate_input, "Moran's I null variance is not positive");
  out.z_score = (out.i_stat - out.expected) / std::sqrt(out.variance);
  out.p_value = 0.5 * std::erfc(out.z_score / std::sqrt(2.0));
  return out;
}

PermutationResult morans_permutation_test(const Eigen::VectorXd& values, const WeightMatrix& w,
                                          std::size_t draws, std::uint64_t seed, std::uint64_t stream) {
  if (draws == 0) fail(ErrorKind::invalid_argument, "permutation test needs at least one draw");
  const Centered c = center(values, w);
  const double s0 = total_weight(w);
  PermutationResult out;
  out.i_stat = statistic(c, c.z, w, s0);
  out.draws = draws;

  RandomStream rng(seed, stream);
  Eigen::VectorXd z = c.z;
  std::size_t at_least = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = 0; r < draws; ++r) {
    for (Eigen::Index i = z.size() - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(z(i), z(j));
    }
    const double value = statistic(c, z, w, s0);
    if (value >= out.i_stat) ++at_least;
    sum += value;
    sum_sq += value * value;
  }
  const double m = static_cast<double>(draws);
  out.p_value = (static_cast<double>(at_least) + 1.0) / (m + 1.0);
  out.mean = sum / m;
  out.sd = draws > 1 ? std::sqrt(std::max(0.0, (sum_sq - m * out.mean * out.mean) / (m - 1.0))) : 0.0;
  return out;
}

SpatialAcf spatial_acf(const Eigen::VectorXd& values, const WeightMatrix& w_raw, std::size_t max_lag) {
  if (max_lag == 0) fail(ErrorKind::invalid_argument, "max_lag must be at least 1");
  (void)center(values, w_raw);
  SpatialAcf acf;
  acf.reserve(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const WeightMatrix lag = lag_order_matrix(w_raw, k);
    if (lag.nonzeros() == 0) {
      acf.emplace_back();
      continue;
    }
    acf.emplace_back(morans_test(values, row_standardize(lag), k));
  }
  return acf;
}

std::string acf_csv(const SpatialAcf& acf) {
  std::ostringstream out;
  out << "lag,moran_i,expected,z,p\n";
  for (std::size_t k = 0; k < acf.size(); ++k) {
    out << k + 1;
    if (const auto& r = acf[k]) {
      out << ',' << format_number(r->i_stat) << ',' << format_number(r->expected) << ','
          << format_number(r->z_score) << ',' << format_number(r->p_value) << '\n';
    } else {
      out << ",NA,NA,NA,NA\n";
    }
  }
  return out.str();
}

ResidualDiagnostics residual_diagnostics(const FitResult& fit, const WeightMatrix& w) {
  const auto n = fit.residuals.size();
  if (n < 3) fail(ErrorKind::degenerate_input, "fit carries too few residuals");
  ResidualDiagnostics out;
  const Eigen::ArrayXd centered = fit.residuals.array() - fit.residuals.mean();
  out.residual_sd = std::sqrt(centered.square().sum() / static_cast<double>(n - 1));
  out.moran = morans_test(fit.residuals, w, 1);
  return out;
}

std::string to_json(const ResidualDiagnostics& diagnostics) {
  nlohmann::ordered_json j;
  j["residual_sd"] = diagnostics.residual_sd;
  j["moran"] = {{"lag", diagnostics.moran.lag_order},
                {"i", diagnostics.moran.i_stat},
                {"expected", diagnostics.moran.expected},
                {"variance", diagnostics.moran.variance},
                {"z", diagnostics.moran.z_score},
                {"p", diagnostics.moran.p_value}};
  return j.dump();
}

}  // namespace sparfima
