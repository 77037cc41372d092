#include "sparfima/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sparfima/error.hpp"

namespace sparfima {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

struct Run {
  Eigen::VectorXd x;
  double value;
  std::size_t iterations;
  bool converged;
};

Run simplex_search(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& start,
                   const NelderMeadOptions& options, std::size_t& evaluations) {
  const Eigen::Index dim = start.size();
  const auto np = static_cast<std::size_t>(dim + 1);
  std::vector<Eigen::VectorXd> vertex(np, start);
  std::vector<double> value(np);
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (Eigen::Index i = 0; i < dim; ++i) vertex[static_cast<std::size_t>(i + 1)](i) += options.initial_step;
  for (std::size_t i = 0; i < np; ++i) value[i] = eval(vertex[i]);

  std::vector<std::size_t> order(np);
  std::size_t iterations = 0;
  while (evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[np - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      diameter = std::max(diameter, (vertex[i] - vertex[best]).cwiseAbs().maxCoeff());
    }
    const double spread = value[worst] - value[best];
    if (std::isfinite(spread) && spread <= options.f_tolerance * (1.0 + std::abs(value[best])) &&
        diameter <= options.x_tolerance * (1.0 + vertex[best].cwiseAbs().maxCoeff())) {
      return {vertex[best], value[best], iterations, true};
    }
    ++iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < np; ++i) {
      if (i != worst) centroid += vertex[i];
    }
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflected = centroid + kReflect * (centroid - vertex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < value[best]) {
      const Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < value[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + kContract * (vertex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < np; ++i) {
      if (i == best) continue;
      vertex[i] = vertex[best] + kShrink * (vertex[i] - vertex[best]);
      value[i] = eval(vertex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  return {vertex[best], value[best], iterations, false};
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options) {
  if (start.size() < 1) fail(ErrorKind::invalid_argument, "Nelder-Mead needs at least one coordinate");
  NelderMeadResult result;
  Run run = simplex_search(objective, start, options, result.evaluations);
  result.iterations = run.iterations;
  NelderMeadOptions again = options;
  for (std::size_t r = 0; r < options.restarts && run.converged; ++r) {
    again.initial_step = std::max(options.initial_step * 0.1, 1e3 * options.x_tolerance);
    Run next = simplex_search(objective, run.x, again, result.evaluations);
    result.iterations += next.iterations;
    const bool improved = next.value < run.value - options.f_tolerance * (1.0 + std::abs(run.value));
    if (next.value <= run.value) {
      run.x = next.x;
      run.value = next.value;
    }
    run.converged = next.converged;
    if (!improved) break;
  }
  result.x = run.x;
  result.value = run.value;
  result.converged = run.converged && std::isfinite(run.value);
  return result;
}

}  // namespace sparfima
