#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace sparfima {

struct NelderMeadOptions {
  std::size_t max_evaluations = 4000;
  // Stop when f_max - f_min <= f_tolerance * (1 + |f_min|) and the simplex
  // diameter <= x_tolerance * (1 + ||x_best||).
  double f_tolerance = 1e-11;
  double x_tolerance = 1e-8;
  double initial_step = 0.5;
  // Fresh simplices built around the incumbent after convergence; guards
  // against premature collapse.
  std::size_t restarts = 2;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Unconstrained minimization; non-finite objective values count as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace sparfima
