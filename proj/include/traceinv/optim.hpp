#pragma once

#include <Eigen/Dense>

#include <functional>

namespace traceinv {

/// Objective returning f(x) and writing its gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  int max_iter = 200;
  double grad_tol = 1e-10;  // on the infinity norm of the gradient
  double f_rel_tol = 0.0;   // stop when the relative decrease falls below this
  double max_step = 5.0;    // cap on the infinity norm of a single step
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

/// Dense BFGS minimization with backtracking (Armijo) line search. Each
/// accepted step strictly decreases f; non-finite trial values are treated as
/// failed trials.
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts = {});

}  // namespace traceinv
