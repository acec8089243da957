#include "traceinv/optim.hpp"

#include <cmath>

namespace traceinv {

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const auto n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.grad.resize(n);
  res.value = f(res.x, res.grad);
  if (!std::isfinite(res.value)) return res;

  MatrixXd hinv = MatrixXd::Identity(n, n);
  bool scaled = false;
  VectorXd g_new(n);
  for (int it = 0; it < opts.max_iter; ++it) {
    if (res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    VectorXd dir = -hinv * res.grad;
    double slope = dir.dot(res.grad);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      dir = -res.grad;
      slope = dir.dot(res.grad);
    }
    const double dnorm = dir.lpNorm<Eigen::Infinity>();
    if (dnorm > opts.max_step) {
      dir *= opts.max_step / dnorm;
      slope *= opts.max_step / dnorm;
    }

    double step = 1.0;
    double f_new = 0.0;
    VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      // no descent possible along the (reset) direction: at numerical optimum
      res.converged = res.grad.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.grad_tol);
      break;
    }

    const VectorXd s = x_new - res.x;
    const VectorXd y = g_new - res.grad;
    const double sy = s.dot(y);
    const double f_old = res.value;
    res.x = x_new;
    res.value = f_new;
    res.grad = g_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const MatrixXd eye = MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    if (opts.f_rel_tol > 0.0 &&
        std::abs(f_old - f_new) <= opts.f_rel_tol * std::max(1.0, std::abs(f_new))) {
      res.converged = true;
      break;
    }
  }
  if (res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) res.converged = true;
  return res;
}

}  // namespace traceinv
