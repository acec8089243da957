#pragma once

#include "traceinv/domains.hpp"
#include "traceinv/inventory_calibration.hpp"
#include "traceinv/linalg.hpp"
#include "traceinv/rng.hpp"
#include "traceinv/srr.hpp"

#include <memory>
#include <string>

namespace traceinv {

/// Lognormal spatial prior for the flux: ln Y_f ~ N(log_mean, log_cov).
/// In total_per_cell mode the variate is A(u) Y_f(u) and log_mean carries
/// the ln A(u) shift.
class LognormalFluxPrior {
 public:
  LognormalFluxPrior(VectorXd log_mean, MatrixXd log_cov, PriorMode mode = PriorMode::density);

  /// Constant log mean c with the variogram covariance over `grid`.
  static LognormalFluxPrior from_params(const FluxPriorParams& params, const SpatialGrid& grid,
                                        PriorMode mode = PriorMode::density);

  Index size() const { return log_mean_.size(); }
  const VectorXd& log_mean() const { return log_mean_; }
  const MatrixXd& log_cov() const { return log_cov_; }
  PriorMode mode() const { return mode_; }

  /// False only when log_cov is not factorizable (e.g. identically zero).
  bool has_precision() const { return static_cast<bool>(factor_); }
  /// Throws FactorizationFailed when !has_precision().
  const JitteredCholesky& factor() const;
  const MatrixXd& precision() const;
  double log_cov_logdet() const { return factor().logdet(); }

  /// Restriction to the listed cells (a marginal of the Gaussian log field).
  LognormalFluxPrior subset(const std::vector<std::size_t>& keep) const;

 private:
  VectorXd log_mean_;
  MatrixXd log_cov_;
  PriorMode mode_;
  std::shared_ptr<const JitteredCholesky> factor_;
  std::shared_ptr<const MatrixXd> precision_;
  std::string factor_error_;
};

struct NaturalMoments {
  VectorXd mean;
  MatrixXd cov;
};

/// Mean exp(mu + C(s,s)/2) and covariance mu(s) mu(u) (exp(C(s,u)) - 1).
NaturalMoments natural_moments(const LognormalFluxPrior& prior);

/// exp(log_mean + L z); strictly positive.
VectorXd sample_flux(const LognormalFluxPrior& prior, Rng& rng);

/// Shifts the log mean by ln A(s); covariance is carried over unchanged.
LognormalFluxPrior to_total_per_cell(const LognormalFluxPrior& prior, const SpatialGrid& grid);

/// Prior term of the joint log density as used by the E-step and the HMC
/// target: the lognormal prior (including its -sum ln Y Jacobian) or, for
/// validation only, a Gaussian prior on Y_f itself.
class FluxPriorDensity {
 public:
  enum class Kind { lognormal, gaussian };

  static FluxPriorDensity lognormal(const LognormalFluxPrior& prior);
  static FluxPriorDensity gaussian(VectorXd mean, const MatrixXd& cov);

  Kind kind() const { return kind_; }
  Index size() const { return mean_.size(); }
  /// log_mean for lognormal, mean for gaussian.
  const VectorXd& location() const { return mean_; }
  const MatrixXd& precision() const { return *precision_; }

  /// Log density without normalizing constants (the form used in the joint
  /// log density). DomainError on non-positive entries for lognormal.
  double log_kernel(const VectorXd& y) const;
  /// Fully normalized log density.
  double log_density(const VectorXd& y) const;
  VectorXd gradient(const VectorXd& y) const;
  /// Negative Hessian with respect to Y_f.
  MatrixXd neg_hessian(const VectorXd& y) const;

  /// Unconstrained coordinates for optimization and HMC: ln Y for
  /// lognormal, Y for gaussian.
  VectorXd to_free(const VectorXd& y) const;
  VectorXd from_free(const VectorXd& x) const;

  /// Prior log density of the free coordinates up to a constant: for
  /// lognormal the Jacobian of Y = exp(x) cancels the -sum ln Y term, leaving
  /// a Gaussian kernel in x.
  double free_log_kernel(const VectorXd& x) const;
  VectorXd free_gradient(const VectorXd& x) const;
  /// dY/dx elementwise (Y for lognormal, 1 for gaussian).
  VectorXd free_jacobian(const VectorXd& x) const;

  void check_domain(const VectorXd& y) const;

 private:
  Kind kind_ = Kind::lognormal;
  VectorXd mean_;
  std::shared_ptr<const MatrixXd> precision_;
  double logdet_cov_ = 0.0;
};

}  // namespace traceinv
