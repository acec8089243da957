#include "traceinv/flux_process.hpp"

#include "traceinv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace traceinv {

LognormalFluxPrior::LognormalFluxPrior(VectorXd log_mean, MatrixXd log_cov, PriorMode mode)
    : log_mean_(std::move(log_mean)), log_cov_(std::move(log_cov)), mode_(mode) {
  const Index n = log_mean_.size();
  if (log_cov_.rows() != n || log_cov_.cols() != n)
    fail(ErrorKind::DimensionMismatch, "log covariance does not match log mean length");
  if (!log_mean_.allFinite() || !log_cov_.allFinite()) fail(ErrorKind::InvalidParams, "non-finite prior moments");
  if ((log_cov_ - log_cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + log_cov_.cwiseAbs().maxCoeff()))
    fail(ErrorKind::InvalidParams, "log covariance is not symmetric");
  if (n > 0) {
    const double maxdiag = log_cov_.diagonal().maxCoeff();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(log_cov_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(maxdiag, 0.0))
      fail(ErrorKind::InvalidParams, "log covariance is not positive semidefinite");
    if (maxdiag > 0.0) {
      try {
        auto f = std::make_shared<const JitteredCholesky>(log_cov_);
        precision_ = std::make_shared<const MatrixXd>(symmetrize(f->inverse()));
        factor_ = std::move(f);
      } catch (const Error& e) {
        factor_error_ = e.what();
      }
    } else {
      factor_error_ = "log covariance is identically zero";
    }
  }
}

LognormalFluxPrior LognormalFluxPrior::from_params(const FluxPriorParams& params, const SpatialGrid& grid,
                                                   PriorMode mode) {
  params.variogram.validate();
  return LognormalFluxPrior(VectorXd::Constant(grid.size(), params.log_mean), covariance_matrix(params.variogram, grid),
                            mode);
}

const JitteredCholesky& LognormalFluxPrior::factor() const {
  if (!factor_) fail(ErrorKind::FactorizationFailed, factor_error_);
  return *factor_;
}

const MatrixXd& LognormalFluxPrior::precision() const {
  if (!precision_) fail(ErrorKind::FactorizationFailed, factor_error_);
  return *precision_;
}

LognormalFluxPrior LognormalFluxPrior::subset(const std::vector<std::size_t>& keep) const {
  const auto k = static_cast<Index>(keep.size());
  VectorXd m(k);
  MatrixXd c(k, k);
  for (Index i = 0; i < k; ++i) {
    m[i] = log_mean_[static_cast<Index>(keep[static_cast<std::size_t>(i)])];
    for (Index j = 0; j < k; ++j)
      c(i, j) = log_cov_(static_cast<Index>(keep[static_cast<std::size_t>(i)]),
                         static_cast<Index>(keep[static_cast<std::size_t>(j)]));
  }
  return LognormalFluxPrior(std::move(m), std::move(c), mode_);
}

NaturalMoments natural_moments(const LognormalFluxPrior& prior) {
  const VectorXd expo = prior.log_mean() + 0.5 * prior.log_cov().diagonal();
  if (prior.size() > 0 && expo.maxCoeff() > 700.0)
    fail(ErrorKind::MomentOverflow, "log mean plus half log variance exceeds 700");
  NaturalMoments m;
  m.mean = expo.array().exp().matrix();
  m.cov = (m.mean * m.mean.transpose()).array() * prior.log_cov().array().unaryExpr([](double c) {
    return std::expm1(c);
  });
  return m;
}

VectorXd sample_flux(const LognormalFluxPrior& prior, Rng& rng) {
  const VectorXd z = standard_normal(rng, prior.size());
  if (!prior.has_precision()) {
    if (prior.size() > 0 && prior.log_cov().cwiseAbs().maxCoeff() > 0.0) prior.factor();  // rethrows
    return prior.log_mean().array().exp().matrix();
  }
  const VectorXd x = prior.log_mean() + prior.factor().llt().matrixL() * z;
  return x.array().exp().matrix();
}

LognormalFluxPrior to_total_per_cell(const LognormalFluxPrior& prior, const SpatialGrid& grid) {
  if (prior.mode() == PriorMode::total_per_cell) fail(ErrorKind::AlreadyTotal, "prior is already per-cell total");
  if (grid.size() != prior.size()) fail(ErrorKind::DimensionMismatch, "grid size vs prior size");
  return LognormalFluxPrior(prior.log_mean() + grid.areas().array().log().matrix(), prior.log_cov(),
                            PriorMode::total_per_cell);
}

FluxPriorDensity FluxPriorDensity::lognormal(const LognormalFluxPrior& prior) {
  FluxPriorDensity d;
  d.kind_ = Kind::lognormal;
  d.mean_ = prior.log_mean();
  d.precision_ = std::make_shared<const MatrixXd>(prior.precision());
  d.logdet_cov_ = prior.log_cov_logdet();
  return d;
}

FluxPriorDensity FluxPriorDensity::gaussian(VectorXd mean, const MatrixXd& cov) {
  FluxPriorDensity d;
  d.kind_ = Kind::gaussian;
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    fail(ErrorKind::DimensionMismatch, "gaussian prior covariance size");
  const JitteredCholesky chol(cov);
  d.mean_ = std::move(mean);
  d.precision_ = std::make_shared<const MatrixXd>(symmetrize(chol.inverse()));
  d.logdet_cov_ = chol.logdet();
  return d;
}

void FluxPriorDensity::check_domain(const VectorXd& y) const {
  if (y.size() != size()) fail(ErrorKind::DimensionMismatch, "flux vector length vs prior");
  if (kind_ == Kind::lognormal && !(y.minCoeff() > 0.0))
    fail(ErrorKind::DomainError, "flux must be strictly positive under the lognormal prior");
}

double FluxPriorDensity::log_kernel(const VectorXd& y) const {
  check_domain(y);
  if (kind_ == Kind::gaussian) {
    const VectorXd r = y - mean_;
    return -0.5 * r.dot(*precision_ * r);
  }
  const VectorXd ly = y.array().log().matrix();
  const VectorXd r = ly - mean_;
  return -0.5 * r.dot(*precision_ * r) - ly.sum();
}

double FluxPriorDensity::log_density(const VectorXd& y) const {
  return log_kernel(y) - 0.5 * logdet_cov_ - 0.5 * static_cast<double>(size()) * std::log(2.0 * std::numbers::pi);
}

VectorXd FluxPriorDensity::gradient(const VectorXd& y) const {
  check_domain(y);
  if (kind_ == Kind::gaussian) return -(*precision_ * (y - mean_));
  const VectorXd r = y.array().log().matrix() - mean_;
  const VectorXd qr = *precision_ * r;
  return (-(qr.array() + 1.0) / y.array()).matrix();
}

MatrixXd FluxPriorDensity::neg_hessian(const VectorXd& y) const {
  check_domain(y);
  if (kind_ == Kind::gaussian) return *precision_;
  // D_f Q D_f - diag(Q (ln y - mu)) D_ff - D_ff
  const VectorXd inv = y.cwiseInverse();
  const VectorXd qr = *precision_ * (y.array().log().matrix() - mean_);
  MatrixXd h = inv.asDiagonal() * (*precision_) * inv.asDiagonal();
  h.diagonal().array() -= (qr.array() + 1.0) * inv.array().square();
  return h;
}

VectorXd FluxPriorDensity::to_free(const VectorXd& y) const {
  if (kind_ == Kind::gaussian) return y;
  check_domain(y);
  return y.array().log().matrix();
}

VectorXd FluxPriorDensity::from_free(const VectorXd& x) const {
  if (kind_ == Kind::gaussian) return x;
  return x.array().exp().matrix();
}

double FluxPriorDensity::free_log_kernel(const VectorXd& x) const {
  if (x.size() != size()) fail(ErrorKind::DimensionMismatch, "free vector length vs prior");
  const VectorXd r = x - mean_;
  return -0.5 * r.dot(*precision_ * r);
}

VectorXd FluxPriorDensity::free_gradient(const VectorXd& x) const {
  if (x.size() != size()) fail(ErrorKind::DimensionMismatch, "free vector length vs prior");
  return -(*precision_ * (x - mean_));
}

VectorXd FluxPriorDensity::free_jacobian(const VectorXd& x) const {
  if (kind_ == Kind::gaussian) return VectorXd::Ones(x.size());
  return x.array().exp().matrix();
}

}  // namespace traceinv
