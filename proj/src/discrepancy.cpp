#include "traceinv/discrepancy.hpp"

#include "traceinv/errors.hpp"

#include <cmath>

namespace traceinv {

void DiscrepancyParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail(ErrorKind::InvalidParams, "sigma2_zeta must be positive");
  if (!(std::abs(a) < 1.0)) fail(ErrorKind::InvalidParams, "temporal coefficient needs |a| < 1");
  if (!(d > 0.0) || !std::isfinite(d)) fail(ErrorKind::InvalidParams, "spatial range d must be positive");
}

std::array<double, 3> DiscrepancyParams::to_free() const {
  return {std::log(sigma2), std::atanh(a), std::log(d)};
}

DiscrepancyParams DiscrepancyParams::from_free(const std::array<double, 3>& x) {
  return {std::exp(x[0]), std::tanh(x[1]), std::exp(x[2])};
}

std::array<double, 3> DiscrepancyParams::free_jacobian() const {
  return {sigma2, 1.0 - a * a, d};
}

double e_folding_hours(double a, double step_hours) { return -step_hours / std::log(a); }

double temporal_correlation(double a, Index lag) {
  const Index k = lag < 0 ? -lag : lag;
  return k == 0 ? 1.0 : std::pow(a, static_cast<double>(k));
}

double temporal_correlation_da(double a, Index lag) {
  const Index k = lag < 0 ? -lag : lag;
  if (k == 0) return 0.0;
  return static_cast<double>(k) * std::pow(a, static_cast<double>(k - 1));
}

double spatial_correlation(double d, double h) { return std::exp(-h / d); }

double spatial_correlation_dd(double d, double h) { return h / (d * d) * std::exp(-h / d); }

MatrixXd site_distances(const MatrixXd& sites) {
  const Index q = sites.rows();
  MatrixXd h(q, q);
  for (Index j = 0; j < q; ++j) {
    h(j, j) = 0.0;
    for (Index i = j + 1; i < q; ++i) h(i, j) = h(j, i) = (sites.row(i) - sites.row(j)).norm();
  }
  return h;
}

std::pair<MatrixXd, MatrixXd> correlation_matrices(const DiscrepancyParams& theta, const MatrixXd& sites,
                                                   Index n_steps) {
  theta.validate();
  MatrixXd rt(n_steps, n_steps);
  for (Index i = 0; i < n_steps; ++i)
    for (Index j = 0; j < n_steps; ++j) rt(i, j) = temporal_correlation(theta.a, i - j);
  const MatrixXd h = site_distances(sites);
  MatrixXd rs = h.unaryExpr([&](double x) { return spatial_correlation(theta.d, x); });
  return {std::move(rt), std::move(rs)};
}

CorrelationDerivatives param_derivatives(const DiscrepancyParams& theta, const MatrixXd& sites, Index n_steps) {
  theta.validate();
  CorrelationDerivatives out;
  out.dRt_da.resize(n_steps, n_steps);
  for (Index i = 0; i < n_steps; ++i)
    for (Index j = 0; j < n_steps; ++j) out.dRt_da(i, j) = temporal_correlation_da(theta.a, i - j);
  out.dRs_dd = site_distances(sites).unaryExpr([&](double x) { return spatial_correlation_dd(theta.d, x); });
  return out;
}

Ar1Precision Ar1Precision::of(double a) {
  const double s = 1.0 - a * a;
  return {1.0 / s, (1.0 + a * a) / s, -a / s};
}

Ar1Precision Ar1Precision::derivative(double a) {
  const double s = 1.0 - a * a;
  const double s2 = s * s;
  return {2.0 * a / s2, 4.0 * a / s2, -(1.0 + a * a) / s2};
}

MatrixXd Ar1Precision::dense(Index p) const {
  MatrixXd m = MatrixXd::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    m(i, i) = (i == 0 || i == p - 1) ? end : mid;
    if (i + 1 < p) m(i, i + 1) = m(i + 1, i) = off;
  }
  if (p == 1) m(0, 0) = 1.0;
  return m;
}

SeparableCovariance::SeparableCovariance(const DiscrepancyParams& theta, const MatrixXd& sites, Index n_steps)
    : theta_(theta) {
  if (n_steps < 1 || sites.rows() < 1) fail(ErrorKind::DimensionMismatch, "empty space-time domain");
  auto [rt, rs] = correlation_matrices(theta, sites, n_steps);
  rt_ = std::move(rt);
  rs_ = std::move(rs);
  try {
    rt_chol_ = std::make_shared<const JitteredCholesky>(rt_);
    rs_chol_ = std::make_shared<const JitteredCholesky>(rs_);
  } catch (const Error& e) {
    fail(ErrorKind::SingularFactor, e.what());
  }
  rs_inv_ = std::make_shared<const MatrixXd>(symmetrize(rs_chol_->inverse()));
}

namespace {

// vec(V) with V (q x p) column-major is the stacked vector with entry (t, s)
// at t * q + s, so (A (x) B) vec(V) = vec(B V A').
template <typename F>
MatrixXd apply_columnwise(const MatrixXd& v, Index q, Index p, F&& f) {
  if (v.rows() != p * q) fail(ErrorKind::DimensionMismatch, "stacked vector length vs p*q");
  MatrixXd out(v.rows(), v.cols());
  for (Index c = 0; c < v.cols(); ++c) {
    Eigen::Map<const MatrixXd> vm(v.col(c).data(), q, p);
    Eigen::Map<MatrixXd> om(out.col(c).data(), q, p);
    om = f(MatrixXd(vm));
  }
  return out;
}

}  // namespace

MatrixXd SeparableCovariance::solve(const MatrixXd& v) const {
  const double inv_s2 = 1.0 / theta_.sigma2;
  return apply_columnwise(v, n_sites(), n_steps(), [&](const MatrixXd& vm) {
    MatrixXd x = rs_chol_->solve(vm);                            // R_s^{-1} V
    x = rt_chol_->solve(x.transpose()).transpose();              // ... R_t^{-1}
    return MatrixXd(inv_s2 * x);
  });
}

MatrixXd SeparableCovariance::multiply(const MatrixXd& v) const {
  return apply_columnwise(v, n_sites(), n_steps(),
                          [&](const MatrixXd& vm) { return MatrixXd(theta_.sigma2 * (rs_ * vm * rt_)); });
}

double SeparableCovariance::logdet() const {
  const double p = static_cast<double>(n_steps());
  const double q = static_cast<double>(n_sites());
  return p * q * std::log(theta_.sigma2) + q * rt_chol_->logdet() + p * rs_chol_->logdet();
}

double SeparableCovariance::quadratic_form(const VectorXd& v) const { return v.dot(solve(v).col(0)); }

VectorXd SeparableCovariance::correlate(const VectorXd& z) const {
  const MatrixXd lt = rt_chol_->matrix_l();
  const MatrixXd ls = rs_chol_->matrix_l();
  const double s = std::sqrt(theta_.sigma2);
  return apply_columnwise(z, n_sites(), n_steps(),
                          [&](const MatrixXd& zm) { return MatrixXd(s * (ls * zm * lt.transpose())); });
}

MatrixXd SeparableCovariance::dense() const {
  const Index p = n_steps(), q = n_sites();
  MatrixXd k(p * q, p * q);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) k.block(i * q, j * q, q, q) = theta_.sigma2 * rt_(i, j) * rs_;
  return k;
}

}  // namespace traceinv
