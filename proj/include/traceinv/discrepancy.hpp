#pragma once

#include "traceinv/linalg.hpp"

#include <array>
#include <memory>
#include <vector>

namespace traceinv {

/// theta = (sigma2_zeta [ppb^2], a [AR(1) coefficient], d [degrees]).
struct DiscrepancyParams {
  double sigma2 = 1.0;
  double a = 0.0;
  double d = 1.0;

  void validate() const;

  /// Unconstrained coordinates (ln sigma2, atanh a, ln d).
  std::array<double, 3> to_free() const;
  static DiscrepancyParams from_free(const std::array<double, 3>& x);
  /// d theta_k / d x_k for the free coordinates.
  std::array<double, 3> free_jacobian() const;
};

/// e-folding time of the AR(1) temporal correlation, -step / ln(a).
double e_folding_hours(double a, double step_hours);

/// rho_t(lag) = a^|lag| and its derivative |lag| a^(|lag|-1).
double temporal_correlation(double a, Index lag);
double temporal_correlation_da(double a, Index lag);
/// rho_s(h) = exp(-h/d) and its derivative (h/d^2) exp(-h/d).
double spatial_correlation(double d, double h);
double spatial_correlation_dd(double d, double h);

/// Sigma_zeta = sigma2 * R_t(a) (x) R_s(d) on the stacked space-time vector
/// with entry (t, s) at t * q + s. The dense product is never formed; all
/// operations go through the two factors.
class SeparableCovariance {
 public:
  /// `sites` is the q x dim matrix of mole-grid centroids.
  SeparableCovariance(const DiscrepancyParams& theta, const MatrixXd& sites, Index n_steps);

  const DiscrepancyParams& params() const { return theta_; }
  Index n_steps() const { return rt_.rows(); }   // p
  Index n_sites() const { return rs_.rows(); }   // q
  Index size() const { return n_steps() * n_sites(); }
  const MatrixXd& temporal() const { return rt_; }  // R_t
  const MatrixXd& spatial() const { return rs_; }   // R_s
  const JitteredCholesky& temporal_factor() const { return *rt_chol_; }
  const JitteredCholesky& spatial_factor() const { return *rs_chol_; }
  const MatrixXd& spatial_inverse() const { return *rs_inv_; }

  /// Sigma_zeta^{-1} V for V with size() rows.
  MatrixXd solve(const MatrixXd& v) const;
  /// Sigma_zeta V.
  MatrixXd multiply(const MatrixXd& v) const;
  /// ln |Sigma_zeta| = pq ln sigma2 + q ln|R_t| + p ln|R_s|.
  double logdet() const;
  /// v' Sigma_zeta^{-1} v.
  double quadratic_form(const VectorXd& v) const;
  /// sqrt(sigma2) (L_t (x) L_s) z: a draw from N(0, Sigma_zeta) for standard normal z.
  VectorXd correlate(const VectorXd& z) const;

  /// Dense sigma2 R_t (x) R_s; validation sizes only.
  MatrixXd dense() const;

 private:
  DiscrepancyParams theta_;
  MatrixXd rt_, rs_;
  std::shared_ptr<const JitteredCholesky> rt_chol_, rs_chol_;
  std::shared_ptr<const MatrixXd> rs_inv_;
};

/// R_t (p x p) and R_s (q x q) for the given parameters.
std::pair<MatrixXd, MatrixXd> correlation_matrices(const DiscrepancyParams& theta, const MatrixXd& sites,
                                                   Index n_steps);

struct CorrelationDerivatives {
  MatrixXd dRt_da;
  MatrixXd dRs_dd;
};
CorrelationDerivatives param_derivatives(const DiscrepancyParams& theta, const MatrixXd& sites, Index n_steps);

/// Closed-form tridiagonal AR(1) precision R_t(a)^{-1}: every diagonal entry
/// except the two ends equals `mid`, the ends equal `end`, and the first
/// off-diagonal equals `off`.
struct Ar1Precision {
  double end, mid, off;
  static Ar1Precision of(double a);
  /// Entrywise derivative with respect to a.
  static Ar1Precision derivative(double a);
  MatrixXd dense(Index p) const;
};

/// Pairwise Euclidean distances between rows of `sites`.
MatrixXd site_distances(const MatrixXd& sites);

}  // namespace traceinv
