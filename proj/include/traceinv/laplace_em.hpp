#pragma once

#include "traceinv/bivariate_moments.hpp"
#include "traceinv/discrepancy.hpp"
#include "traceinv/flux_process.hpp"
#include "traceinv/linalg.hpp"
#include "traceinv/rng.hpp"

#include <array>
#include <memory>
#include <vector>

namespace traceinv {

/// Everything the inversion conditions on except theta. The mole-fraction
/// vector is stacked (t, s) at t * q + s over `mole_sites` (q rows).
struct InversionProblem {
  MatrixXd B;             // (p q) x n_f
  MatrixXd mole_sites;    // q x dim
  ObservationModel obs;
  VectorXd z;             // one entry per incidence row
  VectorXd zeta_mean;     // E(zeta); empty means zero
  FluxPriorDensity prior;

  Index n_flux() const { return B.cols(); }
  Index n_mole() const { return B.rows(); }
  Index n_sites() const { return mole_sites.rows(); }
  Index n_steps() const { return obs.incidence.n_steps(); }
  VectorXd zeta_mean_or_zero() const;

  /// DimensionMismatch / InvalidParams on inconsistent inputs.
  void validate() const;
};

/// Quantities that depend on theta but not on the latent state.
///
/// With D = C'Q_O C (diagonal) and M = Q_zeta + D (block tridiagonal in
/// time), the Gaussian marginal log-likelihood of Z given Y_f is the
/// quadratic -0.5 Y'H Y + g'Y + kappa, where W = M^{-1} D B,
/// H = B'D B - (D B)'W and g = (B - W)'(C'Q_O Z - D E(zeta)).
class ConditionalSystem {
 public:
  /// `problem` must outlive this object.
  ConditionalSystem(const InversionProblem& problem, const DiscrepancyParams& theta);

  const InversionProblem& problem() const { return *problem_; }
  const SeparableCovariance& discrepancy() const { return cov_; }
  const DiscrepancyParams& theta() const { return cov_.params(); }
  const BlockTridiagonalCholesky& precision_factor() const { return m_chol_; }
  const VectorXd& data_precision() const { return d_obs_; }
  const MatrixXd& gain() const { return w_; }
  const MatrixXd& data_hessian() const { return h_data_; }
  const VectorXd& data_shift() const { return g_; }
  double data_constant() const { return kappa_; }

  /// ln N(Z; C(B Y_f + E zeta), sigma_eps^2 I + C Sigma_zeta C').
  double marginal_loglik(const VectorXd& yf) const;
  VectorXd marginal_loglik_gradient(const VectorXd& yf) const;

  /// Q_zeta v, using the tridiagonal AR(1) precision.
  VectorXd precision_multiply(const VectorXd& v) const;
  /// E(Y_m | Y_f, Z) = M^{-1}(Q_zeta (B Y_f + E zeta) + C'Q_O Z).
  VectorXd conditional_mole_mean(const VectorXd& yf) const;
  /// A draw from N(conditional_mole_mean(yf), M^{-1}).
  VectorXd draw_mole(const VectorXd& yf, Rng& rng) const;
  /// Dense M^{-1}; validation sizes only.
  MatrixXd conditional_mole_cov() const;

 private:
  const InversionProblem* problem_;
  SeparableCovariance cov_;
  VectorXd d_obs_;
  VectorXd ctz_;       // C'Q_O Z
  BlockTridiagonalCholesky m_chol_;
  MatrixXd w_;
  MatrixXd h_data_;
  VectorXd g_;
  double kappa_ = 0.0;
};

/// Joint log density of (Y_f, Y_m) given Z up to an additive constant.
/// `y` is (Y_f', Y_m')'. DomainError if the prior is lognormal and some
/// Y_f <= 0.
double joint_log_density(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y);
VectorXd joint_gradient(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y);
/// Dense Hessian; validation sizes only.
MatrixXd joint_hessian(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y);

/// Banded second-moment summary of zeta = Y_m - B Y_f - E(zeta). Because
/// Q_zeta is block tridiagonal in time, Q only needs
/// `end` = Psi_11 + Psi_pp, `mid` = sum of the interior diagonal blocks and
/// `off` = sum over t of Psi_{t+1,t}.
struct PsiMoments {
  Index n_steps = 0;
  MatrixXd end, mid, off;

  static PsiMoments from_dense(const MatrixXd& psi, Index n_steps, Index n_sites);
};

struct ModeSearchOptions {
  int max_iter = 200;
  /// Convergence when the infinity norm of the free-coordinate gradient
  /// falls below grad_tol times max(1, its initial value), or when the
  /// Newton decrement reaches rounding level.
  double grad_tol = 1e-6;
};

struct ModeResult {
  VectorXd flux;
  double value = 0.0;     // profile objective at the mode
  double grad_norm = 0.0; // infinity norm of dlogp/dY_f
  int iterations = 0;
};

/// Maximizes the joint density over Y_f with Y_m profiled out, by damped
/// Newton ascent in the prior's free coordinates.
ModeResult find_mode(const ConditionalSystem& system, const VectorXd& init_flux, const ModeSearchOptions& opts = {});

/// Gaussian approximation of [Y_f, Y_m | Z, theta] at the mode.
struct InversionState {
  DiscrepancyParams theta;
  VectorXd flux_mode, mole_mode;
  MatrixXd cov_ff;         // flux block of -H(Y*)^{-1}
  PsiMoments psi;
  double log_density = 0.0;
  double grad_norm = 0.0;  // infinity norm of J(Y*)
  int mode_iterations = 0;
  std::shared_ptr<const ConditionalSystem> system;

  VectorXd mode() const;
  /// Dense -H(Y*)^{-1}; validation sizes only.
  MatrixXd neg_hessian_inverse() const;
  /// Dense Psi; validation sizes only.
  MatrixXd psi_dense() const;
};

InversionState laplace_e_step(std::shared_ptr<const ConditionalSystem> system, const VectorXd& init_flux,
                              const ModeSearchOptions& opts = {});
InversionState laplace_e_step(const InversionProblem& problem, const DiscrepancyParams& theta,
                              const VectorXd& init_flux, const ModeSearchOptions& opts = {});

/// Q(theta) = -0.5 ln|Sigma_zeta(theta)| - 0.5 tr(Q_zeta(theta) Psi).
double q_function(const DiscrepancyParams& theta, const PsiMoments& psi, const MatrixXd& mole_sites);
/// dQ / d(sigma2, a, d).
std::array<double, 3> q_gradient(const DiscrepancyParams& theta, const PsiMoments& psi, const MatrixXd& mole_sites);

struct EmConfig {
  int max_iter = 100;
  int m_step_steps = 50;
  double tol = 1e-4;  // on max |delta| of (ln sigma2, atanh a, ln d)
  ModeSearchOptions mode;
};

struct EmTraceRow {
  int iter = 0;
  DiscrepancyParams theta;     // theta after the M-step
  double q_value = 0.0;        // Q(theta^(i+1) | theta^(i))
  double q_start = 0.0;        // Q(theta^(i) | theta^(i))
  double grad_norm = 0.0;      // infinity norm of dQ/dphi after the M-step
  int m_steps = 0;
  int mode_iterations = 0;
  double seconds = 0.0;
};

struct EmResult {
  DiscrepancyParams theta;
  std::vector<EmTraceRow> trace;
  InversionState state;        // E-step at the final theta
  bool converged = false;
  int iterations = 0;
  int monotonicity_violations = 0;
};

/// Generalized EM: Laplace E-step, then m_step_steps BFGS iterations on -Q
/// in transformed coordinates. Inner errors carry the iteration number.
EmResult run_em(const InversionProblem& problem, const DiscrepancyParams& theta0, const VectorXd& init_flux,
                const EmConfig& config = {});

}  // namespace traceinv
