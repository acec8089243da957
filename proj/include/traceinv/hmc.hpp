#pragma once

#include "traceinv/laplace_em.hpp"
#include "traceinv/optim.hpp"
#include "traceinv/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>

namespace traceinv {

struct HmcConfig {
  int leapfrog_steps = 10;      // L
  double step_low = 0.066;      // Delta ~ U[step_low, step_high] per proposal
  double step_high = 0.068;
  int n_samples = 10000;        // total iterations, burn-in included
  int n_burnin = 1000;
  VectorXd mass;                // diagonal; empty means identity
  std::uint64_t seed = 0;
  double divergence_threshold = 1000.0;

  void validate(Index dim) const;
};

/// Log target and gradient in the sampling coordinates.
using LogDensity = std::function<double(const VectorXd& x, VectorXd& grad)>;

/// L leapfrog steps of size `step` for H = -log pi(x) + 0.5 p' M^{-1} p.
/// On entry `grad` and `logp` hold the target at x; on exit they are
/// updated to the end point.
void leapfrog(const LogDensity& target, VectorXd& x, VectorXd& p, VectorXd& grad, double& logp, double step,
              int n_steps, const VectorXd& inv_mass);

struct RawChain {
  MatrixXd samples;        // retained draws, one per row
  VectorXd log_density;    // target at each retained draw
  int iterations = 0;
  int accepted = 0;
  int divergences = 0;     // proposals rejected for |dH| > threshold or non-finite H
  double acceptance_rate = 0.0;
};

/// Generic HMC with a diagonal mass matrix. Acceptance is counted over all
/// iterations; the first n_burnin draws are discarded. `on_sample` (if set)
/// is called with each retained draw.
RawChain hmc_run(const HmcConfig& config, const LogDensity& target, const VectorXd& x0,
                 const std::function<void(const VectorXd&)>& on_sample = {});

/// ln N(Z; C B Y_f + C E zeta, C Sigma_zeta C' + sigma_eps^2 I) plus the log
/// prior of Y_f (with its -sum ln Y term), up to a constant, and its
/// gradient in Y_f.
std::pair<double, VectorXd> collapsed_log_density_and_grad(const ConditionalSystem& system, const VectorXd& yf);

/// Collapsed target in the prior's free coordinates x (x = ln Y_f for the
/// lognormal prior). The change-of-variables Jacobian is included.
LogDensity collapsed_free_target(std::shared_ptr<const ConditionalSystem> system);

/// Diagonal mass from the Laplace flux covariance: the inverse of the
/// approximate posterior variance of each free coordinate.
VectorXd laplace_mass(const InversionState& state);

/// Pilot tuning: scales the step interval by 1.1 or 1/1.1 after each batch of
/// `batch` iterations, toward the target acceptance. Returns the tuned
/// config (mass and L unchanged).
HmcConfig tune_step_size(const HmcConfig& config, const LogDensity& target, const VectorXd& x0, int n_pilot = 500,
                         double target_acceptance = 0.6, int batch = 25);

struct PosteriorChain {
  MatrixXd flux;           // retained Y_f draws, one per row
  MatrixXd mole;           // matching Y_m draws, or empty
  VectorXd log_density;    // collapsed target (free coordinates)
  double acceptance_rate = 0.0;
  int leapfrog_steps = 0;
  double step_low = 0.0, step_high = 0.0;
  int n_burnin = 0;
  int divergences = 0;

  Index n_retained() const { return flux.rows(); }
};

/// Draw of Y_m from its Gaussian conditional given Y_f and Z.
VectorXd gibbs_mole_fraction(const ConditionalSystem& system, const VectorXd& yf, Rng& rng);

/// Collapsed Gibbs sampler: HMC on Y_f with Y_m integrated out, followed by
/// an exact conditional draw of Y_m for every retained Y_f when `draw_mole`.
PosteriorChain hmc_sample(const HmcConfig& config, std::shared_ptr<const ConditionalSystem> system,
                          const VectorXd& init_flux, bool draw_mole = true);

}  // namespace traceinv
