#pragma once

#include "traceinv/discrepancy.hpp"
#include "traceinv/domains.hpp"
#include "traceinv/flux_process.hpp"
#include "traceinv/rng.hpp"

namespace traceinv {

/// Z = C Y_m + eps with eps ~ N(0, noise_variance I).
struct ObservationModel {
  double noise_variance = 10.0;  // ppb^2
  ObservationIncidence incidence;

  void validate() const;
};

/// First two moments of (Y_f, Y_m) over the stacked mole-fraction vector.
/// Dense; intended for validation-sized problems.
struct BivariateMoments {
  VectorXd mean_f;
  VectorXd mean_m;
  MatrixXd cov_ff, cov_fm, cov_mf, cov_mm;
  VectorXd discrepancy_mean;
};

/// mu_m = B mu_f + E(zeta), C_mm = Sigma_zeta + B C_ff B', C_fm = C_ff B'.
/// `discrepancy_mean` may be empty (zero).
BivariateMoments joint_moments(const LognormalFluxPrior& prior, const MatrixXd& B, const MatrixXd& sigma_zeta,
                               const VectorXd& discrepancy_mean = {});
BivariateMoments joint_moments(const LognormalFluxPrior& prior, const MatrixXd& B, const SeparableCovariance& disc,
                               const VectorXd& discrepancy_mean = {});

struct SimulatedFields {
  VectorXd flux;   // Y_f
  VectorXd mole;   // Y_m, stacked (t, s)
  VectorXd obs;    // Z_m, stacked time-major by observation row
};

/// Y_f from the prior, zeta ~ N(E(zeta), Sigma_zeta), Y_m = B Y_f + zeta and
/// Z = C Y_m + eps. A null `disc` means zeta = E(zeta); a zero noise
/// variance gives noiseless observations. Each component draws from its own
/// stream.
SimulatedFields forward_simulate(const LognormalFluxPrior& prior, const MatrixXd& B, const SeparableCovariance* disc,
                                 const VectorXd& discrepancy_mean, const ObservationIncidence& incidence,
                                 double noise_variance, Rng& flux_rng, Rng& discrepancy_rng, Rng& noise_rng);

}  // namespace traceinv
