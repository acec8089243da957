#include "traceinv/bivariate_moments.hpp"

#include "traceinv/errors.hpp"

#include <cmath>

namespace traceinv {

void ObservationModel::validate() const {
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
    fail(ErrorKind::InvalidParams, "noise variance must be positive");
}

BivariateMoments joint_moments(const LognormalFluxPrior& prior, const MatrixXd& B, const MatrixXd& sigma_zeta,
                               const VectorXd& discrepancy_mean) {
  const Index nm = B.rows();
  if (B.cols() != prior.size()) fail(ErrorKind::DimensionMismatch, "B columns vs flux prior size");
  if (sigma_zeta.rows() != nm || sigma_zeta.cols() != nm)
    fail(ErrorKind::DimensionMismatch, "Sigma_zeta size vs B rows");
  if (discrepancy_mean.size() != 0 && discrepancy_mean.size() != nm)
    fail(ErrorKind::DimensionMismatch, "discrepancy mean length vs B rows");

  const NaturalMoments nat = natural_moments(prior);
  BivariateMoments m;
  m.discrepancy_mean = discrepancy_mean.size() == 0 ? VectorXd::Zero(nm) : discrepancy_mean;
  m.mean_f = nat.mean;
  m.cov_ff = nat.cov;
  m.mean_m = B * nat.mean + m.discrepancy_mean;
  m.cov_fm = nat.cov * B.transpose();
  m.cov_mf = m.cov_fm.transpose();
  m.cov_mm = sigma_zeta + B * m.cov_fm;
  m.cov_mm = symmetrize(m.cov_mm);
  return m;
}

BivariateMoments joint_moments(const LognormalFluxPrior& prior, const MatrixXd& B, const SeparableCovariance& disc,
                               const VectorXd& discrepancy_mean) {
  return joint_moments(prior, B, disc.dense(), discrepancy_mean);
}

SimulatedFields forward_simulate(const LognormalFluxPrior& prior, const MatrixXd& B, const SeparableCovariance* disc,
                                 const VectorXd& discrepancy_mean, const ObservationIncidence& incidence,
                                 double noise_variance, Rng& flux_rng, Rng& discrepancy_rng, Rng& noise_rng) {
  const Index nm = B.rows();
  if (B.cols() != prior.size()) fail(ErrorKind::DimensionMismatch, "B columns vs flux prior size");
  if (incidence.n_latent() != nm) fail(ErrorKind::DimensionMismatch, "incidence latent size vs B rows");
  if (disc && disc->size() != nm) fail(ErrorKind::DimensionMismatch, "discrepancy size vs B rows");
  if (discrepancy_mean.size() != 0 && discrepancy_mean.size() != nm)
    fail(ErrorKind::DimensionMismatch, "discrepancy mean length vs B rows");
  if (!(noise_variance >= 0.0)) fail(ErrorKind::InvalidParams, "noise variance must be nonnegative");

  SimulatedFields out;
  out.flux = sample_flux(prior, flux_rng);
  out.mole = B * out.flux;
  if (discrepancy_mean.size() != 0) out.mole += discrepancy_mean;
  if (disc) out.mole += disc->correlate(standard_normal(discrepancy_rng, nm));
  out.obs = incidence.apply(out.mole);
  if (noise_variance > 0.0) out.obs += std::sqrt(noise_variance) * standard_normal(noise_rng, out.obs.size());
  return out;
}

}  // namespace traceinv
