#include "traceinv/srr.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/linalg.hpp"

#include <cmath>
#include <string>

namespace traceinv {

SrrTensor::SrrTensor(Eigen::Index n_steps, Eigen::Index n_sites, Eigen::Index n_cells, bool area_weighted)
    : n_steps_(n_steps),
      n_sites_(n_sites),
      n_cells_(n_cells),
      values_(static_cast<std::size_t>(n_steps * n_sites * n_cells), 0.0),
      area_weighted_(area_weighted) {}

SrrTensor::SrrTensor(Eigen::Index n_steps, Eigen::Index n_sites, Eigen::Index n_cells, std::vector<double> values,
                     bool area_weighted)
    : n_steps_(n_steps), n_sites_(n_sites), n_cells_(n_cells), values_(std::move(values)), area_weighted_(area_weighted) {
  if (values_.size() != static_cast<std::size_t>(n_steps * n_sites * n_cells))
    fail(ErrorKind::DimensionMismatch, "SRR value count does not match T x sites x cells");
}

SrrTensor SrrTensor::select_cells(const std::vector<std::size_t>& keep) const {
  SrrTensor out(n_steps_, n_sites_, static_cast<Eigen::Index>(keep.size()), area_weighted_);
  for (Eigen::Index t = 0; t < n_steps_; ++t)
    for (Eigen::Index s = 0; s < n_sites_; ++s)
      for (std::size_t k = 0; k < keep.size(); ++k)
        out.at(t, s, static_cast<Eigen::Index>(k)) = (*this)(t, s, static_cast<Eigen::Index>(keep[k]));
  return out;
}

SrrTensor SrrTensor::scaled(double alpha) const {
  SrrTensor out = *this;
  for (double& v : out.values_) v *= alpha;
  return out;
}

void SrrTensor::validate() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0)
      fail(ErrorKind::DomainError, "SRR entry " + std::to_string(i) + " is negative or non-finite");
  }
}

Eigen::MatrixXd assemble_B(const SrrTensor& srr, const SpatialGrid& flux_grid, PriorMode mode) {
  if (srr.n_cells() != flux_grid.size())
    fail(ErrorKind::DimensionMismatch, "SRR has " + std::to_string(srr.n_cells()) + " cells, flux grid " +
                                           std::to_string(flux_grid.size()));
  const Eigen::Index q = srr.n_sites();
  Eigen::MatrixXd b(srr.n_steps() * q, srr.n_cells());
  for (Eigen::Index t = 0; t < srr.n_steps(); ++t) b.middleRows(t * q, q) = srr.block(t);
  if (mode == PriorMode::density) b = b * flux_grid.areas().asDiagonal();
  return b;
}

double plume_sensitivity(double s, double u, double upsilon) {
  const double d = u - s;
  if (!(std::abs(d) < std::abs(upsilon))) return 0.0;  // also covers upsilon == 0
  const bool side = upsilon >= 0.0 ? d >= 0.0 : d <= 0.0;
  if (!side) return 0.0;
  return std::exp(-(d * d) / (2.0 * upsilon * upsilon));
}

PlumeScaleField simulate_plume_scale(const std::vector<double>& sites, Eigen::Index n_steps,
                                     const PlumeGpParams& gp, Rng& rng) {
  const auto q = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd corr(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      corr(i, j) = std::exp(-std::abs(sites[static_cast<std::size_t>(i)] - sites[static_cast<std::size_t>(j)]) /
                            gp.spatial_range);
  const JitteredCholesky chol(corr);
  const Eigen::MatrixXd l = chol.matrix_l();
  const double innov = std::sqrt(1.0 - gp.temporal_ar * gp.temporal_ar);

  PlumeScaleField ups(n_steps, q);
  Eigen::VectorXd state = l * standard_normal(rng, q);
  for (Eigen::Index t = 0; t < n_steps; ++t) {
    if (t > 0) state = gp.temporal_ar * state + innov * (l * standard_normal(rng, q));
    ups.row(t) = (gp.mean + gp.sigma * state.array()).transpose();
  }
  return ups;
}

SrrTensor plume_srr(const std::vector<double>& sites, const SpatialGrid& flux_grid, const PlumeScaleField& upsilon) {
  if (flux_grid.dim() != 1) fail(ErrorKind::DimensionMismatch, "plume SRR needs a 1D flux grid");
  const auto q = static_cast<Eigen::Index>(sites.size());
  if (upsilon.cols() != q) fail(ErrorKind::DimensionMismatch, "plume scale field site count");
  SrrTensor srr(upsilon.rows(), q, flux_grid.size(), false);
  for (Eigen::Index t = 0; t < upsilon.rows(); ++t)
    for (Eigen::Index s = 0; s < q; ++s)
      for (Eigen::Index u = 0; u < flux_grid.size(); ++u)
        srr.at(t, s, u) = plume_sensitivity(sites[static_cast<std::size_t>(s)], flux_grid.centroids()(u, 0),
                                            upsilon(t, s));
  return srr;
}

SrrTensor synthesize_plume_srr(const std::vector<double>& sites, const SpatialGrid& flux_grid, Eigen::Index n_steps,
                               const PlumeGpParams& gp, Rng& rng, PlumeScaleField* upsilon_out) {
  if (n_steps < 1) fail(ErrorKind::InvalidParams, "plume SRR needs T >= 1");
  PlumeScaleField ups = simulate_plume_scale(sites, n_steps, gp, rng);
  SrrTensor srr = plume_srr(sites, flux_grid, ups);
  if (upsilon_out) *upsilon_out = std::move(ups);
  return srr;
}

}  // namespace traceinv
