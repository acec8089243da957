#include "traceinv/domains.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/srr.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace traceinv {

SpatialGrid::SpatialGrid(Eigen::MatrixXd centroids, Eigen::VectorXd areas)
    : centroids_(std::move(centroids)), areas_(std::move(areas)) {
  if (centroids_.rows() != areas_.size())
    fail(ErrorKind::DimensionMismatch, "grid centroid and area counts differ");
  for (Eigen::Index i = 0; i < areas_.size(); ++i) {
    if (!(areas_[i] > 0.0) || !std::isfinite(areas_[i]))
      fail(ErrorKind::InvalidParams, "cell " + std::to_string(i) + " has non-positive area");
  }
  if (!centroids_.allFinite()) fail(ErrorKind::InvalidParams, "non-finite grid centroid");
  origin_.resize(static_cast<std::size_t>(size()));
  std::iota(origin_.begin(), origin_.end(), std::size_t{0});
}

SpatialGrid SpatialGrid::regular_1d(double first, double step, Eigen::Index n) {
  Eigen::MatrixXd c(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) c(i, 0) = first + step * static_cast<double>(i);
  return SpatialGrid(std::move(c), Eigen::VectorXd::Constant(n, std::abs(step)));
}

SpatialGrid SpatialGrid::sites_1d(const std::vector<double>& coords, double area) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd c(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) c(i, 0) = coords[static_cast<std::size_t>(i)];
  return SpatialGrid(std::move(c), Eigen::VectorXd::Constant(n, area));
}

SpatialGrid SpatialGrid::subset(const std::vector<std::size_t>& keep) const {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(keep.size()), dim());
  Eigen::VectorXd a(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= static_cast<std::size_t>(size())) fail(ErrorKind::DimensionMismatch, "subset index out of range");
    c.row(static_cast<Eigen::Index>(k)) = centroids_.row(static_cast<Eigen::Index>(keep[k]));
    a[static_cast<Eigen::Index>(k)] = areas_[static_cast<Eigen::Index>(keep[k])];
  }
  SpatialGrid out(std::move(c), std::move(a));
  for (std::size_t k = 0; k < keep.size(); ++k) out.origin_[k] = origin_[keep[k]];
  return out;
}

double SpatialGrid::distance(Eigen::Index i, Eigen::Index j) const {
  return (centroids_.row(i) - centroids_.row(j)).norm();
}

Eigen::MatrixXd SpatialGrid::distance_matrix() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) d(i, j) = d(j, i) = distance(i, j);
  }
  return d;
}

Eigen::Index SpatialGrid::find(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return -1;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if ((centroids_.row(i).transpose() - x).cwiseAbs().maxCoeff() <= tol) return i;
  }
  return -1;
}

void TemporalDomain::validate() const {
  if (n_steps <= 1) fail(ErrorKind::InvalidParams, "temporal domain needs T > 1");
  if (!(step_hours > 0.0)) fail(ErrorKind::InvalidParams, "time step must be positive");
}

ObservationIncidence::ObservationIncidence(std::vector<std::vector<Eigen::Index>> rows_per_step,
                                           Eigen::Index n_sites)
    : columns_(std::move(rows_per_step)), n_sites_(n_sites) {
  for (std::size_t t = 0; t < columns_.size(); ++t) {
    for (Eigen::Index col : columns_[t]) {
      if (col < 0 || col >= n_sites_)
        fail(ErrorKind::DimensionMismatch, "incidence column " + std::to_string(col) + " outside mole grid");
      selected_.push_back(static_cast<Eigen::Index>(t) * n_sites_ + col);
    }
  }
  n_obs_ = static_cast<Eigen::Index>(selected_.size());
}

Eigen::VectorXd ObservationIncidence::counts() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_latent());
  for (Eigen::Index k : selected_) c[k] += 1.0;
  return c;
}

Eigen::VectorXd ObservationIncidence::apply(const Eigen::VectorXd& y_m) const {
  if (y_m.size() != n_latent()) fail(ErrorKind::DimensionMismatch, "incidence applied to wrong-length vector");
  Eigen::VectorXd z(n_obs_);
  for (Eigen::Index r = 0; r < n_obs_; ++r) z[r] = y_m[selected_[static_cast<std::size_t>(r)]];
  return z;
}

Eigen::VectorXd ObservationIncidence::apply_transpose(const Eigen::VectorXd& z) const {
  if (z.size() != n_obs_) fail(ErrorKind::DimensionMismatch, "incidence transpose on wrong-length vector");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_latent());
  for (Eigen::Index r = 0; r < n_obs_; ++r) y[selected_[static_cast<std::size_t>(r)]] += z[r];
  return y;
}

Eigen::MatrixXd ObservationIncidence::dense() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_obs_, n_latent());
  for (Eigen::Index r = 0; r < n_obs_; ++r) c(r, selected_[static_cast<std::size_t>(r)]) = 1.0;
  return c;
}

ObservationIncidence build_incidence(const std::vector<std::vector<Eigen::VectorXd>>& obs_locations,
                                     const SpatialGrid& mole_grid, double tol) {
  std::vector<std::vector<Eigen::Index>> cols(obs_locations.size());
  for (std::size_t t = 0; t < obs_locations.size(); ++t) {
    for (const auto& x : obs_locations[t]) {
      const Eigen::Index idx = mole_grid.find(x, tol);
      if (idx < 0) {
        std::ostringstream os;
        os << "observation at (" << x.transpose() << ") time " << t << " is not on the mole-fraction grid";
        fail(ErrorKind::UnmatchedLocation, os.str());
      }
      cols[t].push_back(idx);
    }
  }
  return ObservationIncidence(std::move(cols), mole_grid.size());
}

std::vector<std::size_t> sensitive_cells(const SrrTensor& srr, const std::vector<std::size_t>& observed_sites,
                                         double threshold) {
  std::vector<std::size_t> sites = observed_sites;
  if (sites.empty()) {
    sites.resize(static_cast<std::size_t>(srr.n_sites()));
    std::iota(sites.begin(), sites.end(), std::size_t{0});
  }
  Eigen::VectorXd peak = Eigen::VectorXd::Constant(srr.n_cells(), -std::numeric_limits<double>::infinity());
  for (Eigen::Index t = 0; t < srr.n_steps(); ++t) {
    const auto b = srr.block(t);
    for (std::size_t s : sites) {
      if (s >= static_cast<std::size_t>(srr.n_sites())) fail(ErrorKind::DimensionMismatch, "observed site index");
      peak = peak.cwiseMax(b.row(static_cast<Eigen::Index>(s)).transpose());
    }
  }
  std::vector<std::size_t> keep;
  for (Eigen::Index u = 0; u < srr.n_cells(); ++u)
    if (peak[u] > threshold) keep.push_back(static_cast<std::size_t>(u));
  if (keep.empty()) fail(ErrorKind::EmptyDomain, "no flux cell has sensitivity above the trim threshold");
  return keep;
}

SpatialGrid trim_flux_domain(const SrrTensor& srr, const SpatialGrid& flux_grid, double threshold,
                             const std::vector<std::size_t>& observed_sites) {
  if (srr.n_cells() != flux_grid.size()) fail(ErrorKind::DimensionMismatch, "SRR cell axis vs flux grid");
  return flux_grid.subset(sensitive_cells(srr, observed_sites, threshold));
}

}  // namespace traceinv
