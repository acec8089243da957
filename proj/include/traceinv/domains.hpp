#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace traceinv {

class SrrTensor;

/// Flat list of grid cells with centroid coordinates (degrees) and areas.
/// Cell ids are the dense row indices 0..n-1. Works for 1D and 2D grids.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  /// `centroids` is n x dim; `areas` must be strictly positive.
  SpatialGrid(Eigen::MatrixXd centroids, Eigen::VectorXd areas);

  /// Regular 1D grid `first, first + step, ...` with `n` cells of area |step|.
  static SpatialGrid regular_1d(double first, double step, Eigen::Index n);
  /// 1D sites with unit area (mole-fraction grids).
  static SpatialGrid sites_1d(const std::vector<double>& coords, double area = 1.0);

  Eigen::Index size() const { return centroids_.rows(); }
  Eigen::Index dim() const { return centroids_.cols(); }
  const Eigen::MatrixXd& centroids() const { return centroids_; }
  const Eigen::VectorXd& areas() const { return areas_; }
  Eigen::VectorXd centroid(Eigen::Index i) const { return centroids_.row(i).transpose(); }
  double area(Eigen::Index i) const { return areas_[i]; }

  /// Index of each cell in the grid this one was derived from (identity for
  /// root grids).
  const std::vector<std::size_t>& origin() const { return origin_; }

  /// Sub-grid of the listed cells, order preserved, ids renumbered densely.
  SpatialGrid subset(const std::vector<std::size_t>& keep) const;

  /// Euclidean distance between cell centroids.
  double distance(Eigen::Index i, Eigen::Index j) const;
  Eigen::MatrixXd distance_matrix() const;

  /// Index of the cell whose centroid lies within `tol` of `x` (per
  /// coordinate), or -1.
  Eigen::Index find(const Eigen::VectorXd& x, double tol) const;

 private:
  Eigen::MatrixXd centroids_;
  Eigen::VectorXd areas_;
  std::vector<std::size_t> origin_;
};

struct TemporalDomain {
  Eigen::Index n_steps = 2;
  double step_hours = 2.0;
  void validate() const;
};

inline constexpr double kLocationTolerance = 1e-9;

/// Incidence C = blockdiag(C_t) mapping the stacked mole-fraction vector
/// (entry (t, s) at t * n_sites + s) to observations stacked time-major.
/// Each observation row selects exactly one grid entry; several rows may
/// select the same entry.
class ObservationIncidence {
 public:
  ObservationIncidence() = default;
  /// `rows_per_step[t]` lists the mole-grid column of each observation at t.
  ObservationIncidence(std::vector<std::vector<Eigen::Index>> rows_per_step, Eigen::Index n_sites);

  Eigen::Index n_steps() const { return static_cast<Eigen::Index>(columns_.size()); }
  Eigen::Index n_sites() const { return n_sites_; }
  Eigen::Index n_obs() const { return n_obs_; }
  Eigen::Index n_latent() const { return n_sites_ * n_steps(); }
  const std::vector<Eigen::Index>& columns_at(Eigen::Index t) const { return columns_[t]; }

  /// Stacked latent index selected by each observation row.
  const std::vector<Eigen::Index>& selected() const { return selected_; }
  /// Observation count per latent entry (the diagonal of C'C).
  Eigen::VectorXd counts() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& y_m) const;            // C y
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& z) const;    // C' z
  Eigen::MatrixXd dense() const;

 private:
  std::vector<std::vector<Eigen::Index>> columns_;
  std::vector<Eigen::Index> selected_;
  Eigen::Index n_sites_ = 0;
  Eigen::Index n_obs_ = 0;
};

/// Builds C from per-time observation coordinates; each location must match
/// a mole-grid centroid within `tol` or UnmatchedLocation is raised.
ObservationIncidence build_incidence(const std::vector<std::vector<Eigen::VectorXd>>& obs_locations,
                                     const SpatialGrid& mole_grid, double tol = kLocationTolerance);

/// Flux cells u with max over observed sites s and times t of b_t(s,u)
/// strictly above `threshold`. `observed_sites` indexes the SRR's site axis;
/// empty means all sites. Throws EmptyDomain if nothing survives.
std::vector<std::size_t> sensitive_cells(const SrrTensor& srr,
                                         const std::vector<std::size_t>& observed_sites,
                                         double threshold = 0.0);

SpatialGrid trim_flux_domain(const SrrTensor& srr, const SpatialGrid& flux_grid, double threshold = 0.0,
                             const std::vector<std::size_t>& observed_sites = {});

}  // namespace traceinv
