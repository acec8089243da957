#pragma once

#include "traceinv/domains.hpp"
#include "traceinv/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace traceinv {

enum class PriorMode { density, total_per_cell };

/// Source-receptor sensitivities b_t(s,u), stored time-major: the block for
/// time t is a contiguous row-major (sites x cells) matrix.
class SrrTensor {
 public:
  using BlockMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  SrrTensor() = default;
  SrrTensor(Eigen::Index n_steps, Eigen::Index n_sites, Eigen::Index n_cells, bool area_weighted = false);
  SrrTensor(Eigen::Index n_steps, Eigen::Index n_sites, Eigen::Index n_cells, std::vector<double> values,
            bool area_weighted = false);

  Eigen::Index n_steps() const { return n_steps_; }
  Eigen::Index n_sites() const { return n_sites_; }
  Eigen::Index n_cells() const { return n_cells_; }
  bool area_weighted() const { return area_weighted_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(Eigen::Index t, Eigen::Index s, Eigen::Index u) const {
    return values_[static_cast<std::size_t>((t * n_sites_ + s) * n_cells_ + u)];
  }
  double& at(Eigen::Index t, Eigen::Index s, Eigen::Index u) {
    return values_[static_cast<std::size_t>((t * n_sites_ + s) * n_cells_ + u)];
  }
  BlockMap block(Eigen::Index t) const {
    return BlockMap(values_.data() + t * n_sites_ * n_cells_, n_sites_, n_cells_);
  }

  /// Same tensor restricted to the listed flux cells (order preserved).
  SrrTensor select_cells(const std::vector<std::size_t>& keep) const;
  SrrTensor scaled(double alpha) const;

  /// Throws DomainError on negative or non-finite entries.
  void validate() const;

 private:
  Eigen::Index n_steps_ = 0, n_sites_ = 0, n_cells_ = 0;
  std::vector<double> values_;
  bool area_weighted_ = false;
};

/// Stacked B = (B_{B,t}' : t)' with row t * n_sites + s. In density mode
/// column u is weighted by A(u); in total_per_cell mode weights are omitted.
Eigen::MatrixXd assemble_B(const SrrTensor& srr, const SpatialGrid& flux_grid, PriorMode mode);

/// Separable Gaussian process driving the plume scale: exponential spatial
/// correlation and AR(1) in time, stationary standard deviation `sigma`.
struct PlumeGpParams {
  double sigma = 3.0;           // degrees
  double spatial_range = 2.0;   // degrees
  double temporal_ar = 0.95;
  double mean = 0.0;
};

/// Plume scale field upsilon_t(s), rows = time, columns = sites.
using PlumeScaleField = Eigen::MatrixXd;

/// Truncated one-sided Gaussian plume: exp(-(u-s)^2 / (2 v^2)) on
/// |u-s| < |v| restricted to u >= s when v >= 0 and u <= s when v < 0.
double plume_sensitivity(double s, double u, double upsilon);

PlumeScaleField simulate_plume_scale(const std::vector<double>& sites, Eigen::Index n_steps,
                                     const PlumeGpParams& gp, Rng& rng);

SrrTensor plume_srr(const std::vector<double>& sites, const SpatialGrid& flux_grid,
                    const PlumeScaleField& upsilon);

/// Draws upsilon from the GP and evaluates the plume SRR on a 1D flux grid.
SrrTensor synthesize_plume_srr(const std::vector<double>& sites, const SpatialGrid& flux_grid,
                               Eigen::Index n_steps, const PlumeGpParams& gp, Rng& rng,
                               PlumeScaleField* upsilon_out = nullptr);

}  // namespace traceinv
