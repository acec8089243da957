#pragma once

#include "traceinv/domains.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace traceinv {

enum class VariogramModel { spherical, exponential, gaussian };

std::string_view to_string(VariogramModel model);
VariogramModel parse_variogram_model(std::string_view name);

inline constexpr std::array<VariogramModel, 3> kAllVariogramModels = {
    VariogramModel::spherical, VariogramModel::exponential, VariogramModel::gaussian};

/// Nugget + partial sill + range parameterization, shared by all three
/// models. Lengths are in degrees; variances are of the log flux and so are
/// dimensionless.
struct VariogramParams {
  double nugget = 0.0;
  double partial_sill = 0.0;
  double range = 0.0;
  VariogramModel model = VariogramModel::spherical;

  double sill() const { return nugget + partial_sill; }
  void validate() const;

  /// gamma(h); zero at h = 0, nugget + structured part for h > 0.
  double semivariance(double h) const;
  /// Stationary covariance sill - gamma(h).
  double covariance(double h) const { return sill() - semivariance(h); }
  /// d gamma / d (nugget, partial_sill, range) at h > 0.
  std::array<double, 3> semivariance_gradient(double h) const;
};

/// Covariance of the log flux between two coordinate vectors.
double variogram_to_covariance(const VariogramParams& params, const Eigen::VectorXd& s, const Eigen::VectorXd& u);

/// Gram matrix of variogram_to_covariance over the centroids of `grid`.
Eigen::MatrixXd covariance_matrix(const VariogramParams& params, const SpatialGrid& grid);

struct FluxPriorParams {
  VariogramParams variogram;
  double log_mean = 0.0;  // c
};

struct VariogramBin {
  double lag = 0.0;          // mean pair distance in the bin
  double semivariance = 0.0;
  long pair_count = 0;
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;
  std::vector<std::string> warnings;  // one per dropped empty bin
};

/// ln(total / area) per cell. NonpositiveFlux lists every offending cell.
Eigen::VectorXd log_transform_inventory(const Eigen::VectorXd& totals, const SpatialGrid& grid);

/// Classical Matheron estimator on `n_bins` equal-width lag bins over
/// (0, max_lag]. `max_lag <= 0` selects half the largest pairwise distance.
EmpiricalVariogram empirical_semivariogram(const Eigen::VectorXd& values, const SpatialGrid& grid, int n_bins = 15,
                                           double max_lag = 0.0);

struct VariogramFit {
  VariogramParams params;
  double sse = 0.0;  // attained weighted criterion
  bool converged = false;
};

struct VariogramFitOptions {
  int n_starts = 8;
  std::uint64_t seed = 0;  // multi-start jitter
  double range_lower = 0.0;  // 0 selects 1e-3 of the smallest lag
  double range_upper = 0.0;  // 0 selects 10x the largest lag
};

/// Weighted least squares with Cressie's weights N_h / gamma(h)^2, minimized
/// by BFGS from `n_starts` ranges log-spaced across the lag span. Nugget and
/// partial sill are kept nonnegative and the range inside its bounds by
/// reparameterization. Throws FitDiverged if every start fails.
VariogramFit fit_variogram(const EmpiricalVariogram& emp, VariogramModel model, const VariogramFitOptions& opts = {});

/// Value of the weighted criterion for given parameters.
double variogram_wls_criterion(const EmpiricalVariogram& emp, const VariogramParams& params);

/// Leave-one-out simple-kriging z-scores with known mean.
Eigen::VectorXd loo_kriging_zscores(const Eigen::VectorXd& values, const SpatialGrid& grid,
                                    const VariogramParams& params, double mean);

struct CalibrationReport {
  FluxPriorParams prior;
  EmpiricalVariogram empirical;
  std::vector<VariogramFit> fits;  // one per model, in kAllVariogramModels order
  double loo_mean_z = 0.0;
  double loo_sd_z = 0.0;
  std::vector<std::string> warnings;
};

/// Full inventory pipeline: log transform, empirical variogram, fit of all
/// three models, selection by smallest criterion, c = mean log flux density,
/// and the LOO adequacy check (warning when |mean z| > 0.2).
CalibrationReport calibrate_inventory(const Eigen::VectorXd& totals, const SpatialGrid& grid, int n_bins = 15,
                                      double max_lag = 0.0, const VariogramFitOptions& opts = {});

std::string format_report(const CalibrationReport& report);

}  // namespace traceinv
