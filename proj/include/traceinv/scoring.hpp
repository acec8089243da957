#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace traceinv {

/// 1 g/s sustained over a 365-day year, in Tg/yr.
inline constexpr double kGramsPerSecondToTgPerYear = 3.1536e-5;

/// Root mean squared difference of the flux fields.
double s1_flux(const Eigen::VectorXd& truth, const Eigen::VectorXd& posterior_mean);

/// sqrt(mean squared error / mean posterior variance); close to 1 when the
/// posterior spread matches the error.
double s2_flux(const Eigen::VectorXd& truth, const Eigen::VectorXd& posterior_mean,
               const Eigen::VectorXd& posterior_var);

/// Root mean squared difference of two mole-fraction time series.
double s1_mole(const Eigen::VectorXd& truth_series, const Eigen::VectorXd& predicted_series);

struct RegionalTotal {
  double mean = 0.0;  // Tg/yr
  double sd = 0.0;
};

/// Per-sample sum of the masked cells of `samples` (rows = draws, values in
/// g/s per cell), times `unit_conversion`.
RegionalTotal regional_total(const Eigen::MatrixXd& samples, const std::vector<bool>& mask,
                             double unit_conversion = kGramsPerSecondToTgPerYear);

/// Linear-interpolation sample quantile (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob);

/// Column-wise mean, variance (n - 1 denominator) and quantiles of draws.
struct ColumnSummary {
  Eigen::VectorXd mean, var;
  Eigen::MatrixXd quantiles;  // columns x probs
};
ColumnSummary summarize_columns(const Eigen::MatrixXd& draws, const std::vector<double>& probs);

struct ScoreReport {
  double s1f = 0.0;
  double s2f = 0.0;
  std::map<std::string, double> s1m_by_site;
  std::map<std::string, RegionalTotal> regional_totals;
};

/// Human-readable table of a report.
std::string format_score_table(const ScoreReport& report);

}  // namespace traceinv
