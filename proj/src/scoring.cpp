#include "traceinv/scoring.hpp"

#include "traceinv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace traceinv {

namespace {

void check_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size())
    fail(ErrorKind::LengthMismatch, std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  if (a.size() == 0) fail(ErrorKind::LengthMismatch, std::string(what) + ": empty input");
}

}  // namespace

double s1_flux(const Eigen::VectorXd& truth, const Eigen::VectorXd& posterior_mean) {
  check_lengths(truth, posterior_mean, "s1_flux");
  return std::sqrt((truth - posterior_mean).squaredNorm() / static_cast<double>(truth.size()));
}

double s2_flux(const Eigen::VectorXd& truth, const Eigen::VectorXd& posterior_mean,
               const Eigen::VectorXd& posterior_var) {
  check_lengths(truth, posterior_mean, "s2_flux");
  check_lengths(truth, posterior_var, "s2_flux");
  if (!(posterior_var.minCoeff() > 0.0)) fail(ErrorKind::ZeroVariance, "posterior variances must be positive");
  return std::sqrt((truth - posterior_mean).squaredNorm() / posterior_var.sum());
}

double s1_mole(const Eigen::VectorXd& truth_series, const Eigen::VectorXd& predicted_series) {
  check_lengths(truth_series, predicted_series, "s1_mole");
  return std::sqrt((truth_series - predicted_series).squaredNorm() / static_cast<double>(truth_series.size()));
}

RegionalTotal regional_total(const Eigen::MatrixXd& samples, const std::vector<bool>& mask, double unit_conversion) {
  if (static_cast<Eigen::Index>(mask.size()) != samples.cols())
    fail(ErrorKind::MaskMismatch, "mask length vs number of cells");
  const Eigen::Index n = samples.rows();
  if (n == 0) return {};
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < samples.cols(); ++j)
    if (mask[static_cast<std::size_t>(j)]) totals += samples.col(j);
  totals *= unit_conversion;
  RegionalTotal r;
  r.mean = totals.mean();
  r.sd = n > 1 ? std::sqrt((totals.array() - r.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
  return r;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) fail(ErrorKind::LengthMismatch, "quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) fail(ErrorKind::InvalidParams, "quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ColumnSummary summarize_columns(const Eigen::MatrixXd& draws, const std::vector<double>& probs) {
  const Eigen::Index n = draws.rows(), m = draws.cols();
  if (n < 2) fail(ErrorKind::LengthMismatch, "need at least two draws");
  ColumnSummary s;
  s.mean = draws.colwise().mean().transpose();
  s.var.resize(m);
  s.quantiles.resize(m, static_cast<Eigen::Index>(probs.size()));
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < m; ++j) {
    s.var[j] = (draws.col(j).array() - s.mean[j]).square().sum() / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = draws(i, j);
    std::sort(col.begin(), col.end());
    for (std::size_t k = 0; k < probs.size(); ++k) s.quantiles(j, static_cast<Eigen::Index>(k)) = quantile(col, probs[k]);
  }
  return s;
}

std::string format_score_table(const ScoreReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "S1,f  " << report.s1f << "\n";
  os << "S2,f  " << report.s2f << "\n";
  for (const auto& [site, v] : report.s1m_by_site) os << "S1,m[" << site << "]  " << v << "\n";
  for (const auto& [region, t] : report.regional_totals)
    os << "total[" << region << "]  " << t.mean << " +/- " << t.sd << " Tg/yr\n";
  return os.str();
}

}  // namespace traceinv
