#include "traceinv/inventory_calibration.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/linalg.hpp"
#include "traceinv/optim.hpp"
#include "traceinv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace traceinv {

std::string_view to_string(VariogramModel model) {
  switch (model) {
    case VariogramModel::spherical: return "spherical";
    case VariogramModel::exponential: return "exponential";
    case VariogramModel::gaussian: return "gaussian";
  }
  return "unknown";
}

VariogramModel parse_variogram_model(std::string_view name) {
  for (auto m : kAllVariogramModels)
    if (to_string(m) == name) return m;
  fail(ErrorKind::Config, "unknown variogram model '" + std::string(name) + "'");
}

void VariogramParams::validate() const {
  if (!(nugget >= 0.0) || !(partial_sill >= 0.0) || !(range >= 0.0))
    fail(ErrorKind::InvalidParams, "variogram parameters must be nonnegative");
  if (!std::isfinite(nugget) || !std::isfinite(partial_sill) || !std::isfinite(range))
    fail(ErrorKind::InvalidParams, "variogram parameters must be finite");
}

double VariogramParams::semivariance(double h) const {
  if (h <= 0.0) return 0.0;
  if (range <= 0.0) return sill();
  const double r = h / range;
  switch (model) {
    case VariogramModel::spherical:
      return r < 1.0 ? nugget + partial_sill * (1.5 * r - 0.5 * r * r * r) : sill();
    case VariogramModel::exponential:
      return nugget + partial_sill * (1.0 - std::exp(-r));
    case VariogramModel::gaussian:
      return nugget + partial_sill * (1.0 - std::exp(-r * r));
  }
  return sill();
}

std::array<double, 3> VariogramParams::semivariance_gradient(double h) const {
  if (h <= 0.0) return {0.0, 0.0, 0.0};
  if (range <= 0.0) return {1.0, 1.0, 0.0};
  const double r = h / range;
  switch (model) {
    case VariogramModel::spherical:
      if (r >= 1.0) return {1.0, 1.0, 0.0};
      return {1.0, 1.5 * r - 0.5 * r * r * r, partial_sill * (-1.5 * r + 1.5 * r * r * r) / range};
    case VariogramModel::exponential: {
      const double e = std::exp(-r);
      return {1.0, 1.0 - e, -partial_sill * e * r / range};
    }
    case VariogramModel::gaussian: {
      const double e = std::exp(-r * r);
      return {1.0, 1.0 - e, -partial_sill * e * 2.0 * r * r / range};
    }
  }
  return {1.0, 1.0, 0.0};
}

double variogram_to_covariance(const VariogramParams& params, const Eigen::VectorXd& s, const Eigen::VectorXd& u) {
  return params.covariance((u - s).norm());
}

Eigen::MatrixXd covariance_matrix(const VariogramParams& params, const SpatialGrid& grid) {
  const Eigen::Index n = grid.size();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = params.sill();
    for (Eigen::Index i = j + 1; i < n; ++i) c(i, j) = c(j, i) = params.covariance(grid.distance(i, j));
  }
  return c;
}

Eigen::VectorXd log_transform_inventory(const Eigen::VectorXd& totals, const SpatialGrid& grid) {
  if (totals.size() != grid.size()) fail(ErrorKind::DimensionMismatch, "inventory length vs grid size");
  std::ostringstream bad;
  bool any = false;
  for (Eigen::Index i = 0; i < totals.size(); ++i) {
    if (!(totals[i] > 0.0) || !std::isfinite(totals[i])) {
      bad << (any ? "," : "") << i;
      any = true;
    }
  }
  if (any) fail(ErrorKind::NonpositiveFlux, "non-positive inventory totals at cells " + bad.str());
  return (totals.array() / grid.areas().array()).log().matrix();
}

EmpiricalVariogram empirical_semivariogram(const Eigen::VectorXd& values, const SpatialGrid& grid, int n_bins,
                                           double max_lag) {
  const Eigen::Index n = grid.size();
  if (values.size() != n) fail(ErrorKind::DimensionMismatch, "values vs grid size");
  if (n < 2) fail(ErrorKind::DegenerateBins, "semivariogram needs at least two locations");
  if (n_bins < 1) fail(ErrorKind::InvalidParams, "need at least one lag bin");
  if (max_lag <= 0.0) {
    double dmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) dmax = std::max(dmax, grid.distance(i, j));
    max_lag = 0.5 * dmax;
    if (max_lag <= 0.0) fail(ErrorKind::DegenerateBins, "all locations coincide");
  }
  const double width = max_lag / n_bins;
  std::vector<double> sum_sq(static_cast<std::size_t>(n_bins), 0.0), sum_h(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<long> count(static_cast<std::size_t>(n_bins), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = grid.distance(i, j);
      if (h <= 0.0 || h > max_lag) continue;
      auto k = static_cast<std::size_t>(std::min<double>(std::ceil(h / width) - 1.0, n_bins - 1));
      const double d = values[i] - values[j];
      sum_sq[k] += d * d;
      sum_h[k] += h;
      ++count[k];
    }
  }
  EmpiricalVariogram out;
  for (std::size_t k = 0; k < count.size(); ++k) {
    if (count[k] == 0) {
      std::ostringstream os;
      os << "DegenerateBins: lag bin (" << k * width << ", " << (k + 1) * width << "] is empty and was dropped";
      out.warnings.push_back(os.str());
      continue;
    }
    const double c = static_cast<double>(count[k]);
    out.bins.push_back({sum_h[k] / c, sum_sq[k] / (2.0 * c), count[k]});
  }
  if (out.bins.empty()) fail(ErrorKind::DegenerateBins, "no pair falls within the maximum lag");
  return out;
}

double variogram_wls_criterion(const EmpiricalVariogram& emp, const VariogramParams& params) {
  double f = 0.0;
  for (const auto& b : emp.bins) {
    const double g = params.semivariance(b.lag);
    if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = b.semivariance / g - 1.0;
    f += static_cast<double>(b.pair_count) * r * r;
  }
  return f;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct RangeBounds {
  double lo, hi;
  double to_range(double x) const { return lo + (hi - lo) * sigmoid(x); }
  double from_range(double r) const {
    const double p = std::clamp((r - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
  }
  double derivative(double x) const {
    const double s = sigmoid(x);
    return (hi - lo) * s * (1.0 - s);
  }
};

}  // namespace

VariogramFit fit_variogram(const EmpiricalVariogram& emp, VariogramModel model, const VariogramFitOptions& opts) {
  if (emp.bins.size() < 3) fail(ErrorKind::DegenerateBins, "variogram fit needs at least three non-empty bins");
  double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0, gmax = 0.0;
  for (const auto& b : emp.bins) {
    hmin = std::min(hmin, b.lag);
    hmax = std::max(hmax, b.lag);
    gmax = std::max(gmax, b.semivariance);
  }
  const RangeBounds bounds{opts.range_lower > 0.0 ? opts.range_lower : 1e-3 * hmin,
                           opts.range_upper > 0.0 ? opts.range_upper : 10.0 * hmax};
  if (!(gmax > 0.0)) {
    // constant field: zero variogram
    return {VariogramParams{0.0, 0.0, bounds.lo, model}, 0.0, true};
  }

  auto unpack = [&](const Eigen::VectorXd& x) {
    return VariogramParams{x[0] * x[0], x[1] * x[1], bounds.to_range(x[2]), model};
  };
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const VariogramParams p = unpack(x);
    double f = 0.0;
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (const auto& b : emp.bins) {
      const double gam = p.semivariance(b.lag);
      if (!(gam > 0.0)) {
        grad.setZero();
        return std::numeric_limits<double>::infinity();
      }
      const double w = static_cast<double>(b.pair_count);
      const double r = b.semivariance / gam - 1.0;
      f += w * r * r;
      const double df_dgam = -2.0 * w * r * b.semivariance / (gam * gam);
      const auto dg = p.semivariance_gradient(b.lag);
      for (int k = 0; k < 3; ++k) g[static_cast<std::size_t>(k)] += df_dgam * dg[static_cast<std::size_t>(k)];
    }
    grad.resize(3);
    grad[0] = g[0] * 2.0 * x[0];
    grad[1] = g[1] * 2.0 * x[1];
    grad[2] = g[2] * bounds.derivative(x[2]);
    return f;
  };

  Rng rng(opts.seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  VariogramFit best;
  best.sse = std::numeric_limits<double>::infinity();
  const int starts = std::max(1, opts.n_starts);
  for (int k = 0; k < starts; ++k) {
    const double frac = starts == 1 ? 0.5 : static_cast<double>(k) / (starts - 1);
    const double r0 = hmin * std::pow(hmax / hmin, frac) * jitter(rng);
    const double nug0 = 0.1 * emp.bins.front().semivariance * jitter(rng) + 1e-6 * gmax;
    const double ps0 = std::max(gmax - nug0, 0.1 * gmax) * jitter(rng);
    Eigen::VectorXd x0(3);
    x0 << std::sqrt(nug0), std::sqrt(ps0), bounds.from_range(r0);
    BfgsOptions bo;
    bo.max_iter = 500;
    bo.grad_tol = 1e-13;
    bo.f_rel_tol = 1e-14;
    const BfgsResult res = minimize_bfgs(objective, x0, bo);
    if (!std::isfinite(res.value)) continue;
    if (res.value < best.sse) {
      best.params = unpack(res.x);
      best.sse = res.value;
      best.converged = res.converged;
    }
  }
  if (!std::isfinite(best.sse))
    fail(ErrorKind::FitDiverged, std::string("all starts failed for the ") + std::string(to_string(model)) + " model");
  return best;
}

Eigen::VectorXd loo_kriging_zscores(const Eigen::VectorXd& values, const SpatialGrid& grid,
                                    const VariogramParams& params, double mean) {
  const JitteredCholesky chol(covariance_matrix(params, grid));
  const Eigen::MatrixXd kinv = chol.inverse();
  const Eigen::VectorXd alpha = kinv * (values.array() - mean).matrix();
  return alpha.array() / kinv.diagonal().array().sqrt();
}

CalibrationReport calibrate_inventory(const Eigen::VectorXd& totals, const SpatialGrid& grid, int n_bins,
                                      double max_lag, const VariogramFitOptions& opts) {
  CalibrationReport rep;
  const Eigen::VectorXd y = log_transform_inventory(totals, grid);
  rep.empirical = empirical_semivariogram(y, grid, n_bins, max_lag);
  rep.warnings = rep.empirical.warnings;
  std::size_t best = 0;
  for (auto model : kAllVariogramModels) {
    rep.fits.push_back(fit_variogram(rep.empirical, model, opts));
    if (rep.fits.back().sse < rep.fits[best].sse) best = rep.fits.size() - 1;
  }
  rep.prior.variogram = rep.fits[best].params;
  rep.prior.log_mean = y.mean();

  constexpr Eigen::Index kMaxLooSites = 3000;
  if (grid.size() <= kMaxLooSites) {
    const Eigen::VectorXd z = loo_kriging_zscores(y, grid, rep.prior.variogram, rep.prior.log_mean);
    rep.loo_mean_z = z.mean();
    rep.loo_sd_z = std::sqrt((z.array() - rep.loo_mean_z).square().sum() / std::max<Eigen::Index>(1, z.size() - 1));
    if (std::abs(rep.loo_mean_z) > 0.2) {
      std::ostringstream os;
      os << "leave-one-out mean z-score " << rep.loo_mean_z << " exceeds 0.2 in magnitude";
      rep.warnings.push_back(os.str());
    }
  } else {
    rep.warnings.push_back("leave-one-out check skipped: more than 3000 sites");
  }
  return rep;
}

std::string format_report(const CalibrationReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "[selected]\n"
     << "model = " << to_string(r.prior.variogram.model) << "\n"
     << "nugget = " << r.prior.variogram.nugget << "\n"
     << "partial_sill = " << r.prior.variogram.partial_sill << "\n"
     << "range = " << r.prior.variogram.range << "\n"
     << "log_mean = " << r.prior.log_mean << "\n"
     << "weighting = cressie (N_h / gamma(h)^2)\n"
     << "estimator = matheron\n\n[fits]\n";
  for (const auto& f : r.fits) {
    os << to_string(f.params.model) << " = nugget " << f.params.nugget << ", partial_sill " << f.params.partial_sill
       << ", range " << f.params.range << ", sse " << f.sse << (f.converged ? "" : " (not converged)") << "\n";
  }
  os << "\n[loo]\nmean_z = " << r.loo_mean_z << "\nsd_z = " << r.loo_sd_z << "\n\n[bins]\n# lag,semivariance,pairs\n";
  for (const auto& b : r.empirical.bins) os << b.lag << "," << b.semivariance << "," << b.pair_count << "\n";
  if (!r.warnings.empty()) {
    os << "\n[warnings]\n";
    for (const auto& w : r.warnings) os << w << "\n";
  }
  return os.str();
}

}  // namespace traceinv
