#include "traceinv/hmc.hpp"

#include "traceinv/errors.hpp"

#include <cmath>
#include <limits>

namespace traceinv {

void HmcConfig::validate(Index dim) const {
  if (leapfrog_steps < 1) fail(ErrorKind::InvalidParams, "leapfrog steps must be >= 1");
  if (!(step_low > 0.0) || !(step_low <= step_high)) fail(ErrorKind::InvalidParams, "need 0 < step_low <= step_high");
  if (n_samples < 1 || n_burnin < 0 || n_burnin >= n_samples)
    fail(ErrorKind::InvalidParams, "need 0 <= n_burnin < n_samples");
  if (mass.size() != 0) {
    if (mass.size() != dim) fail(ErrorKind::DimensionMismatch, "mass vector length vs target dimension");
    if (!(mass.minCoeff() > 0.0) || !mass.allFinite()) fail(ErrorKind::InvalidParams, "mass entries must be positive");
  }
}

void leapfrog(const LogDensity& target, VectorXd& x, VectorXd& p, VectorXd& grad, double& logp, double step,
              int n_steps, const VectorXd& inv_mass) {
  p += 0.5 * step * grad;
  for (int l = 0; l < n_steps; ++l) {
    x += step * inv_mass.cwiseProduct(p);
    logp = target(x, grad);
    if (!std::isfinite(logp) || !grad.allFinite()) return;
    if (l + 1 < n_steps) p += step * grad;
  }
  p += 0.5 * step * grad;
}

RawChain hmc_run(const HmcConfig& config, const LogDensity& target, const VectorXd& x0,
                 const std::function<void(const VectorXd&)>& on_sample) {
  const Index dim = x0.size();
  config.validate(dim);
  const VectorXd mass = config.mass.size() == 0 ? VectorXd::Ones(dim) : config.mass;
  const VectorXd inv_mass = mass.cwiseInverse();
  const VectorXd sd_p = mass.cwiseSqrt();

  Rng rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  VectorXd x = x0, grad(dim);
  double logp = target(x, grad);
  if (!std::isfinite(logp) || !grad.allFinite()) fail(ErrorKind::DomainError, "target not finite at the initial point");

  RawChain chain;
  const int kept = config.n_samples - config.n_burnin;
  chain.samples.resize(kept, dim);
  chain.log_density.resize(kept);

  for (int it = 0; it < config.n_samples; ++it) {
    const double step = config.step_low + (config.step_high - config.step_low) * unif(rng);
    VectorXd p = sd_p.cwiseProduct(standard_normal(rng, dim));
    const double h0 = -logp + 0.5 * p.dot(inv_mass.cwiseProduct(p));

    VectorXd xn = x, gn = grad;
    double lpn = logp;
    leapfrog(target, xn, p, gn, lpn, step, config.leapfrog_steps, inv_mass);
    const double h1 = -lpn + 0.5 * p.dot(inv_mass.cwiseProduct(p));
    const double dh = h1 - h0;
    const double u = unif(rng);

    if (!std::isfinite(dh) || std::abs(dh) > config.divergence_threshold) {
      ++chain.divergences;
    } else if (std::log(u) < -dh) {
      x = std::move(xn);
      grad = std::move(gn);
      logp = lpn;
      ++chain.accepted;
    }
    if (it >= config.n_burnin) {
      const Index k = it - config.n_burnin;
      chain.samples.row(k) = x.transpose();
      chain.log_density[k] = logp;
      if (on_sample) on_sample(x);
    }
  }
  chain.iterations = config.n_samples;
  chain.acceptance_rate = static_cast<double>(chain.accepted) / static_cast<double>(chain.iterations);
  return chain;
}

std::pair<double, VectorXd> collapsed_log_density_and_grad(const ConditionalSystem& system, const VectorXd& yf) {
  const FluxPriorDensity& prior = system.problem().prior;
  prior.check_domain(yf);
  const double v = system.marginal_loglik(yf) + prior.log_kernel(yf);
  VectorXd g = system.marginal_loglik_gradient(yf) + prior.gradient(yf);
  return {v, std::move(g)};
}

LogDensity collapsed_free_target(std::shared_ptr<const ConditionalSystem> system) {
  return [sys = std::move(system)](const VectorXd& x, VectorXd& grad) -> double {
    const FluxPriorDensity& prior = sys->problem().prior;
    const VectorXd y = prior.from_free(x);
    if (!y.allFinite()) {
      grad = VectorXd::Zero(x.size());
      return -std::numeric_limits<double>::infinity();
    }
    grad = prior.free_jacobian(x).cwiseProduct(sys->marginal_loglik_gradient(y)) + prior.free_gradient(x);
    return sys->marginal_loglik(y) + prior.free_log_kernel(x);
  };
}

VectorXd laplace_mass(const InversionState& state) {
  const FluxPriorDensity& prior = state.system->problem().prior;
  const VectorXd jac = prior.free_jacobian(prior.to_free(state.flux_mode));
  VectorXd var = state.cov_ff.diagonal().cwiseQuotient(jac.cwiseAbs2());
  if (!var.allFinite() || !(var.minCoeff() > 0.0)) return VectorXd::Ones(var.size());
  return var.cwiseInverse();
}

HmcConfig tune_step_size(const HmcConfig& config, const LogDensity& target, const VectorXd& x0, int n_pilot,
                         double target_acceptance, int batch) {
  HmcConfig cfg = config;
  VectorXd x = x0;
  const int n_batches = std::max(1, n_pilot / batch);
  for (int b = 0; b < n_batches; ++b) {
    HmcConfig pilot = cfg;
    pilot.n_samples = batch;
    pilot.n_burnin = batch - 1;
    pilot.seed = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(b + 1);
    const RawChain c = hmc_run(pilot, target, x);
    x = c.samples.row(c.samples.rows() - 1).transpose();
    const double f = c.acceptance_rate > target_acceptance ? 1.1 : 1.0 / 1.1;
    cfg.step_low *= f;
    cfg.step_high *= f;
  }
  return cfg;
}

VectorXd gibbs_mole_fraction(const ConditionalSystem& system, const VectorXd& yf, Rng& rng) {
  system.problem().prior.check_domain(yf);
  return system.draw_mole(yf, rng);
}

PosteriorChain hmc_sample(const HmcConfig& config, std::shared_ptr<const ConditionalSystem> system,
                          const VectorXd& init_flux, bool draw_mole) {
  const FluxPriorDensity& prior = system->problem().prior;
  const LogDensity target = collapsed_free_target(system);

  PosteriorChain out;
  const Index nm = system->problem().n_mole();
  const int kept = config.n_samples - config.n_burnin;
  if (draw_mole) out.mole.resize(kept, nm);
  Rng mole_rng(SeedSplitter(config.seed).seed_for("gibbs"));
  Index k = 0;
  const auto on_sample = [&](const VectorXd& x) {
    if (!draw_mole) return;
    out.mole.row(k++) = system->draw_mole(prior.from_free(x), mole_rng).transpose();
  };
  const RawChain raw = hmc_run(config, target, prior.to_free(init_flux), on_sample);

  out.flux.resize(raw.samples.rows(), raw.samples.cols());
  for (Index i = 0; i < raw.samples.rows(); ++i) out.flux.row(i) = prior.from_free(raw.samples.row(i).transpose());
  out.log_density = raw.log_density;
  out.acceptance_rate = raw.acceptance_rate;
  out.leapfrog_steps = config.leapfrog_steps;
  out.step_low = config.step_low;
  out.step_high = config.step_high;
  out.n_burnin = config.n_burnin;
  out.divergences = raw.divergences;
  return out;
}

}  // namespace traceinv
