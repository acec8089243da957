#include "traceinv/laplace_em.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace traceinv {

VectorXd InversionProblem::zeta_mean_or_zero() const {
  return zeta_mean.size() == 0 ? VectorXd::Zero(n_mole()) : zeta_mean;
}

void InversionProblem::validate() const {
  obs.validate();
  const Index q = n_sites();
  const Index p = n_steps();
  if (q < 1) fail(ErrorKind::DimensionMismatch, "no mole-fraction sites");
  if (p < 2) fail(ErrorKind::DimensionMismatch, "at least two time steps are required");
  if (obs.incidence.n_sites() != q) fail(ErrorKind::DimensionMismatch, "incidence sites vs mole sites");
  if (B.rows() != p * q) fail(ErrorKind::DimensionMismatch, "B rows vs T * |D^L_m|");
  if (B.cols() != prior.size()) fail(ErrorKind::DimensionMismatch, "B columns vs flux prior size");
  if (z.size() != obs.incidence.n_obs()) fail(ErrorKind::DimensionMismatch, "observation vector vs incidence rows");
  if (zeta_mean.size() != 0 && zeta_mean.size() != p * q)
    fail(ErrorKind::DimensionMismatch, "discrepancy mean length");
  if (!z.allFinite() || !B.allFinite()) fail(ErrorKind::InvalidParams, "non-finite observations or B");
}

ConditionalSystem::ConditionalSystem(const InversionProblem& problem, const DiscrepancyParams& theta)
    : problem_(&problem), cov_((problem.validate(), theta), problem.mole_sites, problem.n_steps()) {
  const Index p = problem.n_steps();
  const Index q = problem.n_sites();
  const double inv_noise = 1.0 / problem.obs.noise_variance;
  d_obs_ = problem.obs.incidence.counts() * inv_noise;
  ctz_ = problem.obs.incidence.apply_transpose(problem.z) * inv_noise;

  const Ar1Precision rt = Ar1Precision::of(theta.a);
  const MatrixXd& rs_inv = cov_.spatial_inverse();
  const double s2 = theta.sigma2;
  std::vector<MatrixXd> diag(static_cast<std::size_t>(p)), sub(static_cast<std::size_t>(p - 1));
  for (Index t = 0; t < p; ++t) {
    const double c = (t == 0 || t == p - 1) ? rt.end : rt.mid;
    MatrixXd blk = (c / s2) * rs_inv;
    blk.diagonal() += d_obs_.segment(t * q, q);
    diag[static_cast<std::size_t>(t)] = std::move(blk);
    if (t + 1 < p) sub[static_cast<std::size_t>(t)] = (rt.off / s2) * rs_inv;
  }
  m_chol_ = BlockTridiagonalCholesky(diag, sub);

  const MatrixXd db = d_obs_.asDiagonal() * problem.B;
  w_ = m_chol_.solve(db);
  h_data_ = symmetrize(problem.B.transpose() * db - db.transpose() * w_);

  const VectorXd mu = problem.zeta_mean_or_zero();
  const VectorXd e = ctz_ - d_obs_.cwiseProduct(mu);
  g_ = problem.B.transpose() * e - w_.transpose() * e;

  const VectorXd r0 = problem.z - problem.obs.incidence.apply(mu);
  const double n_obs = static_cast<double>(problem.z.size());
  const VectorXd minv_e = m_chol_.solve(e);
  kappa_ = -0.5 * (r0.squaredNorm() * inv_noise - e.dot(minv_e)) -
           0.5 * (n_obs * std::log(problem.obs.noise_variance) + cov_.logdet() + m_chol_.logdet()) -
           0.5 * n_obs * std::log(2.0 * std::numbers::pi);
}

double ConditionalSystem::marginal_loglik(const VectorXd& yf) const {
  return -0.5 * yf.dot(h_data_ * yf) + g_.dot(yf) + kappa_;
}

VectorXd ConditionalSystem::marginal_loglik_gradient(const VectorXd& yf) const { return g_ - h_data_ * yf; }

VectorXd ConditionalSystem::precision_multiply(const VectorXd& v) const {
  const Index p = cov_.n_steps();
  const Index q = cov_.n_sites();
  if (v.size() != p * q) fail(ErrorKind::DimensionMismatch, "stacked vector length vs p*q");
  const Ar1Precision rt = Ar1Precision::of(cov_.params().a);
  Eigen::Map<const MatrixXd> vm(v.data(), q, p);
  MatrixXd tmp(q, p);
  for (Index t = 0; t < p; ++t) {
    const double c = (t == 0 || t == p - 1) ? rt.end : rt.mid;
    tmp.col(t) = c * vm.col(t);
    if (t > 0) tmp.col(t) += rt.off * vm.col(t - 1);
    if (t + 1 < p) tmp.col(t) += rt.off * vm.col(t + 1);
  }
  const MatrixXd out = (cov_.spatial_inverse() * tmp) / cov_.params().sigma2;
  return Eigen::Map<const VectorXd>(out.data(), p * q);
}

VectorXd ConditionalSystem::conditional_mole_mean(const VectorXd& yf) const {
  const VectorXd prior_mean = problem_->B * yf + problem_->zeta_mean_or_zero();
  return m_chol_.solve(precision_multiply(prior_mean) + ctz_);
}

VectorXd ConditionalSystem::draw_mole(const VectorXd& yf, Rng& rng) const {
  return conditional_mole_mean(yf) + m_chol_.solve_upper(standard_normal(rng, m_chol_.size()));
}

MatrixXd ConditionalSystem::conditional_mole_cov() const {
  return symmetrize(m_chol_.solve(MatrixXd::Identity(m_chol_.size(), m_chol_.size())));
}

namespace {

struct SplitY {
  VectorXd f, m;
};

SplitY split(const InversionProblem& problem, const VectorXd& y) {
  if (y.size() != problem.n_flux() + problem.n_mole())
    fail(ErrorKind::DimensionMismatch, "latent vector length vs |Y_f| + |Y_m|");
  return {y.head(problem.n_flux()), y.tail(problem.n_mole())};
}

}  // namespace

double joint_log_density(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y) {
  const SplitY s = split(problem, y);
  problem.prior.check_domain(s.f);
  const VectorXd resid_obs = problem.z - problem.obs.incidence.apply(s.m);
  const VectorXd zeta = s.m - problem.B * s.f - problem.zeta_mean_or_zero();
  return -0.5 * resid_obs.squaredNorm() / problem.obs.noise_variance - 0.5 * cov.quadratic_form(zeta) +
         problem.prior.log_kernel(s.f);
}

VectorXd joint_gradient(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y) {
  const SplitY s = split(problem, y);
  problem.prior.check_domain(s.f);
  const VectorXd resid_obs = problem.z - problem.obs.incidence.apply(s.m);
  const VectorXd qz = cov.solve(s.m - problem.B * s.f - problem.zeta_mean_or_zero()).col(0);
  VectorXd j(y.size());
  j.head(problem.n_flux()) = problem.B.transpose() * qz + problem.prior.gradient(s.f);
  j.tail(problem.n_mole()) = problem.obs.incidence.apply_transpose(resid_obs) / problem.obs.noise_variance - qz;
  return j;
}

MatrixXd joint_hessian(const InversionProblem& problem, const SeparableCovariance& cov, const VectorXd& y) {
  const SplitY s = split(problem, y);
  problem.prior.check_domain(s.f);
  const Index nf = problem.n_flux(), nm = problem.n_mole();
  const MatrixXd qzeta = symmetrize(cov.solve(MatrixXd::Identity(nm, nm)));
  const MatrixXd qb = qzeta * problem.B;
  MatrixXd h(nf + nm, nf + nm);
  h.topLeftCorner(nf, nf) = -problem.B.transpose() * qb - problem.prior.neg_hessian(s.f);
  h.topRightCorner(nf, nm) = qb.transpose();
  h.bottomLeftCorner(nm, nf) = qb;
  h.bottomRightCorner(nm, nm) = -qzeta;
  h.bottomRightCorner(nm, nm).diagonal() -= problem.obs.incidence.counts() / problem.obs.noise_variance;
  return h;
}

PsiMoments PsiMoments::from_dense(const MatrixXd& psi, Index n_steps, Index n_sites) {
  const Index p = n_steps, q = n_sites;
  if (p < 2) fail(ErrorKind::DimensionMismatch, "at least two time steps are required");
  if (psi.rows() != p * q || psi.cols() != p * q) fail(ErrorKind::DimensionMismatch, "Psi size vs p*q");
  PsiMoments m;
  m.n_steps = p;
  m.end = psi.block(0, 0, q, q) + psi.block((p - 1) * q, (p - 1) * q, q, q);
  m.mid = MatrixXd::Zero(q, q);
  for (Index t = 1; t + 1 < p; ++t) m.mid += psi.block(t * q, t * q, q, q);
  m.off = MatrixXd::Zero(q, q);
  for (Index t = 0; t + 1 < p; ++t) m.off += psi.block((t + 1) * q, t * q, q, q);
  return m;
}

namespace {

struct ProfilePoint {
  VectorXd x, y, jac, grad_y, grad_x;
  double value = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

ProfilePoint evaluate_profile(const ConditionalSystem& sys, const VectorXd& x) {
  const FluxPriorDensity& prior = sys.problem().prior;
  ProfilePoint pt;
  pt.x = x;
  pt.y = prior.from_free(x);
  if (!pt.y.allFinite() || (prior.kind() == FluxPriorDensity::Kind::lognormal && !(pt.y.minCoeff() > 0.0)))
    return pt;
  pt.value = sys.marginal_loglik(pt.y) + prior.log_kernel(pt.y);
  if (!std::isfinite(pt.value)) return pt;
  pt.jac = prior.free_jacobian(x);
  pt.grad_y = sys.marginal_loglik_gradient(pt.y) + prior.gradient(pt.y);
  pt.grad_x = pt.jac.cwiseProduct(pt.grad_y);
  pt.ok = pt.grad_x.allFinite();
  return pt;
}

// Negative Hessian of the profile objective in free coordinates.
MatrixXd free_neg_hessian(const ConditionalSystem& sys, const ProfilePoint& pt) {
  const FluxPriorDensity& prior = sys.problem().prior;
  MatrixXd a = sys.data_hessian() + prior.neg_hessian(pt.y);
  a = pt.jac.asDiagonal() * a * pt.jac.asDiagonal();
  if (prior.kind() == FluxPriorDensity::Kind::lognormal) a.diagonal() -= pt.jac.cwiseProduct(pt.grad_y);
  return symmetrize(a);
}

}  // namespace

ModeResult find_mode(const ConditionalSystem& system, const VectorXd& init_flux, const ModeSearchOptions& opts) {
  const FluxPriorDensity& prior = system.problem().prior;
  const bool log_scale = prior.kind() == FluxPriorDensity::Kind::lognormal;
  ProfilePoint cur = evaluate_profile(system, prior.to_free(init_flux));
  if (!cur.ok) fail(ErrorKind::ModeSearchFailed, "objective is not finite at the initial point");
  const double threshold = opts.grad_tol * std::max(1.0, cur.grad_x.lpNorm<Eigen::Infinity>());

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (cur.grad_x.lpNorm<Eigen::Infinity>() <= threshold) break;

    MatrixXd a = free_neg_hessian(system, cur);
    Eigen::LLT<MatrixXd> llt(a);
    double damping = 0.0;
    const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    while (llt.info() != Eigen::Success) {
      damping = damping == 0.0 ? 1e-8 * scale : damping * 10.0;
      if (damping > 1e8 * scale) fail(ErrorKind::ModeSearchFailed, "cannot regularize the Newton system");
      MatrixXd ad = a;
      ad.diagonal().array() += damping;
      llt.compute(ad);
    }
    VectorXd step = llt.solve(cur.grad_x);
    double slope = cur.grad_x.dot(step);
    if (!(slope > 0.0) || !step.allFinite()) {
      step = cur.grad_x;
      slope = step.squaredNorm();
    } else if (damping == 0.0 && slope <= 1e-12 * (1.0 + std::abs(cur.value))) {
      // Newton decrement at rounding level; the gradient may sit on its
      // floating-point floor above the absolute threshold.
      break;
    }
    if (log_scale) {
      const double big = step.lpNorm<Eigen::Infinity>();
      if (big > 2.0) {
        step *= 2.0 / big;
        slope *= 2.0 / big;
      }
    }

    bool accepted = false;
    for (double t = 1.0; t > 1e-12; t *= 0.5) {
      ProfilePoint trial = evaluate_profile(system, cur.x + t * step);
      if (trial.ok && trial.value >= cur.value + 1e-4 * t * slope) {
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable ascent left: accept as converged only if the
      // predicted gain is at rounding level.
      if (slope <= 1e-10 * (1.0 + std::abs(cur.value))) break;
      fail(ErrorKind::ModeSearchFailed,
           "line search failed; gradient norm " + std::to_string(cur.grad_y.lpNorm<Eigen::Infinity>()));
    }
  }
  if (it == opts.max_iter && cur.grad_x.lpNorm<Eigen::Infinity>() > threshold)
    fail(ErrorKind::ModeSearchFailed,
         "no convergence in " + std::to_string(opts.max_iter) + " iterations; gradient norm " +
             std::to_string(cur.grad_y.lpNorm<Eigen::Infinity>()));

  ModeResult r;
  r.flux = cur.y;
  r.value = cur.value;
  r.grad_norm = cur.grad_y.lpNorm<Eigen::Infinity>();
  r.iterations = it;
  return r;
}

VectorXd InversionState::mode() const {
  VectorXd y(flux_mode.size() + mole_mode.size());
  y << flux_mode, mole_mode;
  return y;
}

MatrixXd InversionState::neg_hessian_inverse() const {
  const InversionProblem& pr = system->problem();
  const Index nf = pr.n_flux(), nm = pr.n_mole();
  const MatrixXd bw = pr.B - system->gain();
  const MatrixXd cmf = bw * cov_ff;
  MatrixXd out(nf + nm, nf + nm);
  out.topLeftCorner(nf, nf) = cov_ff;
  out.bottomLeftCorner(nm, nf) = cmf;
  out.topRightCorner(nf, nm) = cmf.transpose();
  out.bottomRightCorner(nm, nm) = system->conditional_mole_cov() + cmf * bw.transpose();
  return symmetrize(out);
}

MatrixXd InversionState::psi_dense() const {
  const InversionProblem& pr = system->problem();
  const VectorXd r = mole_mode - pr.B * flux_mode - pr.zeta_mean_or_zero();
  const MatrixXd& w = system->gain();
  return symmetrize(r * r.transpose() + system->conditional_mole_cov() + w * cov_ff * w.transpose());
}

InversionState laplace_e_step(std::shared_ptr<const ConditionalSystem> system, const VectorXd& init_flux,
                              const ModeSearchOptions& opts) {
  const ConditionalSystem& sys = *system;
  const InversionProblem& pr = sys.problem();
  const ModeResult mode = find_mode(sys, init_flux, opts);

  InversionState st;
  st.theta = sys.theta();
  st.flux_mode = mode.flux;
  st.mole_mode = sys.conditional_mole_mean(mode.flux);
  st.mode_iterations = mode.iterations;

  const MatrixXd schur = symmetrize(sys.data_hessian() + pr.prior.neg_hessian(mode.flux));
  const Eigen::LLT<MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success) fail(ErrorKind::NonConcaveAtMode, "-H(Y*) is not positive definite");
  st.cov_ff = symmetrize(llt.solve(MatrixXd::Identity(schur.rows(), schur.cols())));

  const Index p = pr.n_steps(), q = pr.n_sites();
  const VectorXd mu = pr.zeta_mean_or_zero();
  const VectorXd zeta = st.mole_mode - pr.B * st.flux_mode - mu;

  // J at the mode; the mole block vanishes up to rounding since Y_m* is the
  // exact conditional maximizer.
  const VectorXd jm = pr.obs.incidence.apply_transpose(pr.z - pr.obs.incidence.apply(st.mole_mode)) /
                          pr.obs.noise_variance -
                      sys.precision_multiply(zeta);
  st.grad_norm = std::max(mode.grad_norm, jm.lpNorm<Eigen::Infinity>());
  st.log_density = joint_log_density(pr, sys.discrepancy(), st.mode());

  std::vector<MatrixXd> band_diag, band_sub;
  sys.precision_factor().band_of_inverse(band_diag, band_sub);
  const MatrixXd& w = sys.gain();
  const MatrixXd wsig = w * st.cov_ff;
  auto block_tt = [&](Index t, Index u) {
    // Psi(t, u) for |t - u| <= 1
    MatrixXd b = zeta.segment(t * q, q) * zeta.segment(u * q, q).transpose() +
                 wsig.middleRows(t * q, q) * w.middleRows(u * q, q).transpose();
    if (t == u)
      b += band_diag[static_cast<std::size_t>(t)];
    else
      b += band_sub[static_cast<std::size_t>(u)];
    return b;
  };
  st.psi.n_steps = p;
  st.psi.end = symmetrize(block_tt(0, 0) + block_tt(p - 1, p - 1));
  st.psi.mid = MatrixXd::Zero(q, q);
  for (Index t = 1; t + 1 < p; ++t) st.psi.mid += block_tt(t, t);
  st.psi.mid = symmetrize(st.psi.mid);
  st.psi.off = MatrixXd::Zero(q, q);
  for (Index t = 0; t + 1 < p; ++t) st.psi.off += block_tt(t + 1, t);
  st.system = std::move(system);
  return st;
}

InversionState laplace_e_step(const InversionProblem& problem, const DiscrepancyParams& theta,
                              const VectorXd& init_flux, const ModeSearchOptions& opts) {
  return laplace_e_step(std::make_shared<const ConditionalSystem>(problem, theta), init_flux, opts);
}

namespace {

struct QTerms {
  double t_end, t_mid, t_off;   // tr(R_s^{-1} S_x)
  double logdet_rs;
  MatrixXd rs_inv;
};

double trace_product(const MatrixXd& sym, const MatrixXd& s) { return sym.cwiseProduct(s).sum(); }

QTerms q_terms(const DiscrepancyParams& theta, const PsiMoments& psi, const MatrixXd& sites) {
  const Index q = sites.rows();
  if (psi.n_steps < 2) fail(ErrorKind::DimensionMismatch, "Psi needs at least two time steps");
  if (psi.end.rows() != q || psi.mid.rows() != q || psi.off.rows() != q)
    fail(ErrorKind::DimensionMismatch, "Psi block size vs mole sites");
  theta.validate();
  const MatrixXd h = site_distances(sites);
  const MatrixXd rs = h.unaryExpr([&](double x) { return spatial_correlation(theta.d, x); });
  JitteredCholesky chol;
  try {
    chol = JitteredCholesky(rs);
  } catch (const Error& e) {
    fail(ErrorKind::SingularFactor, e.what());
  }
  QTerms t;
  t.rs_inv = symmetrize(chol.inverse());
  t.logdet_rs = chol.logdet();
  t.t_end = trace_product(t.rs_inv, psi.end);
  t.t_mid = trace_product(t.rs_inv, psi.mid);
  t.t_off = trace_product(t.rs_inv, psi.off);
  return t;
}

}  // namespace

double q_function(const DiscrepancyParams& theta, const PsiMoments& psi, const MatrixXd& mole_sites) {
  const QTerms t = q_terms(theta, psi, mole_sites);
  const double p = static_cast<double>(psi.n_steps);
  const double q = static_cast<double>(mole_sites.rows());
  const double a = theta.a, s = 1.0 - a * a;
  const double tau = (t.t_end + (1.0 + a * a) * t.t_mid - 2.0 * a * t.t_off) / s;
  const double logdet = p * q * std::log(theta.sigma2) + q * (p - 1.0) * std::log(s) + p * t.logdet_rs;
  return -0.5 * logdet - 0.5 * tau / theta.sigma2;
}

std::array<double, 3> q_gradient(const DiscrepancyParams& theta, const PsiMoments& psi, const MatrixXd& mole_sites) {
  const QTerms t = q_terms(theta, psi, mole_sites);
  const double p = static_cast<double>(psi.n_steps);
  const double q = static_cast<double>(mole_sites.rows());
  const double n = p * q;
  const double a = theta.a, s = 1.0 - a * a, s2 = theta.sigma2;
  const double num = t.t_end + (1.0 + a * a) * t.t_mid - 2.0 * a * t.t_off;
  const double tau = num / s;

  const double d_s2 = -0.5 * n / s2 + 0.5 * tau / (s2 * s2);

  const double dtau_da = (2.0 * a * t.t_mid - 2.0 * t.t_off) / s + num * 2.0 * a / (s * s);
  const double d_a = q * (p - 1.0) * a / s - 0.5 * dtau_da / s2;

  const MatrixXd drs = site_distances(mole_sites).unaryExpr([&](double x) {
    return spatial_correlation_dd(theta.d, x);
  });
  const MatrixXd g = t.rs_inv * drs * t.rs_inv;
  const double dlogdet = trace_product(t.rs_inv, drs);
  const double dt_end = -trace_product(g, psi.end);
  const double dt_mid = -trace_product(g, psi.mid);
  const double dt_off = -trace_product(g, psi.off);
  const double dtau_dd = (dt_end + (1.0 + a * a) * dt_mid - 2.0 * a * dt_off) / s;
  const double d_d = -0.5 * p * dlogdet - 0.5 * dtau_dd / s2;
  return {d_s2, d_a, d_d};
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EmResult run_em(const InversionProblem& problem, const DiscrepancyParams& theta0, const VectorXd& init_flux,
                const EmConfig& config) {
  theta0.validate();
  problem.validate();
  EmResult res;
  DiscrepancyParams theta = theta0;
  VectorXd init = init_flux;

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const InversionState st = laplace_e_step(problem, theta, init, config.mode);
      init = st.flux_mode;

      const Objective neg_q = [&](const VectorXd& phi, VectorXd& grad) {
        const DiscrepancyParams th = DiscrepancyParams::from_free({phi[0], phi[1], phi[2]});
        grad = VectorXd::Zero(3);
        if (!(std::abs(th.a) < 1.0) || !(th.sigma2 > 0.0) || !(th.d > 0.0) || !std::isfinite(th.sigma2) ||
            !std::isfinite(th.d))
          return std::numeric_limits<double>::infinity();
        try {
          const double val = q_function(th, st.psi, problem.mole_sites);
          const auto gq = q_gradient(th, st.psi, problem.mole_sites);
          const auto jac = th.free_jacobian();
          for (int k = 0; k < 3; ++k) grad[k] = -gq[static_cast<std::size_t>(k)] * jac[static_cast<std::size_t>(k)];
          return -val;
        } catch (const Error&) {
          return std::numeric_limits<double>::infinity();
        }
      };
      const auto phi0a = theta.to_free();
      const VectorXd phi0 = Eigen::Map<const VectorXd>(phi0a.data(), 3);
      BfgsOptions bo;
      bo.max_iter = config.m_step_steps;
      bo.grad_tol = 1e-10;
      bo.max_step = 2.0;
      const BfgsResult m = minimize_bfgs(neg_q, phi0, bo);
      const DiscrepancyParams next = DiscrepancyParams::from_free({m.x[0], m.x[1], m.x[2]});

      EmTraceRow row;
      row.iter = iter;
      row.theta = next;
      row.q_start = q_function(theta, st.psi, problem.mole_sites);
      row.q_value = q_function(next, st.psi, problem.mole_sites);
      row.grad_norm = m.grad.lpNorm<Eigen::Infinity>();
      row.m_steps = m.iterations;
      row.mode_iterations = st.mode_iterations;
      row.seconds = seconds_since(t0);
      if (row.q_value < row.q_start - 1e-10 * (1.0 + std::abs(row.q_start))) ++res.monotonicity_violations;
      res.trace.push_back(row);

      const double delta = (m.x - phi0).lpNorm<Eigen::Infinity>();
      theta = next;
      res.iterations = iter;
      if (delta < config.tol) {
        res.converged = true;
        break;
      }
    } catch (const Error& e) {
      throw e.with_context("EM iteration " + std::to_string(iter));
    }
  }

  try {
    res.state = laplace_e_step(problem, theta, init, config.mode);
  } catch (const Error& e) {
    throw e.with_context("final E-step");
  }
  res.theta = theta;
  return res;
}

}  // namespace traceinv
