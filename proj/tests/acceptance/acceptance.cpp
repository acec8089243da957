// Acceptance suite: one PASS/FAIL line per criterion, details indented below.

// test_support.hpp pulls in doctest; this binary has no doctest runner.
#define DOCTEST_CONFIG_DISABLE
#include "../test_support.hpp"

#include "traceinv/errors.hpp"
#include "traceinv/io.hpp"
#include "traceinv/study.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace traceinv;
using namespace traceinv::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << "    " << (ok ? "ok   " : "FAIL ") << what << '\n';
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Analytic derivatives against central finite differences.
void gradient_suite(Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst_j = 0.0, worst_h = 0.0, worst_c = 0.0;
  for (int k = 0; k < 20; ++k) {
    const InversionProblem pr = make_toy_problem(rng);
    const DiscrepancyParams theta = random_theta(rng);
    const SeparableCovariance cov(theta, pr.mole_sites, pr.n_steps());
    const VectorXd y = random_latent(rng, pr);
    const auto f = [&](const VectorXd& v) { return joint_log_density(pr, cov, v); };
    worst_j = std::max(worst_j, max_rel_error(fd_gradient(f, y), joint_gradient(pr, cov, y)));
    const auto g = [&](const VectorXd& v) { return joint_gradient(pr, cov, v); };
    worst_h = std::max(worst_h, max_rel_error(fd_jacobian(g, y), joint_hessian(pr, cov, y)));

    const ConditionalSystem sys(pr, theta);
    const VectorXd yf = y.head(pr.n_flux());
    const auto c = [&](const VectorXd& v) { return collapsed_log_density_and_grad(sys, v).first; };
    worst_c = std::max(worst_c, max_rel_error(fd_gradient(c, yf), collapsed_log_density_and_grad(sys, yf).second));
  }

  double worst_q = 0.0;
  Eigen::MatrixXd sites(5, 1);
  sites << 0.0, 0.4, 1.3, 1.9, 3.0;
  const Index p = 8;
  for (int k = 0; k < 20; ++k) {
    const PsiMoments psi = PsiMoments::from_dense(random_spd(rng, p * sites.rows()), p, sites.rows());
    const DiscrepancyParams theta = random_theta(rng);
    const auto g = q_gradient(theta, psi, sites);
    Eigen::VectorXd x(3), ga(3);
    x << theta.sigma2, theta.a, theta.d;
    ga << g[0], g[1], g[2];
    const auto f = [&](const VectorXd& v) { return q_function({v[0], v[1], v[2]}, psi, sites); };
    worst_q = std::max(worst_q, max_rel_error(fd_gradient(f, x), ga));
  }
  const double secs = seconds_since(t0);
  out.require(worst_j <= 1e-5, "joint gradient J, 20 points, max rel error " + fmt(worst_j));
  out.require(worst_h <= 1e-4, "joint Hessian H, 20 points, max rel error " + fmt(worst_h));
  out.require(worst_c <= 1e-5, "collapsed-density gradient, 20 points, max rel error " + fmt(worst_c));
  out.require(worst_q <= 1e-5, "M-step gradients (sigma2, a, d), 20 points, max rel error " + fmt(worst_q));
  out.require(secs < 60.0, "runtime " + fmt(secs, 3) + " s");
}

// 2. Structured solves, log-determinants and Q against dense Kronecker products.
void kronecker_suite(Outcome& out) {
  Rng rng(202);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_solve = 0.0, worst_logdet = 0.0, worst_q = 0.0, worst_marg = 0.0;
  for (Index p = 1; p <= 8; ++p) {
    for (Index q = 1; q <= 8; ++q) {
      Eigen::MatrixXd sites(q, 1);
      for (Index s = 0; s < q; ++s) sites(s, 0) = 0.5 * static_cast<double>(s) + 0.4 * unif(rng);
      const DiscrepancyParams theta = random_theta(rng);
      const MatrixXd dense = kron_oracle(theta, sites, p);
      const SeparableCovariance cov(theta, sites, p);

      const MatrixXd v = standard_normal(rng, p * q, 3);
      const MatrixXd exact = dense.llt().solve(v);
      worst_solve = std::max(worst_solve, (cov.solve(v) - exact).norm() / exact.norm());
      const double ld = dense_logdet(dense);
      worst_logdet = std::max(worst_logdet, std::abs(cov.logdet() - ld) / std::max(1.0, std::abs(ld)));
      if (p < 2) continue;

      const MatrixXd psi = random_spd(rng, p * q);
      const double dense_q = -0.5 * ld - 0.5 * dense.llt().solve(psi).trace();
      const double q_val = q_function(theta, PsiMoments::from_dense(psi, p, q), sites);
      worst_q = std::max(worst_q, std::abs(q_val - dense_q) / std::abs(dense_q));

      ToyOptions o;
      o.n_steps = p;
      o.n_sites = q;
      InversionProblem pr = make_toy_problem(rng, o);
      pr.mole_sites = sites;
      const ConditionalSystem sys(pr, theta);
      const MatrixXd c = pr.obs.incidence.dense();
      const MatrixXd sz = c * dense * c.transpose() + pr.obs.noise_variance * MatrixXd::Identity(c.rows(), c.rows());
      const VectorXd yf = random_latent(rng, pr).head(pr.n_flux());
      const double lm = dense_log_normal(pr.z, c * pr.B * yf, sz);
      worst_marg = std::max(worst_marg, std::abs(sys.marginal_loglik(yf) - lm) / std::abs(lm));
    }
  }
  out.require(worst_solve <= 1e-9, "Sigma_zeta^-1 V, p, q in 1..8, max rel error " + fmt(worst_solve));
  out.require(worst_logdet <= 1e-9, "ln|Sigma_zeta|, max rel error " + fmt(worst_logdet));
  out.require(worst_q <= 1e-9, "Q trace terms, p in 2..8, max rel error " + fmt(worst_q));
  out.require(worst_marg <= 1e-9, "marginal likelihood via block-tridiagonal M, max rel error " + fmt(worst_marg));
}

// 3. Gaussian prior: the Laplace E-step is exact.
void gaussian_reduction(Outcome& out) {
  Rng rng(303);
  double worst_mean = 0.0, worst_cov = 0.0, worst_mode = 0.0;
  for (int k = 0; k < 5; ++k) {
    ToyOptions o;
    o.gaussian_prior = true;
    o.n_steps = 6;
    o.n_sites = 3;
    o.n_flux = 5;
    InversionProblem pr = make_toy_problem(rng, o);
    pr.zeta_mean = 0.2 * VectorXd::Ones(pr.n_mole());
    const DiscrepancyParams theta = random_theta(rng);
    VectorXd coords(o.n_flux);
    for (Index j = 0; j < o.n_flux; ++j) coords[j] = 0.5 * static_cast<double>(j);
    const VectorXd prior_mean = VectorXd::Constant(o.n_flux, std::exp(o.prior_log_mean));
    const MatrixXd prior_cov = exponential_cov(coords, o.prior_sill, 1.0);
    const DenseGaussianPosterior exact = conjugate_posterior(pr, theta, prior_mean, prior_cov);

    const InversionState st = laplace_e_step(pr, theta, VectorXd::Zero(o.n_flux));
    worst_mean = std::max(worst_mean, max_rel_error(st.mode(), exact.mean));
    worst_cov = std::max(worst_cov, max_rel_error(st.neg_hessian_inverse(), exact.cov));

    const auto sys = std::make_shared<const ConditionalSystem>(pr, theta);
    const VectorXd mode = find_mode(*sys, VectorXd::Zero(o.n_flux)).flux;
    worst_mode = std::max(worst_mode, max_rel_error(mode, exact.mean.head(o.n_flux)));
  }
  out.require(worst_mean <= 1e-8, "E-step mean vs conjugate posterior, max rel error " + fmt(worst_mean));
  out.require(worst_cov <= 1e-8, "E-step covariance vs conjugate posterior, max rel error " + fmt(worst_cov));
  out.require(worst_mode <= 1e-6, "collapsed HMC target mode vs posterior mean, max rel error " + fmt(worst_mode));
}

struct Table1Row {
  EmResult em;
  PosteriorChain chain;
  ScoreReport score;
};

Table1Row run_prior(const StudyConfig& cfg, const Dataset& data, const FluxPriorParams& prior, std::uint64_t seed) {
  const Inference inf = prepare_inference(cfg, data, prior);
  Table1Row row;
  row.em = estimate_theta(cfg, inf);
  row.chain = sample_posterior(cfg, inf, row.em.state, seed);
  row.score = score_chain(data, inf, row.chain);
  return row;
}

FluxPriorParams uncorrelated(FluxPriorParams p) {
  p.variogram.range = 0.0;
  return p;
}

double site_s1m(const ScoreReport& r) {
  if (r.s1m_by_site.size() != 1) fail(ErrorKind::DimensionMismatch, "expected one prediction site");
  return r.s1m_by_site.begin()->second;
}

// Table 1 ordering: the spatial prior beats the uncorrelated one on S1,f and
// S2,f, and both give similar S1,m at the prediction site.
bool ordering_holds(const Table1Row& r33, const Table1Row& r0, std::string& why) {
  const double m33 = site_s1m(r33.score), m0 = site_s1m(r0.score);
  const bool a = r33.score.s1f < r0.score.s1f;
  const bool b = std::abs(r33.score.s2f - 1.0) < std::abs(r0.score.s2f - 1.0);
  const bool c = std::abs(m33 - m0) / m33 < 0.15;
  why = "S1f " + fmt(r33.score.s1f, 4) + " vs " + fmt(r0.score.s1f, 4) + ", S2f " + fmt(r33.score.s2f, 3) + " vs " +
        fmt(r0.score.s2f, 3) + ", S1m " + fmt(m33, 4) + " vs " + fmt(m0, 4);
  return a && b && c;
}

struct StudyOutcome {
  Outcome c4, c8;
};

// 4 and 8 share the fixture and fresh-seed runs.
StudyOutcome simulation_study(const StudyConfig& cfg, int n_fresh, std::uint64_t first_fresh) {
  StudyOutcome so;
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = cfg.require_seed();
  const FluxPriorParams prior = cfg.resolved_prior();
  CoverageResult coverage;
  const auto add_coverage = [&](const Dataset& data, const Table1Row& row, std::uint64_t s) {
    Rng rng = SeedSplitter(s).stream("coverage");
    const CoverageResult c =
        predictive_coverage(data, row.chain, cfg.noise_variance, cfg.interval, data.domains.prediction_sites, rng);
    coverage.hits += c.hits;
    coverage.total += c.total;
  };

  const Dataset fixture = simulate_dataset(cfg, seed);
  const Table1Row f33 = run_prior(cfg, fixture, prior, seed);
  const Table1Row f0 = run_prior(cfg, fixture, uncorrelated(prior), seed);
  add_coverage(fixture, f33, seed);

  Outcome& o = so.c4;
  const Inference inf = prepare_inference(cfg, fixture, prior);
  double kept_max = -1e300;
  for (std::size_t u : inf.kept_cells) kept_max = std::max(kept_max, fixture.domains.flux_grid.centroids()(static_cast<Index>(u), 0));
  o.detail << "    fixture seed " << seed << ", " << inf.kept_cells.size() << " flux cells kept, largest kept centroid "
           << fmt(kept_max, 4) << '\n';
  const DiscrepancyParams& th = f33.em.theta;
  o.require(f33.em.converged && th.sigma2 >= 1500 && th.sigma2 <= 3000 && th.a >= 0.6 && th.a <= 0.9 && th.d >= 0.5 &&
                th.d <= 1.3,
            "(a) EM theta_hat = (" + fmt(th.sigma2, 5) + ", " + fmt(th.a, 4) + ", " + fmt(th.d, 4) + ") after " +
                std::to_string(f33.em.iterations) + " iterations" + (f33.em.converged ? "" : ", not converged"));
  const double acc = f33.chain.acceptance_rate;
  o.require(acc >= 0.45 && acc <= 0.70, "(b) HMC acceptance " + fmt(100 * acc, 4) + "% at L = " +
                                             std::to_string(f33.chain.leapfrog_steps) + ", step in [" +
                                             fmt(f33.chain.step_low) + ", " + fmt(f33.chain.step_high) + "]");
  {
    // Context for (b): the step a pilot run tunes to for the same mass.
    StudyConfig tuned = cfg;
    tuned.pilot_tune = true;
    tuned.pilot_iterations = 2000;
    tuned.hmc.n_samples = 2000;
    tuned.hmc.n_burnin = 200;
    const PosteriorChain pc = sample_posterior(tuned, inf, f33.em.state, seed);
    o.detail << "         pilot-tuned step [" << fmt(pc.step_low, 4) << ", " << fmt(pc.step_high, 4)
             << "] gives acceptance " << fmt(100 * pc.acceptance_rate, 4) << "%\n";
  }
  std::string why;
  const bool fixture_ok = ordering_holds(f33, f0, why);
  o.require(fixture_ok, "(c) Table 1 ordering on the fixture: " + why);

  int held = 0;
  std::ostringstream per_seed;
  for (int k = 0; k < n_fresh; ++k) {
    const std::uint64_t s = first_fresh + static_cast<std::uint64_t>(k);
    const Dataset data = simulate_dataset(cfg, s, &fixture.srr);
    const Table1Row r33 = run_prior(cfg, data, prior, s);
    const Table1Row r0 = run_prior(cfg, data, uncorrelated(prior), s);
    add_coverage(data, r33, s);
    const bool ok = ordering_holds(r33, r0, why);
    held += ok ? 1 : 0;
    per_seed << "         seed " << s << ": " << (ok ? "holds" : "fails") << " (" << why << ")\n";
  }
  const int needed = (8 * n_fresh + 9) / 10;
  o.require(held >= needed, "(d) ordering holds in " + std::to_string(held) + " of " + std::to_string(n_fresh) +
                                " fresh seeds (need " + std::to_string(needed) + ")");
  o.detail << per_seed.str();
  o.detail << "    runtime " << fmt(seconds_since(t0), 4) << " s\n";

  const double rate = coverage.rate();
  so.c8.require(rate >= 0.85 && rate <= 0.95, "90% intervals cover " + std::to_string(coverage.hits) + " of " +
                                                  std::to_string(coverage.total) + " held-out observations (" +
                                                  fmt(100 * rate, 4) + "%), fixture plus " + std::to_string(n_fresh) +
                                                  " fresh seeds");
  return so;
}

// 5. Dense observations on every flux-grid node.
void dense_variant(const StudyConfig& cfg, Outcome& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = simulate_dataset(cfg, cfg.require_seed());
  const Inference inf = prepare_inference(cfg, data, cfg.resolved_prior());
  const EmResult em = estimate_theta(cfg, inf);
  const double secs = seconds_since(t0);
  const DiscrepancyParams& th = em.theta;
  out.require(data.z.size() == 100000, std::to_string(data.z.size()) + " observations");
  out.require(em.converged && em.iterations <= 10,
              "EM converged in " + std::to_string(em.iterations) + " iterations" + (em.converged ? "" : " (not converged)"));
  out.require(th.sigma2 >= 2000 && th.sigma2 <= 3000, "sigma2_zeta_hat " + fmt(th.sigma2, 5));
  out.require(th.a >= 0.75 && th.a <= 0.85, "a_hat " + fmt(th.a, 4));
  out.require(th.d >= 0.8 && th.d <= 1.1, "d_hat " + fmt(th.d, 4));
  out.require(secs < 7200.0, "runtime " + fmt(secs, 4) + " s");
}

// 6. Lognormal moments against Monte Carlo; area reparameterization of B.
void moment_oracle(const SrrTensor& srr, Outcome& out) {
  const SpatialGrid grid = SpatialGrid::regular_1d(0.0, 0.5, 5);
  const FluxPriorParams params{{0.0053, 0.80, 3.3, VariogramModel::spherical}, 1.0};
  const LognormalFluxPrior prior = LognormalFluxPrior::from_params(params, grid);
  const NaturalMoments nm = natural_moments(prior);

  const long n = 1000000;
  Rng rng(606);
  MatrixXd draws(n, 5);
  for (long i = 0; i < n; ++i) draws.row(i) = sample_flux(prior, rng).transpose();
  const VectorXd mean = draws.colwise().mean().transpose();
  const MatrixXd centered = draws.rowwise() - mean.transpose();
  double worst = 0.0;
  for (Index i = 0; i < 5; ++i) {
    const double se_mean = std::sqrt(centered.col(i).squaredNorm() / (n - 1) / n);
    worst = std::max(worst, std::abs(mean[i] - nm.mean[i]) / se_mean);
    for (Index j = 0; j <= i; ++j) {
      const VectorXd prod = centered.col(i).cwiseProduct(centered.col(j));
      const double cov = prod.sum() / (n - 1);
      const double se_cov = std::sqrt((prod.array() - cov).square().sum() / (n - 1) / n);
      worst = std::max(worst, std::abs(cov - nm.cov(i, j)) / se_cov);
    }
  }
  out.require(worst <= 3.0, "mean and covariance vs 1e6 draws, worst deviation " + fmt(worst, 3) + " standard errors");

  // Dyadic areas make the identity exact in floating point; the study grid
  // areas (0.2) can differ by a rounding.
  Rng yrng(607);
  const auto identity_error = [&](const SrrTensor& s, const SpatialGrid& g) {
    VectorXd yf(g.size());
    std::uniform_real_distribution<double> u(1.0, 400.0);
    for (Index i = 0; i < yf.size(); ++i) yf[i] = u(yrng);
    const VectorXd lhs = assemble_B(s, g, PriorMode::density) * yf;
    const VectorXd rhs = assemble_B(s, g, PriorMode::total_per_cell) * g.areas().cwiseProduct(yf);
    return (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1e-300, lhs.cwiseAbs().maxCoeff());
  };
  const SpatialGrid dyadic = SpatialGrid::regular_1d(-9.875, 0.25, srr.n_cells());
  const SpatialGrid study = SpatialGrid::regular_1d(-9.9, 0.2, srr.n_cells());
  const double e_dyadic = identity_error(srr, dyadic);
  const double e_study = identity_error(srr, study);
  out.require(e_dyadic == 0.0, "B diag(A) Y_f == B_no_area (A Y_f) bitwise for dyadic areas");
  out.require(e_study <= 4 * std::numeric_limits<double>::epsilon(),
              "same identity on the study grid, max rel difference " + fmt(e_study, 3));
}

double spherical_oracle(double nugget, double psill, double range, double h) {
  if (h <= 0.0) return 0.0;
  if (h >= range) return nugget + psill;
  const double r = h / range;
  return nugget + psill * (1.5 * r - 0.5 * r * r * r);
}

// 7. Variogram fitting recovers its own model; fitted covariances are PSD.
void variogram_suite(Outcome& out) {
  EmpiricalVariogram emp;
  for (int k = 1; k <= 15; ++k) {
    const double h = 0.4 * k;
    emp.bins.push_back({h, spherical_oracle(0.0053, 0.80, 3.3, h), 100 + 10L * k});
  }
  const VariogramFit fit = fit_variogram(emp, VariogramModel::spherical);
  const double e = std::max({std::abs(fit.params.nugget / 0.0053 - 1.0), std::abs(fit.params.partial_sill / 0.80 - 1.0),
                             std::abs(fit.params.range / 3.3 - 1.0)});
  out.require(e <= 1e-4, "noiseless spherical bins: (" + fmt(fit.params.nugget, 6) + ", " + fmt(fit.params.partial_sill, 6) +
                             ", " + fmt(fit.params.range, 6) + "), max rel error " + fmt(e, 3));

  Rng rng(707);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index n = 60;
    MatrixXd cent(n, 2);
    for (Index i = 0; i < n; ++i) cent.row(i) << unif(rng), unif(rng);
    const SpatialGrid grid(cent, VectorXd::Ones(n));
    MatrixXd c(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        c(i, j) = 0.8053 - spherical_oracle(0.0053, 0.8, 3.3, (cent.row(i) - cent.row(j)).norm());
    const VectorXd field = c.llt().matrixL() * standard_normal(rng, n);
    const EmpiricalVariogram ev = empirical_semivariogram(field, grid, 10);
    for (auto model : kAllVariogramModels) {
      const VariogramFit f = fit_variogram(ev, model);
      const MatrixXd cov = covariance_matrix(f.params, grid);
      const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(cov).eigenvalues().minCoeff();
      worst = std::max(worst, -min_eig / std::max(f.params.sill(), 1e-300));
    }
  }
  out.require(worst <= 1e-8, "fitted covariances on 20 random site sets x 3 models, worst -min eig / sill " + fmt(worst, 3));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traceinv acceptance suite"};
  std::string config, dense_config, report;
  int n_fresh = 10;
  std::uint64_t first_fresh = 101;
  app.add_option("--config", config, "study configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--dense-config", dense_config, "dense-variant configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--fresh-seeds", n_fresh, "fresh seeds for the ordering check")->capture_default_str();
  app.add_option("--first-fresh-seed", first_fresh, "first fresh seed")->capture_default_str();
  app.add_option("--report", report, "also write the report to this file");
  std::vector<int> expected_fail;
  app.add_option("--expected-fail", expected_fail, "criteria known to fail; still reported as FAIL");
  CLI11_PARSE(app, argc, argv);

  std::ostringstream all;
  int failures = 0, unexpected = 0;
  const auto emit = [&](int id, const std::string& title, Outcome& o) {
    const bool known = std::find(expected_fail.begin(), expected_fail.end(), id) != expected_fail.end();
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << title << (known ? " [expected to fail]" : "") << '\n'
         << o.detail.str();
    std::cout << line.str() << std::flush;
    all << line.str();
    if (!o.pass) ++failures;
    if (o.pass == known) ++unexpected;
  };
  const auto guarded = [&](const std::function<void(Outcome&)>& f) {
    Outcome o;
    try {
      f(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    return o;
  };

  const StudyConfig cfg = load_study_config(config);
  const StudyConfig dense_cfg = load_study_config(dense_config);

  Outcome o1 = guarded(gradient_suite);
  emit(1, "gradient/Hessian oracle suite", o1);
  Outcome o2 = guarded(kronecker_suite);
  emit(2, "Kronecker equivalence", o2);
  Outcome o3 = guarded(gaussian_reduction);
  emit(3, "Gaussian-reduction oracle", o3);

  StudyOutcome so;
  try {
    so = simulation_study(cfg, n_fresh, first_fresh);
  } catch (const std::exception& e) {
    so.c4.require(false, std::string("exception: ") + e.what());
    so.c8.require(false, std::string("exception: ") + e.what());
  }
  emit(4, "simulation-study reproduction", so.c4);
  Outcome o5 = guarded([&](Outcome& o) { dense_variant(dense_cfg, o); });
  emit(5, "dense-data variant", o5);
  Outcome o6 = guarded([&](Outcome& o) { moment_oracle(read_srr_binary(cfg.srr_file), o); });
  emit(6, "lognormal moment oracle", o6);
  Outcome o7 = guarded(variogram_suite);
  emit(7, "variogram self-consistency", o7);
  emit(8, "predictive coverage", so.c8);

  std::ostringstream summary;
  summary << failures << " of 8 criteria failed, " << unexpected << " unexpected outcome(s)\n";
  std::cout << summary.str();
  if (!report.empty()) {
    std::ofstream os(report);
    os << all.str() << summary.str();
  }
  return unexpected == 0 ? 0 : 1;
}
