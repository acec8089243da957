#include "test_support.hpp"

#include "traceinv/bivariate_moments.hpp"
#include "traceinv/discrepancy.hpp"
#include "traceinv/flux_process.hpp"

#include <doctest.h>

#include <cmath>

using namespace traceinv;
using namespace traceinv::testing;

TEST_CASE("correlation functions") {
  CHECK(temporal_correlation(0.8, 2) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK(temporal_correlation(0.8, -2) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK(spatial_correlation(1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const auto [rt, rs] = correlation_matrices({1.0, 0.0, 1.0}, Eigen::MatrixXd::Zero(2, 1), 4);
  CHECK(rt == Eigen::MatrixXd::Identity(4, 4));
  CHECK(temporal_correlation_da(0.5, 3) == doctest::Approx(0.75).epsilon(1e-15));
  const double fd = (temporal_correlation(0.5 + 1e-6, 3) - temporal_correlation(0.5 - 1e-6, 3)) / 2e-6;
  CHECK(fd == doctest::Approx(0.75).epsilon(1e-8));
  const double fd_d = (spatial_correlation(0.7 + 1e-6, 1.3) - spatial_correlation(0.7 - 1e-6, 1.3)) / 2e-6;
  CHECK(spatial_correlation_dd(0.7, 1.3) == doctest::Approx(fd_d).epsilon(1e-8));
  CHECK(e_folding_hours(0.972, 2.0) == doctest::Approx(70.4).epsilon(1e-2));
}

TEST_CASE("parameter transforms round-trip and reject infeasible values") {
  const DiscrepancyParams th{2500.0, 0.8, 1.0};
  const auto x = th.to_free();
  const DiscrepancyParams back = DiscrepancyParams::from_free(x);
  CHECK(back.sigma2 == doctest::Approx(2500.0).epsilon(1e-14));
  CHECK(back.a == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(back.d == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kind_of([] { DiscrepancyParams{-1.0, 0.5, 1.0}.validate(); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { DiscrepancyParams{1.0, 1.0, 1.0}.validate(); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { DiscrepancyParams{1.0, 0.5, 0.0}.validate(); }) == ErrorKind::InvalidParams);
}

TEST_CASE("separable covariance: identity factors and dense oracles") {
  const SeparableCovariance id({2.0, 0.0, 1e-6}, Eigen::Vector2d(0.0, 5.0), 3);
  const Eigen::MatrixXd sol = id.solve(Eigen::VectorXd::Ones(6));
  CHECK((sol.array() - 0.5).abs().maxCoeff() < 1e-12);
  const SeparableCovariance unit({1.0, 0.0, 1e-6}, Eigen::Vector2d(0.0, 5.0), 3);
  CHECK(std::abs(unit.logdet()) < 1e-12);

  Rng rng(11);
  for (int k = 0; k < 5; ++k) {
    Eigen::MatrixXd sites(3, 1);
    sites << 0.0, 0.6, 1.7;
    const DiscrepancyParams th = random_theta(rng);
    const SeparableCovariance cov(th, sites, 3);
    const Eigen::MatrixXd dense = kron_oracle(th, sites, 3);
    const Eigen::MatrixXd v = standard_normal(rng, 9, 2);
    CHECK(max_rel_error(cov.solve(v), dense.llt().solve(v)) < 1e-10);
    CHECK(max_rel_error(cov.multiply(v), dense * v) < 1e-12);
    CHECK(std::abs(cov.logdet() - dense_logdet(dense)) < 1e-10 * std::max(1.0, std::abs(dense_logdet(dense))));
    const Eigen::VectorXd x = v.col(0);
    CHECK(cov.quadratic_form(x) == doctest::Approx(x.dot(dense.llt().solve(x))).epsilon(1e-10));
  }
}

TEST_CASE("separable covariance: correlated draws have the right covariance") {
  Eigen::MatrixXd sites(2, 1);
  sites << 0.0, 0.8;
  const DiscrepancyParams th{3.0, 0.6, 1.0};
  const SeparableCovariance cov(th, sites, 3);
  const Eigen::MatrixXd dense = kron_oracle(th, sites, 3);
  Rng rng(12);
  const long n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(6, 6);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd z = cov.correlate(standard_normal(rng, 6));
    acc += z * z.transpose();
  }
  acc /= static_cast<double>(n);
  // se of a product moment is at most sqrt(2) * sill / sqrt(n)
  const double se = std::sqrt(2.0) * 3.0 / std::sqrt(static_cast<double>(n));
  CHECK((acc - dense).cwiseAbs().maxCoeff() < 4.0 * se);
}

TEST_CASE("AR(1) tridiagonal precision inverts R_t") {
  for (double a : {-0.7, 0.0, 0.3, 0.95}) {
    const auto [rt, rs] = correlation_matrices({1.0, a, 1.0}, Eigen::MatrixXd::Zero(1, 1), 6);
    const Eigen::MatrixXd prec = Ar1Precision::of(a).dense(6);
    CHECK(max_rel_error(prec * rt, Eigen::MatrixXd::Identity(6, 6)) < 1e-12);
    const double h = 1e-6;
    const Eigen::MatrixXd fd = (Ar1Precision::of(a + h).dense(6) - Ar1Precision::of(a - h).dense(6)) / (2 * h);
    CHECK(max_rel_error(Ar1Precision::derivative(a).dense(6), fd) < 1e-7);
  }
}

TEST_CASE("lognormal natural moments") {
  const LognormalFluxPrior scalar(Eigen::VectorXd::Constant(1, 5.0), Eigen::MatrixXd::Constant(1, 1, 0.8053));
  const NaturalMoments m = natural_moments(scalar);
  CHECK(m.mean[0] == doctest::Approx(std::exp(5.40265)).epsilon(1e-12));

  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
  diag(0, 0) = 0.5;
  diag(1, 1) = 0.2;
  const NaturalMoments md = natural_moments(LognormalFluxPrior(Eigen::Vector2d(1.0, 2.0), diag));
  CHECK(md.cov(0, 1) == 0.0);

  const NaturalMoments m0 = natural_moments(LognormalFluxPrior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3)));
  CHECK(m0.mean == Eigen::VectorXd::Ones(3));
  CHECK(m0.cov == Eigen::MatrixXd::Zero(3, 3));
}

TEST_CASE("lognormal draws: degenerate, Monte Carlo mean and determinism") {
  const LognormalFluxPrior degenerate(Eigen::Vector3d(1.0, 2.0, 3.0), Eigen::MatrixXd::Zero(3, 3));
  Rng rng(1);
  CHECK(max_rel_error(sample_flux(degenerate, rng), Eigen::Vector3d(std::exp(1.0), std::exp(2.0), std::exp(3.0))) < 3e-16);

  const LognormalFluxPrior scalar(Eigen::VectorXd::Constant(1, 5.0), Eigen::MatrixXd::Constant(1, 1, 0.8053));
  Rng r2(2);
  const long n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double y = sample_flux(scalar, r2)[0];
    CHECK(y > 0.0);
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - natural_moments(scalar).mean[0]) < 3.0 * se);

  Rng a(77), b(77);
  CHECK(sample_flux(scalar, a) == sample_flux(scalar, b));
}

TEST_CASE("prior from variogram parameters and the total-per-cell shift") {
  const SpatialGrid g = SpatialGrid::regular_1d(-9.9, 0.2, 100);
  const FluxPriorParams params{{0.0053, 0.80, 3.3, VariogramModel::spherical}, 5.0};
  const LognormalFluxPrior p = LognormalFluxPrior::from_params(params, g);
  CHECK(p.log_cov()(0, 0) == doctest::Approx(0.8053).epsilon(1e-14));
  CHECK(p.log_cov()(0, 99) == 0.0);
  CHECK(max_rel_error(p.log_cov(), p.log_cov().transpose()) == 0.0);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p.log_cov()).eigenvalues().minCoeff();
  CHECK(min_eig >= -1e-8 * 0.8053);

  const LognormalFluxPrior t = to_total_per_cell(p, g);
  CHECK(t.mode() == PriorMode::total_per_cell);
  CHECK(t.log_mean()[0] == doctest::Approx(5.0 + std::log(0.2)).epsilon(1e-14));
  CHECK(t.log_mean()[0] == doctest::Approx(3.3906).epsilon(1e-4));
  CHECK(t.log_cov() == p.log_cov());
  CHECK(kind_of([&] { to_total_per_cell(t, g); }) == ErrorKind::AlreadyTotal);

  const SpatialGrid unit(g.centroids(), Eigen::VectorXd::Ones(100));
  CHECK(to_total_per_cell(p, unit).log_mean() == p.log_mean());
}

TEST_CASE("prior density: gradient and Hessian match finite differences") {
  Eigen::VectorXd coords(4);
  coords << 0.0, 0.5, 1.1, 2.0;
  const LognormalFluxPrior p(Eigen::VectorXd::Constant(4, 1.0), exponential_cov(coords, 0.4, 1.0));
  const FluxPriorDensity d = FluxPriorDensity::lognormal(p);
  const Eigen::Vector4d y(2.0, 3.5, 1.2, 0.7);
  const auto f = [&](const Eigen::VectorXd& v) { return d.log_kernel(v); };
  CHECK(max_rel_error(fd_gradient(f, y), d.gradient(y)) < 1e-7);
  const auto g = [&](const Eigen::VectorXd& v) { return d.gradient(v); };
  CHECK(max_rel_error(fd_jacobian(g, y), -d.neg_hessian(y)) < 1e-6);
  // the Jacobian of exp cancels the -sum ln Y term
  const Eigen::VectorXd x = d.to_free(y);
  CHECK(d.free_log_kernel(x) == doctest::Approx(d.log_kernel(y) + y.array().log().sum()).epsilon(1e-12));
  CHECK(kind_of([&] { d.log_kernel(Eigen::Vector4d(1.0, 0.0, 1.0, 1.0)); }) == ErrorKind::DomainError);
}

TEST_CASE("joint moments: trivial and scalar cases") {
  const LognormalFluxPrior p(Eigen::VectorXd::Constant(1, std::log(2.0) - 0.5 * std::log(1.75)),
                             Eigen::MatrixXd::Constant(1, 1, std::log(1.75)));
  // mu_f = 2, C_ff = 4 * 0.75 = 3
  const BivariateMoments m = joint_moments(p, Eigen::MatrixXd::Constant(1, 1, 4.0), Eigen::MatrixXd::Constant(1, 1, 5.0));
  CHECK(m.mean_f[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.cov_ff(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.mean_m[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(m.cov_mm(0, 0) == doctest::Approx(53.0).epsilon(1e-12));
  CHECK(m.cov_fm(0, 0) == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(m.cov_fm == m.cov_mf.transpose());

  const BivariateMoments z = joint_moments(p, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Identity(2, 2) * 7.0,
                                           Eigen::Vector2d(1.0, -1.0));
  CHECK(z.mean_m == Eigen::Vector2d(1.0, -1.0));
  CHECK(z.cov_mm == Eigen::MatrixXd::Identity(2, 2) * 7.0);
  CHECK(z.cov_fm.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("joint moments match 1e5 forward simulations on a 5-cell grid") {
  const SpatialGrid g = SpatialGrid::regular_1d(0.0, 0.5, 5);
  const LognormalFluxPrior p = LognormalFluxPrior::from_params({{0.01, 0.3, 1.5, VariogramModel::spherical}, 1.0}, g);
  Rng rng(21);
  Eigen::MatrixXd b(4, 5);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) b(i, j) = 0.2 + 0.1 * static_cast<double>((i + 2 * j) % 5);
  Eigen::MatrixXd sites(2, 1);
  sites << 0.0, 1.0;
  const SeparableCovariance disc({0.5, 0.4, 0.8}, sites, 2);
  const BivariateMoments m = joint_moments(p, b, disc);
  CHECK(max_rel_error(m.cov_mm, b * m.cov_ff * b.transpose() + kron_oracle({0.5, 0.4, 0.8}, sites, 2)) < 1e-12);
  const Eigen::MatrixXd cmm_min_bcb = m.cov_mm - b * m.cov_ff * b.transpose();
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cmm_min_bcb).eigenvalues().minCoeff() > -1e-10);

  const ObservationIncidence inc({{0, 1}, {1}}, 2);
  const long n = 100000;
  Eigen::MatrixXd ym(n, 4);
  Rng fr(1), dr(2), nr(3);
  for (long i = 0; i < n; ++i)
    ym.row(i) = forward_simulate(p, b, &disc, {}, inc, 1.0, fr, dr, nr).mole.transpose();
  const Eigen::VectorXd mean = ym.colwise().mean().transpose();
  const Eigen::MatrixXd c = ym.rowwise() - mean.transpose();
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(mean[i] - m.mean_m[i]) < 3.0 * std::sqrt(c.col(i).squaredNorm() / (n - 1) / n));
    for (Index j = 0; j <= i; ++j) {
      const Eigen::VectorXd prod = c.col(i).cwiseProduct(c.col(j));
      const double cov = prod.sum() / (n - 1);
      const double se = std::sqrt((prod.array() - cov).square().sum() / (n - 1) / n);
      CHECK(std::abs(cov - m.cov_mm(i, j)) < 3.0 * se);
    }
  }
}

TEST_CASE("forward simulation: noiseless without discrepancy observes C B Y_f") {
  const SpatialGrid g = SpatialGrid::regular_1d(0.0, 1.0, 3);
  const LognormalFluxPrior p = LognormalFluxPrior::from_params({{0.0, 0.5, 2.0, VariogramModel::exponential}, 0.0}, g);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(4, 3, 0.5);
  const ObservationIncidence inc({{0, 1, 1}, {0}}, 2);
  Rng fr(1), dr(2), nr(3);
  const SimulatedFields s = forward_simulate(p, b, nullptr, {}, inc, 0.0, fr, dr, nr);
  CHECK(max_rel_error(s.obs, inc.apply(b * s.flux)) == 0.0);
  Rng fr2(1), dr2(2), nr2(3);
  CHECK(forward_simulate(p, b, nullptr, {}, inc, 0.0, fr2, dr2, nr2).obs == s.obs);
}
