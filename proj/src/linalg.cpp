#include "traceinv/linalg.hpp"

#include "traceinv/errors.hpp"

#include <cmath>
#include <string>

namespace traceinv {

JitteredCholesky::JitteredCholesky(const MatrixXd& a) {
  if (a.rows() != a.cols()) fail(ErrorKind::DimensionMismatch, "Cholesky of a non-square matrix");
  if (a.rows() == 0) {
    llt_.compute(a);
    return;
  }
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  llt_.compute(a);
  if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) return;
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-12); rel *= 10.0) {
    jitter_ = rel * scale;
    MatrixXd b = a;
    b.diagonal().array() += jitter_;
    llt_.compute(b);
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) return;
  }
  fail(ErrorKind::FactorizationFailed,
       "matrix of size " + std::to_string(a.rows()) + " not positive definite after jitter 1e-6");
}

double JitteredCholesky::logdet() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

MatrixXd JitteredCholesky::inverse() const {
  return llt_.solve(MatrixXd::Identity(size(), size()));
}

BlockTridiagonalCholesky::BlockTridiagonalCholesky(const std::vector<MatrixXd>& diag,
                                                   const std::vector<MatrixXd>& sub) {
  const std::size_t n = diag.size();
  if (n == 0) fail(ErrorKind::DimensionMismatch, "block-tridiagonal matrix with no blocks");
  if (sub.size() + 1 != n) fail(ErrorKind::DimensionMismatch, "sub-diagonal block count");
  block_ = diag[0].rows();
  lower_.resize(n);
  cross_.resize(n - 1);
  for (std::size_t t = 0; t < n; ++t) {
    MatrixXd schur = diag[t];
    if (t > 0) {
      // K_t = M(t,t-1) L_{t-1}^{-T}
      MatrixXd k = lower_[t - 1]
                       .triangularView<Eigen::Lower>()
                       .solve(sub[t - 1].transpose())
                       .transpose();
      schur.noalias() -= k * k.transpose();
      cross_[t - 1] = std::move(k);
    }
    Eigen::LLT<MatrixXd> llt(schur);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
      fail(ErrorKind::SingularFactor, "block-tridiagonal Cholesky failed at block " + std::to_string(t));
    }
    lower_[t] = llt.matrixL();
  }
}

MatrixXd BlockTridiagonalCholesky::solve(const MatrixXd& b) const {
  const Index n = n_blocks();
  if (b.rows() != size()) fail(ErrorKind::DimensionMismatch, "block-tridiagonal solve rhs rows");
  MatrixXd y(b.rows(), b.cols());
  for (Index t = 0; t < n; ++t) {
    MatrixXd r = b.middleRows(t * block_, block_);
    if (t > 0) r.noalias() -= cross_[t - 1] * y.middleRows((t - 1) * block_, block_);
    y.middleRows(t * block_, block_) = lower_[t].triangularView<Eigen::Lower>().solve(r);
  }
  MatrixXd x(b.rows(), b.cols());
  for (Index t = n - 1; t >= 0; --t) {
    MatrixXd r = y.middleRows(t * block_, block_);
    if (t + 1 < n) r.noalias() -= cross_[t].transpose() * x.middleRows((t + 1) * block_, block_);
    x.middleRows(t * block_, block_) = lower_[t].transpose().triangularView<Eigen::Upper>().solve(r);
  }
  return x;
}

VectorXd BlockTridiagonalCholesky::solve_upper(const VectorXd& z) const {
  const Index n = n_blocks();
  if (z.size() != size()) fail(ErrorKind::DimensionMismatch, "block-tridiagonal solve rhs rows");
  VectorXd x(z.size());
  for (Index t = n - 1; t >= 0; --t) {
    VectorXd r = z.segment(t * block_, block_);
    if (t + 1 < n) r.noalias() -= cross_[t].transpose() * x.segment((t + 1) * block_, block_);
    x.segment(t * block_, block_) = lower_[t].transpose().triangularView<Eigen::Upper>().solve(r);
  }
  return x;
}

double BlockTridiagonalCholesky::logdet() const {
  double s = 0.0;
  for (const auto& l : lower_) s += l.diagonal().array().log().sum();
  return 2.0 * s;
}

void BlockTridiagonalCholesky::band_of_inverse(std::vector<MatrixXd>& diag,
                                               std::vector<MatrixXd>& sub) const {
  // From L' S = L^{-1} (S = M^{-1}), reading block rows of the upper part:
  //   S(t,t+1) = -L_t^{-T} K_{t+1}' S(t+1,t+1)
  //   S(t,t)   =  L_t^{-T} (L_t^{-1} - K_{t+1}' S(t+1,t))
  const Index n = n_blocks();
  diag.assign(n, MatrixXd());
  sub.assign(n > 0 ? n - 1 : 0, MatrixXd());
  const MatrixXd eye = MatrixXd::Identity(block_, block_);
  std::vector<MatrixXd> linv(n);
  for (Index t = 0; t < n; ++t) linv[t] = lower_[t].triangularView<Eigen::Lower>().solve(eye);

  diag[n - 1] = linv[n - 1].transpose() * linv[n - 1];
  for (Index t = n - 2; t >= 0; --t) {
    const auto ut = lower_[t].transpose().triangularView<Eigen::Upper>();
    MatrixXd upper = -ut.solve(cross_[t].transpose() * diag[t + 1]);  // S(t,t+1)
    sub[t] = upper.transpose();                                        // S(t+1,t)
    MatrixXd r = linv[t];
    r.noalias() -= cross_[t].transpose() * sub[t];
    diag[t] = symmetrize(ut.solve(r));
  }
}

}  // namespace traceinv
