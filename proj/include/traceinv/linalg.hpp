#pragma once

#include <Eigen/Dense>

#include <vector>

namespace traceinv {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

/// Cholesky factor of a symmetric matrix, with diagonal jitter escalated
/// from 1e-10 to 1e-6 times the largest diagonal entry when the plain
/// factorization fails. Throws FactorizationFailed past the last level.
class JitteredCholesky {
 public:
  JitteredCholesky() = default;
  explicit JitteredCholesky(const MatrixXd& a);

  Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }
  MatrixXd matrix_l() const { return llt_.matrixL(); }
  const Eigen::LLT<MatrixXd>& llt() const { return llt_; }

  template <typename Rhs>
  MatrixXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.solve(b);
  }
  double logdet() const;
  MatrixXd inverse() const;

 private:
  Eigen::LLT<MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// Cholesky factorization M = L L' of a symmetric positive-definite
/// block-tridiagonal matrix with `n_blocks` square blocks of size `block`.
///
/// L is block lower-bidiagonal: diagonal blocks L_t (lower triangular) and
/// sub-diagonal blocks K_t = L(t, t-1). Vectors are stacked block-major,
/// entry (t, i) at position t * block + i.
class BlockTridiagonalCholesky {
 public:
  BlockTridiagonalCholesky() = default;

  /// `diag[t]` = M(t,t); `sub[t]` = M(t+1,t) for t = 0..n-2.
  BlockTridiagonalCholesky(const std::vector<MatrixXd>& diag, const std::vector<MatrixXd>& sub);

  Index n_blocks() const { return static_cast<Index>(lower_.size()); }
  Index block_size() const { return block_; }
  Index size() const { return n_blocks() * block_; }

  /// M^{-1} B for a stacked right-hand side (any number of columns).
  MatrixXd solve(const MatrixXd& b) const;
  /// L^{-T} z; with z standard normal this draws from N(0, M^{-1}).
  VectorXd solve_upper(const VectorXd& z) const;
  double logdet() const;

  /// Blocks of M^{-1} on the tridiagonal band: `diag[t]` = (M^{-1})(t,t),
  /// `sub[t]` = (M^{-1})(t+1,t).
  void band_of_inverse(std::vector<MatrixXd>& diag, std::vector<MatrixXd>& sub) const;

 private:
  Index block_ = 0;
  std::vector<MatrixXd> lower_;  // L_t, lower triangular
  std::vector<MatrixXd> cross_;  // K_t for t = 1..n-1 (stored at t-1)
};

/// Symmetric part (A + A') / 2.
inline MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace traceinv
