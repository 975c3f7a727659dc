#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mvic/errors.hpp"

namespace mvic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelDims {
  int n = 0;  // observations
  int p = 0;  // explanatory variables
  int q = 0;  // response variables

  void validate() const;  // n >= 1, p >= 1, q >= 1, n >= p
};

// Deterministic random stream keyed by (master_seed, stream_index).
// Same key -> bit-identical sequence; distinct keys -> statistically
// independent streams. Parallel workers each own a stream, so there is no
// shared mutable state and results do not depend on scheduling.
//
// Implementation: xoshiro256++ with its state filled by a splitmix64 chain
// keyed on both words. The stream key is injective in stream_index for a
// fixed master seed.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double next_uniform();

  // Standard normal via Box-Muller (pairs generated, second value cached).
  double next_normal();

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

 private:
  std::uint64_t state_[4];
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

// Symmetric positive definite matrix carrying its Cholesky factor.
// Construction checks symmetry (1e-12 relative) and positive definiteness
// (Cholesky success); every downstream log-det / solve reuses the factor.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  Matrix cholesky_lower() const { return llt_.matrixL(); }
  double log_det() const;

  // A^{-1} * rhs via the cached factor.
  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

  // tr(A^{-1} * rhs); rhs must be dim x dim.
  double trace_solve(const Matrix& rhs) const;

  Matrix inverse() const;

 private:
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
};

// Matrix of i.i.d. standard normal entries, filled in row-major order so the
// stream consumption is well defined.
Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                              RngStream& rng);

// Draw from the matrix-variate normal with the given mean, row covariance U
// and column covariance V (covariance of vec is V (x) U):
// mean + Lu * G * Lv^T with G i.i.d. standard normal.
Matrix sample_matrix_normal(const Matrix& mean, const SpdMatrix& row_cov,
                            const SpdMatrix& col_cov, RngStream& rng);

// Wishart draw W_q(dof, scale) via the G^T G construction with G an
// dof x q matrix-normal with identity row covariance and `scale` column
// covariance. Requires dof >= dim so that draws are a.s. nonsingular.
SpdMatrix sample_wishart(int dof, const SpdMatrix& scale, RngStream& rng);

// Singular values of z in descending order, with the full-column-rank check:
// sigma_min <= max(rows, cols) * eps * sigma_max raises SingularityError
// carrying sigma_min.
Vector checked_singular_values(const Matrix& z);

// tr((Z^T Z)^{-1}) = sum_i sigma_i(Z)^{-2}, via singular values.
double trace_inv_gram(const Matrix& z);

// tr((Z^T Z)^{-2}) = sum_i sigma_i(Z)^{-4}.
double trace_inv_gram_sq(const Matrix& z);

}  // namespace mvic
