#include "mvic/matstat.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mvic {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

void ModelDims::validate() const {
  if (n < 1 || p < 1 || q < 1) {
    throw ValidationError("model dims must satisfy n >= 1, p >= 1, q >= 1");
  }
  if (n < p) {
    std::ostringstream msg;
    msg << "model dims require n >= p, got n=" << n << ", p=" << p;
    throw ValidationError(msg.str());
  }
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index) {
  // Odd multiplier keeps the key injective in stream_index for a fixed seed.
  std::uint64_t key =
      master_seed ^ (0xD2B74407B1CE6E93ull * (stream_index + 0x632BE59BD9B4E019ull));
  for (auto& word : state_) word = splitmix64(key);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_uniform() {
  // 53-bit mantissa, offset by half an ulp to stay inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw ValidationError("SPD matrix must be square and nonempty");
  }
  if (!m_.allFinite()) {
    throw ValidationError("SPD matrix has non-finite entries");
  }
  const double scale = m_.cwiseAbs().maxCoeff();
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0)) {
    throw ValidationError("matrix is not symmetric to 1e-12 relative");
  }
  // Exact symmetry so downstream algebra cannot see the rounding skew.
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success) {
    throw SingularityError("matrix is not positive definite (Cholesky failed)",
                           0.0);
  }
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) {
  return SpdMatrix(Matrix::Identity(dim, dim));
}

double SpdMatrix::log_det() const {
  return 2.0 * Matrix(llt_.matrixL()).diagonal().array().log().sum();
}

double SpdMatrix::trace_solve(const Matrix& rhs) const {
  if (rhs.rows() != dim() || rhs.cols() != dim()) {
    throw ValidationError("trace_solve requires a dim x dim right-hand side");
  }
  return llt_.solve(rhs).trace();
}

Matrix SpdMatrix::inverse() const {
  return llt_.solve(Matrix::Identity(dim(), dim()));
}

Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                              RngStream& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      g(i, j) = rng.next_normal();
    }
  }
  return g;
}

Matrix sample_matrix_normal(const Matrix& mean, const SpdMatrix& row_cov,
                            const SpdMatrix& col_cov, RngStream& rng) {
  if (mean.rows() != row_cov.dim() || mean.cols() != col_cov.dim()) {
    throw ValidationError(
        "matrix-normal mean must be row_cov.dim x col_cov.dim");
  }
  const Matrix g = standard_normal_matrix(mean.rows(), mean.cols(), rng);
  return mean + row_cov.cholesky_lower() * g *
                    col_cov.cholesky_lower().transpose();
}

SpdMatrix sample_wishart(int dof, const SpdMatrix& scale, RngStream& rng) {
  const auto q = scale.dim();
  if (dof < q) {
    std::ostringstream msg;
    msg << "Wishart dof=" << dof << " below dimension " << q
        << " gives a.s. rank-deficient draws";
    throw DegreesOfFreedomError(msg.str());
  }
  // Rows of G are i.i.d. N_q(0, scale).
  const Matrix g =
      standard_normal_matrix(dof, q, rng) * scale.cholesky_lower().transpose();
  Matrix w = g.transpose() * g;
  w = ((w + w.transpose()) / 2.0).eval();
  return SpdMatrix(std::move(w));
}

Vector checked_singular_values(const Matrix& z) {
  Eigen::JacobiSVD<Matrix> svd(z);
  const Vector& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(z.rows(), z.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  const double smallest = sv(sv.size() - 1);
  if (z.rows() < z.cols() || smallest <= tol) {
    std::ostringstream msg;
    msg << "rank-deficient matrix: smallest singular value " << smallest
        << " below tolerance " << tol;
    throw SingularityError(msg.str(), smallest);
  }
  return sv;
}

double trace_inv_gram(const Matrix& z) {
  const Vector sv = checked_singular_values(z);
  double total = 0.0;
  for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
    total += 1.0 / (sv(i) * sv(i));
  }
  return total;
}

double trace_inv_gram_sq(const Matrix& z) {
  const Vector sv = checked_singular_values(z);
  double total = 0.0;
  for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
    const double s2 = sv(i) * sv(i);
    total += 1.0 / (s2 * s2);
  }
  return total;
}

}  // namespace mvic
