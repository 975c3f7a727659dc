#include "mvic/regression.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mvic {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

}  // namespace

RegressionTruth::RegressionTruth(Matrix x, Matrix b, SpdMatrix sigma)
    : X(std::move(x)), B(std::move(b)), Sigma(std::move(sigma)) {
  if (!X.allFinite() || !B.allFinite()) {
    throw ValidationError("design or coefficient matrix has non-finite entries");
  }
  ModelDims d{static_cast<int>(X.rows()), static_cast<int>(X.cols()),
              static_cast<int>(B.cols())};
  d.validate();
  if (B.rows() != X.cols()) {
    throw ValidationError("coefficient matrix must be p x q with p = cols(X)");
  }
  if (Sigma.dim() != B.cols()) {
    throw ValidationError("noise covariance must be q x q with q = cols(B)");
  }
  checked_singular_values(X);  // full column rank
}

ModelDims RegressionTruth::dims() const {
  return {static_cast<int>(X.rows()), static_cast<int>(X.cols()),
          static_cast<int>(B.cols())};
}

Matrix generate_response(const RegressionTruth& truth, RngStream& rng) {
  const auto n = truth.X.rows();
  const auto q = truth.B.cols();
  const Matrix noise = standard_normal_matrix(n, q, rng) *
                       truth.Sigma.cholesky_lower().transpose();
  return truth.X * truth.B + noise;
}

FitResult fit_mle(const Matrix& X, const Matrix& Y) {
  const auto n = X.rows();
  const auto p = X.cols();
  const auto q = Y.cols();
  if (Y.rows() != n) {
    std::ostringstream msg;
    msg << "response has " << Y.rows() << " rows but design has " << n;
    throw ValidationError(msg.str());
  }
  ModelDims dims{static_cast<int>(n), static_cast<int>(p),
                 static_cast<int>(q)};
  dims.validate();

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < p) {
    throw SingularityError("design matrix is rank deficient",
                           qr.matrixR().diagonal().cwiseAbs().minCoeff());
  }

  FitResult fit;
  fit.dims = dims;
  fit.Bhat = qr.solve(Y);
  const Matrix fitted = X * fit.Bhat;
  const Matrix resid = Y - fitted;
  Matrix sigma_hat = resid.transpose() * resid / static_cast<double>(n);
  fit.SigmaHat = ((sigma_hat + sigma_hat.transpose()) / 2.0).eval();
  fit.residual_gram = static_cast<double>(n) * fit.SigmaHat;
  Matrix fg = fitted.transpose() * fitted;
  fit.fitted_gram = ((fg + fg.transpose()) / 2.0).eval();

  if (n - p >= q) {
    Eigen::LLT<Matrix> llt(fit.SigmaHat);
    if (llt.info() == Eigen::Success &&
        Matrix(llt.matrixL()).diagonal().minCoeff() > 0.0) {
      fit.sigma_hat_chol.emplace(fit.SigmaHat);
    }
  }
  return fit;
}

double kl_discrepancy(const SpdMatrix& Sigma, const Matrix& X, const Matrix& B,
                      const FitResult& fit) {
  if (!fit.sigma_hat_chol) {
    throw SingularityError(
        "KL discrepancy needs a nonsingular covariance estimate "
        "(requires n - p >= q)",
        0.0);
  }
  const ModelDims d = fit.dims;
  const double n = d.n;
  const SpdMatrix& sh = *fit.sigma_hat_chol;
  const Matrix w = X * (fit.Bhat - B);
  const Matrix wgram = w.transpose() * w;
  return n * d.q * kLog2Pi + n * sh.log_det() +
         n * sh.trace_solve(Sigma.matrix()) + sh.trace_solve(wgram);
}

double kl_discrepancy(const RegressionTruth& truth, const FitResult& fit) {
  return kl_discrepancy(truth.Sigma, truth.X, truth.B, fit);
}

double kl_discrepancy_known_sigma(const SpdMatrix& Sigma, const Matrix& X,
                                  const Matrix& B, const Matrix& Bhat) {
  if (Bhat.rows() != B.rows() || Bhat.cols() != B.cols()) {
    throw ValidationError("coefficient estimate must be p x q");
  }
  const double n = static_cast<double>(X.rows());
  const double q = static_cast<double>(B.cols());
  const Matrix w = X * (Bhat - B);
  const Matrix wgram = w.transpose() * w;
  return n * q * (kLog2Pi + 1.0) + n * Sigma.log_det() +
         Sigma.trace_solve(wgram);
}

double kl_discrepancy_known_sigma(const RegressionTruth& truth,
                                  const Matrix& Bhat) {
  return kl_discrepancy_known_sigma(truth.Sigma, truth.X, truth.B, Bhat);
}

}  // namespace mvic
