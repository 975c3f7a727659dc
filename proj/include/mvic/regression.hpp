#pragma once

#include <optional>

#include "mvic/matstat.hpp"

namespace mvic {

// Ground-truth data-generating process Y = X B + E, rows of E i.i.d.
// N_q(0, Sigma).
struct RegressionTruth {
  Matrix X;          // n x p design, full column rank
  Matrix B;          // p x q coefficients
  SpdMatrix Sigma;   // q x q noise covariance

  RegressionTruth(Matrix x, Matrix b, SpdMatrix sigma);

  ModelDims dims() const;
};

// Maximum-likelihood fit of the multivariate linear model. SigmaHat is
// singular whenever n - p < q; criteria that need its inverse or log-det
// check `sigma_hat_chol` and refuse.
struct FitResult {
  Matrix Bhat;        // p x q
  Matrix SigmaHat;    // q x q, (Y - X Bhat)^T (Y - X Bhat) / n
  Matrix residual_gram;  // n * SigmaHat
  Matrix fitted_gram;    // (X Bhat)^T (X Bhat)
  ModelDims dims;
  std::optional<SpdMatrix> sigma_hat_chol;  // present iff SigmaHat is SPD
};

// Y = X B + E with a fresh noise draw from the stream.
Matrix generate_response(const RegressionTruth& truth, RngStream& rng);

// Least-squares / ML estimates via rank-revealing QR of X (the normal
// equations are never formed explicitly).
FitResult fit_mle(const Matrix& X, const Matrix& Y);

// Kullback-Leibler discrepancy of the plug-in predictive density at
// (Bhat, SigmaHat) from the truth:
//   nq log(2 pi) + n log det SigmaHat + n tr(SigmaHat^{-1} Sigma)
//     + tr(SigmaHat^{-1} (Bhat - B)^T X^T X (Bhat - B)).
double kl_discrepancy(const RegressionTruth& truth, const FitResult& fit);

// Same discrepancy when the covariance is known and only B is estimated:
//   nq log(2 pi e) + n log det Sigma
//     + tr(Sigma^{-1} (Bhat - B)^T X^T X (Bhat - B)).
double kl_discrepancy_known_sigma(const RegressionTruth& truth,
                                  const Matrix& Bhat);

// Lower-level overloads for callers that already validated the design (the
// Monte Carlo engine fits the same X distribution many times and skips the
// per-call rank check).
double kl_discrepancy(const SpdMatrix& Sigma, const Matrix& X, const Matrix& B,
                      const FitResult& fit);
double kl_discrepancy_known_sigma(const SpdMatrix& Sigma, const Matrix& X,
                                  const Matrix& B, const Matrix& Bhat);

}  // namespace mvic
