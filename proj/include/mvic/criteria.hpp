#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mvic/regression.hpp"

namespace mvic {

enum class CriterionName {
  AicKnown,
  Maic,
  Aic,
  Aicc,
  Maicc,
  SureVec,
  Johnstone,
  SureMat,
  Matsuda,
  Thm1,
};

std::string to_string(CriterionName name);
CriterionName criterion_from_string(const std::string& name);

// A scalar discrepancy/loss estimate with its validity metadata. When the
// dominance hypotheses of the underlying result fail, the value is still
// computed and `conditions_met` is false; `condition` spells out the
// hypothesis that was checked.
struct CriterionValue {
  CriterionName name;
  double value = 0.0;
  std::optional<double> c_used;
  bool conditions_met = true;
  std::string condition;
};

// ---- Known covariance -------------------------------------------------

// AIC for the model with known Sigma:
//   nq log(2 pi) + n log det Sigma + tr(Sigma^{-1} R) + 2pq,
// with R the residual Gram matrix. Exactly unbiased for the known-Sigma
// KL discrepancy.
CriterionValue aic_known_sigma(const Matrix& X, const Matrix& Y,
                               const FitResult& fit, const SpdMatrix& Sigma);

// Modified AIC: subtracts (2(p-2q-2)/q) tr(Sigma ((X Bhat)^T (X Bhat))^{-1});
// dominates AIC when p >= 2q+3.
CriterionValue maic(const Matrix& X, const Matrix& Y, const FitResult& fit,
                    const SpdMatrix& Sigma);

// SURE for the fitted-mean estimator under the Sigma^{-1}-weighted quadratic
// loss: tr(Sigma^{-1} R) + (2p - n) q. Equals the known-Sigma AIC minus
// nq log(2 pi e) + n log det Sigma.
double sure_mat_regression(const Matrix& X, const Matrix& Y,
                           const FitResult& fit, const SpdMatrix& Sigma);

// ---- Unknown covariance ------------------------------------------------

// AIC = -2 log-likelihood at the MLE + 2 (pq + q(q+1)/2)
//     = nq log(2 pi) + nq + n log det SigmaHat + 2 (pq + q(q+1)/2).
CriterionValue aic(const FitResult& fit, const ModelDims& dims);

// Bias-corrected AIC, exactly unbiased for the KL discrepancy:
//   nq log(2 pi) + n log det SigmaHat + nq(n+p)/(n-p-q-1).
CriterionValue aicc(const FitResult& fit, const ModelDims& dims);

// Upper bound for the MAICc tuning constant:
//   cbar = 4n^2 / ((n-p)(q(n-p)+2)) * (p - 2q - 2 - (q^2+q-2)/(n-p-q-1)).
// May be <= 0; callers check positivity.
double cbar(const ModelDims& dims);

// MAICc = AICc - c tr(SigmaHat ((X Bhat)^T (X Bhat))^{-1}).
// Default c = cbar(dims). Dominates AICc for c in (0, cbar] when
// n-p-q-1 > 0 and cbar > 0.
CriterionValue maicc(const FitResult& fit, const ModelDims& dims,
                     std::optional<double> c = std::nullopt);

// ---- Mean estimation (identity covariance) ------------------------------

// SURE for an estimator y + g(y) of a p-variate normal mean under quadratic
// loss: p + 2 div g(y) + ||g(y)||^2. If no divergence is supplied it is
// estimated by central differences with step eps^(1/3) (1 + |y_i|).
double sure_vec(const Vector& y, const std::function<Vector(const Vector&)>& g,
                const std::function<double(const Vector&)>& div_g = nullptr);

// Loss estimator p - 2(p-4) / ||y||^2 for the MLE of a normal mean vector;
// dominates SURE (= p) when p >= 5.
CriterionValue johnstone(const Vector& y);

// Loss estimator pq - sum_i c_i sigma_i(Y)^{-2} with c_i = 4(p-q-2i-1)/q
// (singular values sorted descending); dominates SURE (= pq) when
// p >= 3q+2 and q >= 2.
CriterionValue matsuda(const Matrix& Y);

// Loss estimator pq - (2(p-2q-2)/q) tr((Y^T Y)^{-1}); dominates SURE (= pq)
// when p >= 2q+3, and reduces to `johnstone` at q = 1.
CriterionValue thm1_estimator(const Matrix& Y);

}  // namespace mvic
