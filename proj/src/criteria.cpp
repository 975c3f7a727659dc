#include "mvic/criteria.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mvic {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_dims_match(const FitResult& fit, const ModelDims& dims) {
  if (fit.dims.n != dims.n || fit.dims.p != dims.p || fit.dims.q != dims.q) {
    throw ValidationError("criterion dims disagree with the fitted model");
  }
}

const SpdMatrix& require_sigma_hat(const FitResult& fit) {
  if (!fit.sigma_hat_chol) {
    throw SingularityError(
        "criterion needs a nonsingular covariance estimate "
        "(requires n - p >= q)",
        0.0);
  }
  return *fit.sigma_hat_chol;
}

// tr(S G^{-1}) with G solved by Cholesky rather than inverted.
double trace_against_inverse(const Matrix& S, const Matrix& gram,
                             const char* what) {
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success ||
      !(Matrix(llt.matrixL()).diagonal().minCoeff() > 0.0)) {
    throw SingularityError(std::string(what) + " is singular", 0.0);
  }
  return llt.solve(S).trace();
}

void require_known_sigma_inputs(const Matrix& X, const Matrix& Y,
                                const FitResult& fit, const SpdMatrix& Sigma) {
  if (X.rows() != fit.dims.n || X.cols() != fit.dims.p ||
      Y.rows() != fit.dims.n || Y.cols() != fit.dims.q ||
      Sigma.dim() != fit.dims.q) {
    throw ValidationError("known-covariance criterion inputs disagree in shape");
  }
}

}  // namespace

std::string to_string(CriterionName name) {
  switch (name) {
    case CriterionName::AicKnown: return "AIC_KNOWN";
    case CriterionName::Maic: return "MAIC";
    case CriterionName::Aic: return "AIC";
    case CriterionName::Aicc: return "AICC";
    case CriterionName::Maicc: return "MAICC";
    case CriterionName::SureVec: return "SURE_VEC";
    case CriterionName::Johnstone: return "JOHNSTONE";
    case CriterionName::SureMat: return "SURE_MAT";
    case CriterionName::Matsuda: return "MATSUDA";
    case CriterionName::Thm1: return "THM1";
  }
  throw ValidationError("unknown criterion enum value");
}

CriterionName criterion_from_string(const std::string& name) {
  if (name == "AIC_KNOWN") return CriterionName::AicKnown;
  if (name == "MAIC") return CriterionName::Maic;
  if (name == "AIC") return CriterionName::Aic;
  if (name == "AICC") return CriterionName::Aicc;
  if (name == "MAICC") return CriterionName::Maicc;
  if (name == "SURE_VEC") return CriterionName::SureVec;
  if (name == "JOHNSTONE") return CriterionName::Johnstone;
  if (name == "SURE_MAT") return CriterionName::SureMat;
  if (name == "MATSUDA") return CriterionName::Matsuda;
  if (name == "THM1") return CriterionName::Thm1;
  throw ValidationError("unknown criterion name: " + name);
}

CriterionValue aic_known_sigma(const Matrix& X, const Matrix& Y,
                               const FitResult& fit, const SpdMatrix& Sigma) {
  require_known_sigma_inputs(X, Y, fit, Sigma);
  const double n = fit.dims.n;
  const double pq = static_cast<double>(fit.dims.p) * fit.dims.q;
  CriterionValue out;
  out.name = CriterionName::AicKnown;
  out.value = n * fit.dims.q * kLog2Pi + n * Sigma.log_det() +
              Sigma.trace_solve(fit.residual_gram) + 2.0 * pq;
  out.condition = "none";
  return out;
}

CriterionValue maic(const Matrix& X, const Matrix& Y, const FitResult& fit,
                    const SpdMatrix& Sigma) {
  CriterionValue out = aic_known_sigma(X, Y, fit, Sigma);
  const int p = fit.dims.p;
  const int q = fit.dims.q;
  const double coeff = 2.0 * (p - 2 * q - 2) / static_cast<double>(q);
  out.name = CriterionName::Maic;
  out.value -= coeff * trace_against_inverse(Sigma.matrix(), fit.fitted_gram,
                                             "fitted Gram matrix");
  out.conditions_met = p >= 2 * q + 3;
  out.condition = "p >= 2q+3";
  return out;
}

double sure_mat_regression(const Matrix& X, const Matrix& Y,
                           const FitResult& fit, const SpdMatrix& Sigma) {
  require_known_sigma_inputs(X, Y, fit, Sigma);
  const double n = fit.dims.n;
  const double p = fit.dims.p;
  const double q = fit.dims.q;
  return Sigma.trace_solve(fit.residual_gram) + (2.0 * p - n) * q;
}

CriterionValue aic(const FitResult& fit, const ModelDims& dims) {
  require_dims_match(fit, dims);
  const SpdMatrix& sh = require_sigma_hat(fit);
  const double n = dims.n;
  const double q = dims.q;
  const double param_count = dims.p * q + q * (q + 1) / 2.0;
  CriterionValue out;
  out.name = CriterionName::Aic;
  out.value = n * q * kLog2Pi + n * q + n * sh.log_det() + 2.0 * param_count;
  out.condition = "none";
  return out;
}

CriterionValue aicc(const FitResult& fit, const ModelDims& dims) {
  require_dims_match(fit, dims);
  const SpdMatrix& sh = require_sigma_hat(fit);
  const int dof = dims.n - dims.p - dims.q - 1;
  if (dof <= 0) {
    std::ostringstream msg;
    msg << "corrected AIC needs n - p - q - 1 > 0, got " << dof;
    throw DegreesOfFreedomError(msg.str());
  }
  const double n = dims.n;
  const double q = dims.q;
  CriterionValue out;
  out.name = CriterionName::Aicc;
  out.value = n * q * kLog2Pi + n * sh.log_det() +
              n * q * (n + dims.p) / static_cast<double>(dof);
  out.condition = "n-p-q-1 > 0";
  return out;
}

double cbar(const ModelDims& dims) {
  const double n = dims.n;
  const double p = dims.p;
  const double q = dims.q;
  const double dof = n - p - q - 1.0;
  if (dof <= 0.0) {
    throw DegreesOfFreedomError("cbar needs n - p - q - 1 > 0");
  }
  return 4.0 * n * n / ((n - p) * (q * (n - p) + 2.0)) *
         (p - 2.0 * q - 2.0 - (q * q + q - 2.0) / dof);
}

CriterionValue maicc(const FitResult& fit, const ModelDims& dims,
                     std::optional<double> c) {
  CriterionValue out = aicc(fit, dims);
  const double bound = cbar(dims);
  const double c_used = c.value_or(bound);
  out.name = CriterionName::Maicc;
  out.value -= c_used * trace_against_inverse(fit.SigmaHat, fit.fitted_gram,
                                              "fitted Gram matrix");
  out.c_used = c_used;
  out.conditions_met = bound > 0.0 && c_used > 0.0 && c_used <= bound;
  out.condition = "n-p-q-1 > 0, cbar > 0, c in (0, cbar]";
  return out;
}

double sure_vec(const Vector& y, const std::function<Vector(const Vector&)>& g,
                const std::function<double(const Vector&)>& div_g) {
  const auto p = y.size();
  const Vector gy = g(y);
  if (gy.size() != p) {
    throw ValidationError("g(y) must have the same dimension as y");
  }
  double divergence;
  if (div_g) {
    divergence = div_g(y);
  } else {
    const double root_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    divergence = 0.0;
    Vector probe = y;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double h = root_eps * (1.0 + std::abs(y(i)));
      probe(i) = y(i) + h;
      const double forward = g(probe)(i);
      probe(i) = y(i) - h;
      const double backward = g(probe)(i);
      probe(i) = y(i);
      divergence += (forward - backward) / (2.0 * h);
    }
  }
  return static_cast<double>(p) + 2.0 * divergence + gy.squaredNorm();
}

CriterionValue johnstone(const Vector& y) {
  const double p = static_cast<double>(y.size());
  const double norm2 = y.squaredNorm();
  if (norm2 <= 0.0) {
    throw SingularityError("loss estimator undefined at the zero vector", 0.0);
  }
  CriterionValue out;
  out.name = CriterionName::Johnstone;
  out.value = p - 2.0 * (p - 4.0) / norm2;
  out.conditions_met = y.size() >= 5;
  out.condition = "p >= 5";
  return out;
}

CriterionValue matsuda(const Matrix& Y) {
  const int p = static_cast<int>(Y.rows());
  const int q = static_cast<int>(Y.cols());
  const Vector sv = checked_singular_values(Y);
  double correction = 0.0;
  for (int i = 1; i <= q; ++i) {
    const double ci = 4.0 * (p - q - 2 * i - 1) / static_cast<double>(q);
    correction += ci / (sv(i - 1) * sv(i - 1));
  }
  CriterionValue out;
  out.name = CriterionName::Matsuda;
  out.value = static_cast<double>(p) * q - correction;
  out.conditions_met = p >= 3 * q + 2 && q >= 2;
  out.condition = "p >= 3q+2 and q >= 2";
  return out;
}

CriterionValue thm1_estimator(const Matrix& Y) {
  const int p = static_cast<int>(Y.rows());
  const int q = static_cast<int>(Y.cols());
  CriterionValue out;
  out.name = CriterionName::Thm1;
  out.value = static_cast<double>(p) * q -
              2.0 * (p - 2 * q - 2) / static_cast<double>(q) *
                  trace_inv_gram(Y);
  out.conditions_met = p >= 2 * q + 3;
  out.condition = "p >= 2q+3";
  return out;
}

}  // namespace mvic
