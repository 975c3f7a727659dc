#include <cmath>
#include <limits>

#include "doctest.h"
#include "mvic/criteria.hpp"

using namespace mvic;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Instance {
  Matrix x, y;
  FitResult fit;
};

Instance random_instance(int n, int p, int q, std::uint64_t seed,
                         double coef_scale = 1.0) {
  RngStream rng(seed, 0);
  Instance inst;
  inst.x = standard_normal_matrix(n, p, rng);
  const Matrix b = coef_scale * standard_normal_matrix(p, q, rng);
  inst.y = inst.x * b + standard_normal_matrix(n, q, rng);
  inst.fit = fit_mle(inst.x, inst.y);
  return inst;
}

// A synthetic fit with the exact SigmaHat / fitted Gram the formula examples
// call for.
FitResult synthetic_fit(int n, int p, int q, const Matrix& sigma_hat,
                        const Matrix& fitted_gram) {
  FitResult fit;
  fit.dims = ModelDims{n, p, q};
  fit.Bhat = Matrix::Zero(p, q);
  fit.SigmaHat = sigma_hat;
  fit.residual_gram = static_cast<double>(n) * sigma_hat;
  fit.fitted_gram = fitted_gram;
  Eigen::LLT<Matrix> llt(sigma_hat);
  if (llt.info() == Eigen::Success) fit.sigma_hat_chol.emplace(sigma_hat);
  return fit;
}

}  // namespace

TEST_CASE("criterion names round trip") {
  for (CriterionName name :
       {CriterionName::AicKnown, CriterionName::Maic, CriterionName::Aic,
        CriterionName::Aicc, CriterionName::Maicc, CriterionName::SureVec,
        CriterionName::Johnstone, CriterionName::SureMat,
        CriterionName::Matsuda, CriterionName::Thm1}) {
    CHECK(criterion_from_string(to_string(name)) == name);
  }
  CHECK_THROWS_AS(criterion_from_string("BIC"), ValidationError);
}

TEST_CASE("known-covariance criteria") {
  SUBCASE("zero residual values") {
    // n=20, p=5, q=2, Y = X Bhat exactly, Sigma = I.
    RngStream rng(40, 0);
    const Matrix x = standard_normal_matrix(20, 5, rng);
    const Matrix b = standard_normal_matrix(5, 2, rng);
    const Matrix y = x * b;
    const FitResult fit = fit_mle(x, y);
    const SpdMatrix sigma = SpdMatrix::identity(2);
    CHECK(aic_known_sigma(x, y, fit, sigma).value ==
          doctest::Approx(93.5150826563738).epsilon(1e-10));
    CHECK(sure_mat_regression(x, y, fit, sigma) ==
          doctest::Approx(-20.0).epsilon(1e-10));
  }

  SUBCASE("modified criterion subtracts the fitted-gram trace") {
    // p=7, q=2, Sigma=I, fitted Gram = I: coefficient 2(p-2q-2)/q = 1,
    // trace = 2.
    const FitResult fit =
        synthetic_fit(20, 7, 2, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const Matrix x = Matrix::Zero(20, 7);
    const Matrix y = Matrix::Zero(20, 2);
    const SpdMatrix sigma = SpdMatrix::identity(2);
    const double base = aic_known_sigma(x, y, fit, sigma).value;
    const CriterionValue m = maic(x, y, fit, sigma);
    CHECK(m.value == doctest::Approx(base - 2.0).epsilon(1e-12));
    CHECK(m.conditions_met);  // 7 >= 2q+3
  }

  SUBCASE("correction coefficient vanishes at p = 2q+2") {
    const FitResult fit =
        synthetic_fit(20, 6, 2, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const Matrix x = Matrix::Zero(20, 6);
    const Matrix y = Matrix::Zero(20, 2);
    const SpdMatrix sigma = SpdMatrix::identity(2);
    const CriterionValue m = maic(x, y, fit, sigma);
    CHECK(m.value ==
          doctest::Approx(aic_known_sigma(x, y, fit, sigma).value)
              .epsilon(1e-12));
    CHECK_FALSE(m.conditions_met);
  }

  SUBCASE("sure identity with the known-covariance criterion") {
    for (std::uint64_t seed = 50; seed < 55; ++seed) {
      const Instance inst = random_instance(15, 4, 2, seed);
      RngStream rng(seed, 9);
      const Matrix root = standard_normal_matrix(2, 2, rng);
      const SpdMatrix sigma(root * root.transpose() +
                            0.5 * Matrix::Identity(2, 2));
      const double lhs = sure_mat_regression(inst.x, inst.y, inst.fit, sigma);
      const double rhs = aic_known_sigma(inst.x, inst.y, inst.fit, sigma).value -
                         15.0 * 2 * (kLog2Pi + 1.0) - 15.0 * sigma.log_det();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }

  SUBCASE("known-covariance criterion is unbiased for the discrepancy") {
    RngStream xrng(56, 0);
    const Matrix x = standard_normal_matrix(20, 5, xrng);
    const Matrix b = 0.5 * standard_normal_matrix(5, 2, xrng);
    const SpdMatrix sigma = SpdMatrix::identity(2);
    const RegressionTruth truth(x, b, sigma);
    const long reps = 30000;
    double acc = 0.0, acc_sq = 0.0;
    for (long r = 0; r < reps; ++r) {
      RngStream rng(56, static_cast<std::uint64_t>(r + 1));
      const Matrix y = generate_response(truth, rng);
      const FitResult fit = fit_mle(x, y);
      const double diff = aic_known_sigma(x, y, fit, sigma).value -
                          kl_discrepancy_known_sigma(truth, fit.Bhat);
      acc += diff;
      acc_sq += diff * diff;
    }
    const double mean = acc / reps;
    const double se = std::sqrt((acc_sq / reps - mean * mean) / (reps - 1.0));
    CHECK(std::abs(mean) < 3.0 * se);
  }
}

TEST_CASE("aic and corrected aic formulas") {
  SUBCASE("frozen values at unit determinant") {
    // det SigmaHat = 1 in both cases; the -2 log-likelihood carries its nq
    // term, so the values sit nq above the penalty-only arithmetic.
    const FitResult fit_a = synthetic_fit(20, 5, 2, Matrix::Identity(2, 2),
                                          Matrix::Identity(2, 2));
    CHECK(aic(fit_a, fit_a.dims).value ==
          doctest::Approx(139.5150826563738).epsilon(1e-12));

    const FitResult fit_c = synthetic_fit(30, 10, 1, Matrix::Identity(1, 1),
                                          Matrix::Identity(1, 1));
    CHECK(aicc(fit_c, fit_c.dims).value ==
          doctest::Approx(121.80297865894704).epsilon(1e-12));
  }

  SUBCASE("single response reduction") {
    const double sigma2 = 0.37;
    const FitResult fit = synthetic_fit(
        25, 4, 1, sigma2 * Matrix::Identity(1, 1), Matrix::Identity(1, 1));
    const double expected =
        25.0 * std::log(2.0 * M_PI * sigma2) + 25.0 + 2.0 * (4 + 1);
    CHECK(aic(fit, fit.dims).value ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("gap is a constant of the dimensions only") {
    const ModelDims dims{18, 5, 2};
    const double penalty = 5.0 * 2 + 2 * 3 / 2.0 * 1.0;  // pq + q(q+1)/2
    const double expected_gap =
        2.0 * penalty * (18.0 / (18 - 5 - 2 - 1) - 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const Instance inst =
          random_instance(18, 5, 2, 500 + static_cast<std::uint64_t>(trial));
      const double a = aic(inst.fit, dims).value;
      const double gap = aicc(inst.fit, dims).value - a;
      CHECK(gap > 0.0);
      // Constant up to one ulp of the criterion values themselves (the
      // shared goodness-of-fit term cancels only algebraically).
      CHECK(std::abs(gap - expected_gap) <=
            8.0 * std::numeric_limits<double>::epsilon() * std::abs(a));
    }
  }

  SUBCASE("correction vanishes as n grows") {
    const FitResult fit = synthetic_fit(1000000, 10, 1, Matrix::Identity(1, 1),
                                        Matrix::Identity(1, 1));
    const double gap =
        aicc(fit, fit.dims).value - aic(fit, fit.dims).value;
    CHECK(std::abs(gap) < 0.05);
  }

  SUBCASE("degrees-of-freedom guard") {
    const FitResult fit = synthetic_fit(8, 5, 2, Matrix::Identity(2, 2),
                                        Matrix::Identity(2, 2));
    CHECK_THROWS_AS(aicc(fit, fit.dims), DegreesOfFreedomError);
    const FitResult no_chol = synthetic_fit(20, 5, 2, Matrix::Zero(2, 2),
                                            Matrix::Identity(2, 2));
    CHECK_THROWS_AS(aic(no_chol, no_chol.dims), SingularityError);
  }
}

TEST_CASE("tuning constant upper bound") {
  SUBCASE("frozen evaluations") {
    CHECK(cbar(ModelDims{30, 10, 1}) ==
          doctest::Approx(49.09090909090909).epsilon(1e-12));
    CHECK(cbar(ModelDims{30, 10, 2}) ==
          doctest::Approx(16.134453781512605).epsilon(1e-12));
  }

  SUBCASE("agrees with the single-response closed form") {
    for (int p = 5; p <= 20; ++p) {
      for (int n = p + 3; n <= 60; n += 7) {
        const double via_general = cbar(ModelDims{n, p, 1});
        const double via_single = 4.0 * n * n * (p - 4.0) /
                                  ((n - p) * (n - p + 2.0));
        CHECK(via_general ==
              doctest::Approx(via_single).epsilon(1e-12));
      }
    }
  }

  SUBCASE("sign flips once p drops to 2q+2") {
    CHECK(cbar(ModelDims{1000, 6, 2}) < 1e-6);  // p = 2q+2: bound -> <= 0
    CHECK(cbar(ModelDims{1000, 7, 2}) > 0.0);
  }

  SUBCASE("dof guard") {
    CHECK_THROWS_AS(cbar(ModelDims{13, 10, 2}), DegreesOfFreedomError);
  }
}

TEST_CASE("modified corrected aic") {
  SUBCASE("c = 0 degenerates to the corrected criterion") {
    const Instance inst = random_instance(20, 6, 2, 60);
    const ModelDims dims{20, 6, 2};
    CHECK(maicc(inst.fit, dims, 0.0).value ==
          doctest::Approx(aicc(inst.fit, dims).value).epsilon(1e-14));
  }

  SUBCASE("unit-trace correction at the default constant") {
    // SigmaHat = I_2 and fitted Gram = 2 I_2 give tr(SigmaHat G^{-1}) = 1.
    const FitResult fit = synthetic_fit(30, 10, 2, Matrix::Identity(2, 2),
                                        2.0 * Matrix::Identity(2, 2));
    const ModelDims dims{30, 10, 2};
    const CriterionValue m = maicc(fit, dims);
    CHECK(m.c_used.has_value());
    CHECK(*m.c_used == doctest::Approx(16.134453781512605).epsilon(1e-12));
    CHECK(m.value == doctest::Approx(aicc(fit, dims).value -
                                     16.134453781512605)
                         .epsilon(1e-12));
    CHECK(m.conditions_met);
  }

  SUBCASE("never exceeds the corrected criterion for positive c") {
    for (std::uint64_t seed = 70; seed < 90; ++seed) {
      const Instance inst = random_instance(25, 8, 2, seed);
      const ModelDims dims{25, 8, 2};
      const double a = aicc(inst.fit, dims).value;
      for (double c : {0.5, 5.0, cbar(dims)}) {
        CHECK(maicc(inst.fit, dims, c).value <= a);
      }
    }
  }

  SUBCASE("condition flags track the hypothesis") {
    const Instance wide = random_instance(30, 5, 2, 91);  // p < 2q+3
    const ModelDims dims{30, 5, 2};
    CHECK(cbar(dims) < 0.0);
    const CriterionValue m = maicc(wide.fit, dims);
    CHECK_FALSE(m.conditions_met);

    const Instance ok = random_instance(30, 10, 2, 92);
    const ModelDims dims_ok{30, 10, 2};
    CHECK(maicc(ok.fit, dims_ok).conditions_met);
    CHECK_FALSE(maicc(ok.fit, dims_ok, 2.0 * cbar(dims_ok)).conditions_met);
  }
}

TEST_CASE("vector-loss estimators") {
  SUBCASE("sure with no shrinkage is the dimension") {
    Vector y(4);
    y << 1, -2, 3, 0.5;
    const auto zero_g = [](const Vector& v) { return Vector::Zero(v.size()).eval(); };
    CHECK(sure_vec(y, zero_g) == doctest::Approx(4.0).epsilon(1e-9));
  }

  SUBCASE("estimator collapsing to the origin") {
    Vector y(3);
    y << 1, 2, 2;
    const auto neg = [](const Vector& v) { return (-v).eval(); };
    CHECK(sure_vec(y, neg) ==
          doctest::Approx(y.squaredNorm() - 3.0).epsilon(1e-7));
  }

  SUBCASE("finite differences agree with the analytic divergence") {
    // James-Stein correction g(y) = -((p-2)/||y||^2) y.
    const auto js = [](const Vector& v) {
      return (-(static_cast<double>(v.size()) - 2.0) / v.squaredNorm() * v)
          .eval();
    };
    const auto js_div = [](const Vector& v) {
      const double p = static_cast<double>(v.size());
      return -(p - 2.0) * (p - 2.0) / v.squaredNorm();
    };
    RngStream rng(95, 0);
    for (int trial = 0; trial < 10; ++trial) {
      Vector y(8);
      for (int i = 0; i < 8; ++i) y(i) = rng.next_normal() + 0.5;
      CHECK(sure_vec(y, js) ==
            doctest::Approx(sure_vec(y, js, js_div)).epsilon(1e-6));
    }
  }

  SUBCASE("unbiasedness for the james-stein loss") {
    const int p = 8;
    const auto js = [](const Vector& v) {
      return (-(static_cast<double>(v.size()) - 2.0) / v.squaredNorm() * v)
          .eval();
    };
    const auto js_div = [](const Vector& v) {
      const double pp = static_cast<double>(v.size());
      return -(pp - 2.0) * (pp - 2.0) / v.squaredNorm();
    };
    Vector theta(p);
    theta << 1, 0, -1, 0.5, 0, 0, 2, 0;
    const long reps = 100000;
    double acc = 0.0, acc_sq = 0.0;
    for (long r = 0; r < reps; ++r) {
      RngStream rng(96, static_cast<std::uint64_t>(r));
      Vector y(p);
      for (int i = 0; i < p; ++i) y(i) = theta(i) + rng.next_normal();
      const Vector estimate = y + js(y);
      const double loss = (estimate - theta).squaredNorm();
      const double diff = sure_vec(y, js, js_div) - loss;
      acc += diff;
      acc_sq += diff * diff;
    }
    const double mean = acc / reps;
    const double se = std::sqrt((acc_sq / reps - mean * mean) / (reps - 1.0));
    CHECK(std::abs(mean) < 3.0 * se);
  }

  SUBCASE("inverse-norm loss estimator values and flags") {
    Vector y(8);
    y << 2, 0, 0, 0, 0, 0, 0, 0;  // ||y||^2 = 4
    const CriterionValue j = johnstone(y);
    CHECK(j.value == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(j.conditions_met);

    Vector y4 = Vector::Ones(4);
    const CriterionValue j4 = johnstone(y4);
    CHECK(j4.value == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_FALSE(j4.conditions_met);  // p >= 5 fails

    CHECK_THROWS_AS(johnstone(Vector::Zero(5)), SingularityError);
  }
}

TEST_CASE("matrix-loss estimators") {
  SUBCASE("singular-value weighted estimator") {
    Matrix y = Matrix::Zero(8, 2);
    y(0, 0) = 2.0;
    y(1, 1) = 1.0;
    const CriterionValue m = matsuda(y);
    CHECK(m.value == doctest::Approx(12.5).epsilon(1e-12));
    CHECK(m.conditions_met);  // p = 3q+2 and q >= 2

    Matrix big = Matrix::Zero(8, 2);
    big(0, 0) = 1e8;
    big(1, 1) = 1e8;
    CHECK(matsuda(big).value == doctest::Approx(16.0).epsilon(1e-10));

    Matrix thin = Matrix::Zero(7, 2);
    thin(0, 0) = 1.0;
    thin(1, 1) = 1.0;
    CHECK_FALSE(matsuda(thin).conditions_met);
  }

  SUBCASE("trace-based estimator") {
    Matrix y = Matrix::Zero(7, 2);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    const CriterionValue t = thm1_estimator(y);
    CHECK(t.value == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(t.conditions_met);
    CHECK_FALSE(thm1_estimator(Matrix::Identity(6, 2)).conditions_met);
  }

  SUBCASE("single column reduces to the vector estimator") {
    RngStream rng(97, 0);
    for (int trial = 0; trial < 100; ++trial) {
      Matrix y = standard_normal_matrix(8, 1, rng);
      const double a = thm1_estimator(y).value;
      const double b = johnstone(y.col(0)).value;
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-response scale equivariance") {
  const Instance inst = random_instance(24, 6, 1, 98);
  const ModelDims dims{24, 6, 1};
  const double alpha = 3.7;
  const FitResult scaled = fit_mle(inst.x, alpha * inst.y);

  const double shift = 24.0 * std::log(alpha * alpha);
  CHECK(aic(scaled, dims).value - aic(inst.fit, dims).value ==
        doctest::Approx(shift).epsilon(1e-10));
  CHECK(aicc(scaled, dims).value - aicc(inst.fit, dims).value ==
        doctest::Approx(shift).epsilon(1e-10));

  // The correction term sigma_hat^2 / ||X beta_hat||^2 is scale-free.
  const double corr_base =
      aicc(inst.fit, dims).value - maicc(inst.fit, dims).value;
  const double corr_scaled =
      aicc(scaled, dims).value - maicc(scaled, dims).value;
  CHECK(corr_base == doctest::Approx(corr_scaled).epsilon(1e-10));
}
