#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvic/mcengine.hpp"
#include "mvic/verify.hpp"

namespace py = pybind11;

namespace {

mvic::CriterionValue maicc_wrap(const mvic::FitResult& fit,
                                std::optional<double> c) {
  return mvic::maicc(fit, fit.dims, c);
}

py::dict report_to_dict(const mvic::verify::IdentityCheckReport& r) {
  py::dict d;
  d["identity"] = mvic::verify::to_string(r.id);
  d["config"] = r.config;
  d["statistic_kind"] = r.statistic_kind;
  d["statistic"] = r.statistic;
  d["threshold"] = r.threshold;
  d["negative_control"] = r.negative_control;
  d["passed"] = r.passed;
  return d;
}

}  // namespace

PYBIND11_MODULE(mvic, m) {
  m.doc() =
      "Loss estimation for multivariate linear regression: exact KL "
      "discrepancy, AIC/AICc/MAICc and shrinkage-improved loss estimators, "
      "seeded Monte Carlo comparison experiments, and numerical identity "
      "checks.";

  py::register_exception<mvic::ValidationError>(m, "ValidationError",
                                                PyExc_ValueError);
  py::register_exception<mvic::NumericError>(m, "NumericError",
                                             PyExc_ArithmeticError);

  py::class_<mvic::ModelDims>(m, "ModelDims")
      .def(py::init([](int n, int p, int q) {
             mvic::ModelDims d{n, p, q};
             d.validate();
             return d;
           }),
           py::arg("n"), py::arg("p"), py::arg("q"))
      .def_readonly("n", &mvic::ModelDims::n)
      .def_readonly("p", &mvic::ModelDims::p)
      .def_readonly("q", &mvic::ModelDims::q);

  py::class_<mvic::CriterionValue>(m, "CriterionValue")
      .def_property_readonly(
          "name",
          [](const mvic::CriterionValue& v) { return to_string(v.name); })
      .def_readonly("value", &mvic::CriterionValue::value)
      .def_readonly("c_used", &mvic::CriterionValue::c_used)
      .def_readonly("conditions_met", &mvic::CriterionValue::conditions_met)
      .def_readonly("condition", &mvic::CriterionValue::condition)
      .def("__repr__", [](const mvic::CriterionValue& v) {
        return "<CriterionValue " + to_string(v.name) + "=" +
               std::to_string(v.value) + ">";
      });

  py::class_<mvic::FitResult>(m, "FitResult")
      .def_readonly("B_hat", &mvic::FitResult::Bhat)
      .def_readonly("Sigma_hat", &mvic::FitResult::SigmaHat)
      .def_readonly("residual_gram", &mvic::FitResult::residual_gram)
      .def_readonly("fitted_gram", &mvic::FitResult::fitted_gram)
      .def_readonly("dims", &mvic::FitResult::dims)
      .def_property_readonly("sigma_hat_spd", [](const mvic::FitResult& f) {
        return f.sigma_hat_chol.has_value();
      });

  m.def("fit_mle", &mvic::fit_mle, py::arg("X"), py::arg("Y"),
        "Maximum-likelihood fit of Y = X B + E via QR decomposition.");

  m.def(
      "kl_discrepancy",
      [](const mvic::Matrix& X, const mvic::Matrix& B,
         const mvic::Matrix& Sigma, const mvic::FitResult& fit) {
        return mvic::kl_discrepancy(mvic::SpdMatrix(Sigma), X, B, fit);
      },
      py::arg("X"), py::arg("B"), py::arg("Sigma"), py::arg("fit"),
      "Exact KL discrepancy of the fitted plug-in density from the truth.");

  m.def(
      "kl_discrepancy_known_sigma",
      [](const mvic::Matrix& X, const mvic::Matrix& B,
         const mvic::Matrix& Sigma, const mvic::Matrix& Bhat) {
        return mvic::kl_discrepancy_known_sigma(mvic::SpdMatrix(Sigma), X, B,
                                                Bhat);
      },
      py::arg("X"), py::arg("B"), py::arg("Sigma"), py::arg("B_hat"));

  m.def(
      "generate_response",
      [](const mvic::Matrix& X, const mvic::Matrix& B,
         const mvic::Matrix& Sigma, std::uint64_t seed, std::uint64_t stream) {
        mvic::RngStream rng(seed, stream);
        const mvic::RegressionTruth truth(X, B, mvic::SpdMatrix(Sigma));
        return mvic::generate_response(truth, rng);
      },
      py::arg("X"), py::arg("B"), py::arg("Sigma"), py::arg("seed"),
      py::arg("stream") = 0,
      "Draw Y = X B + E with rows of E i.i.d. N_q(0, Sigma).");

  m.def("aic", [](const mvic::FitResult& f) { return mvic::aic(f, f.dims); });
  m.def("aicc",
        [](const mvic::FitResult& f) { return mvic::aicc(f, f.dims); });
  m.def("maicc", &maicc_wrap, py::arg("fit"), py::arg("c") = std::nullopt,
        "MAICc; c defaults to cbar at the fitted dims.");
  m.def(
      "cbar",
      [](int n, int p, int q) { return mvic::cbar(mvic::ModelDims{n, p, q}); },
      py::arg("n"), py::arg("p"), py::arg("q"));
  m.def(
      "aic_known_sigma",
      [](const mvic::Matrix& X, const mvic::Matrix& Y,
         const mvic::FitResult& fit, const mvic::Matrix& Sigma) {
        return mvic::aic_known_sigma(X, Y, fit, mvic::SpdMatrix(Sigma));
      },
      py::arg("X"), py::arg("Y"), py::arg("fit"), py::arg("Sigma"));
  m.def(
      "maic",
      [](const mvic::Matrix& X, const mvic::Matrix& Y,
         const mvic::FitResult& fit, const mvic::Matrix& Sigma) {
        return mvic::maic(X, Y, fit, mvic::SpdMatrix(Sigma));
      },
      py::arg("X"), py::arg("Y"), py::arg("fit"), py::arg("Sigma"));
  m.def(
      "sure_mat_regression",
      [](const mvic::Matrix& X, const mvic::Matrix& Y,
         const mvic::FitResult& fit, const mvic::Matrix& Sigma) {
        return mvic::sure_mat_regression(X, Y, fit, mvic::SpdMatrix(Sigma));
      },
      py::arg("X"), py::arg("Y"), py::arg("fit"), py::arg("Sigma"));

  m.def("johnstone", &mvic::johnstone, py::arg("y"));
  m.def("matsuda", &mvic::matsuda, py::arg("Y"));
  m.def("thm1_estimator", &mvic::thm1_estimator, py::arg("Y"));
  m.def(
      "sure_vec",
      [](const mvic::Vector& y, const std::function<mvic::Vector(
                                    const mvic::Vector&)>& g) {
        return mvic::sure_vec(y, g);
      },
      py::arg("y"), py::arg("g"),
      "SURE with the divergence estimated by central differences.");

  m.def("trace_inv_gram", &mvic::trace_inv_gram, py::arg("Z"));
  m.def("trace_inv_gram_sq", &mvic::trace_inv_gram_sq, py::arg("Z"));
  m.def(
      "sample_wishart",
      [](int dof, const mvic::Matrix& scale, std::uint64_t seed,
         std::uint64_t stream) {
        mvic::RngStream rng(seed, stream);
        return mvic::sample_wishart(dof, mvic::SpdMatrix(scale), rng).matrix();
      },
      py::arg("dof"), py::arg("scale"), py::arg("seed"), py::arg("stream") = 0);
  m.def(
      "sample_matrix_normal",
      [](const mvic::Matrix& mean, const mvic::Matrix& row_cov,
         const mvic::Matrix& col_cov, std::uint64_t seed,
         std::uint64_t stream) {
        mvic::RngStream rng(seed, stream);
        return mvic::sample_matrix_normal(mean, mvic::SpdMatrix(row_cov),
                                          mvic::SpdMatrix(col_cov), rng);
      },
      py::arg("mean"), py::arg("row_cov"), py::arg("col_cov"), py::arg("seed"),
      py::arg("stream") = 0);

  m.def(
      "run_experiment",
      [](const std::string& spec_json, int threads) {
        const auto spec = mvic::ExperimentSpec::from_json_string(spec_json);
        return mvic::mc_summary_csv(mvic::run_mse_experiment(spec, threads));
      },
      py::arg("spec_json"), py::arg("threads") = 0,
      "Run an MSE-comparison experiment from a JSON spec; returns the "
      "long-form CSV.");
  m.def(
      "improvement_grid",
      [](const std::string& spec_json, int threads) {
        const auto spec = mvic::ExperimentSpec::from_json_string(spec_json);
        return mvic::improvement_grid_csv(
            mvic::run_mse_experiment(spec, threads));
      },
      py::arg("spec_json"), py::arg("threads") = 0,
      "Run a sweep experiment; returns the wide per-point CSV.");
  m.def(
      "variable_selection",
      [](const std::string& spec_json, int threads) {
        const auto spec = mvic::ExperimentSpec::from_json_string(spec_json);
        return mvic::selection_table_csv(
            mvic::run_selection_experiment(spec, {}, threads));
      },
      py::arg("spec_json"), py::arg("threads") = 0,
      "Run an order-selection experiment; returns the frequency-table CSV.");

  m.def(
      "verify_battery",
      [](long reps, long negative_reps, std::uint64_t seed,
         bool negative_controls) {
        mvic::verify::BatteryOptions opt;
        opt.mc_reps = reps;
        opt.negative_reps = negative_reps;
        opt.seed = seed;
        opt.include_negative_controls = negative_controls;
        const auto reports = mvic::verify::run_default_battery(opt);
        py::list rows;
        for (const auto& r : reports) rows.append(report_to_dict(r));
        return py::make_tuple(mvic::verify::battery_ok(reports), rows);
      },
      py::arg("reps") = 100000, py::arg("negative_reps") = 1000000,
      py::arg("seed") = 0x5eedf00dULL, py::arg("negative_controls") = true,
      "Run the identity battery; returns (all_ok, row dicts).");
}
