// Command-line frontend: model fitting and criteria on CSV data, seeded
// Monte Carlo comparison grids, order-selection studies, and the identity
// verification battery.
//
// Exit codes: 0 success, 2 validation failure, 3 numeric failure
// (singularity / degrees of freedom), 4 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "mvic/csv.hpp"
#include "mvic/mcengine.hpp"
#include "mvic/verify.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerification = 4;

struct CommonSpecArgs {
  std::string spec_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> reps;
  int threads = 0;
};

void add_spec_options(CLI::App* cmd, CommonSpecArgs& args) {
  cmd->add_option("--spec", args.spec_path, "experiment spec (JSON)")
      ->required();
  cmd->add_option("--out", args.out_path,
                  "output CSV path (default: stdout)");
  cmd->add_option("--seed", args.seed, "override the spec's master seed");
  cmd->add_option("--reps", args.reps, "override the spec's replication count");
  cmd->add_option("--threads", args.threads,
                  "worker threads (0 = hardware count)");
}

mvic::ExperimentSpec load_spec(const CommonSpecArgs& args) {
  mvic::ExperimentSpec spec =
      mvic::ExperimentSpec::from_json_file(args.spec_path);
  if (args.seed) spec.seed = *args.seed;
  if (args.reps) {
    spec.reps = *args.reps;
    spec.validate();
  }
  return spec;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw mvic::ValidationError("cannot open output file: " + out_path);
  }
  out << text;
}

std::string criteria_csv(const mvic::FitResult& fit) {
  using mvic::format_double;
  const mvic::ModelDims d = fit.dims;
  std::ostringstream out;
  out << "criterion,value,c,conditions_met,condition\n";
  const auto row = [&](const mvic::CriterionValue& cv) {
    out << to_string(cv.name) << ',' << format_double(cv.value) << ',';
    if (cv.c_used) out << format_double(*cv.c_used);
    out << ',' << (cv.conditions_met ? "true" : "false") << ',' << cv.condition
        << '\n';
  };
  const auto unavailable = [&](const char* name, const std::string& why) {
    out << name << ",,,false," << why << '\n';
  };
  if (fit.sigma_hat_chol) {
    row(mvic::aic(fit, d));
  } else {
    unavailable("AIC", "covariance estimate singular (n-p < q)");
  }
  const bool dof_ok = d.n - d.p - d.q - 1 > 0;
  if (fit.sigma_hat_chol && dof_ok) {
    row(mvic::aicc(fit, d));
    row(mvic::maicc(fit, d));
  } else {
    const std::string why = !dof_ok ? "needs n-p-q-1 > 0"
                                    : "covariance estimate singular (n-p < q)";
    unavailable("AICC", why);
    unavailable("MAICC", why);
  }
  return out.str();
}

int cmd_fit(const std::string& design_path, const std::string& response_path,
            bool header, const std::string& out_path, bool estimates) {
  const mvic::Matrix x = mvic::load_matrix_csv(design_path, header);
  const mvic::Matrix y = mvic::load_matrix_csv(response_path, header);
  const mvic::FitResult fit = mvic::fit_mle(x, y);
  std::ostringstream out;
  if (estimates) {
    out << "# B_hat (" << fit.Bhat.rows() << " x " << fit.Bhat.cols() << ")\n";
    mvic::write_matrix_csv(out, fit.Bhat);
    out << "# Sigma_hat (" << fit.SigmaHat.rows() << " x "
        << fit.SigmaHat.cols() << ")\n";
    mvic::write_matrix_csv(out, fit.SigmaHat);
  }
  out << criteria_csv(fit);
  emit(out.str(), out_path);
  return 0;
}

int cmd_verify(long reps, long negative_reps, std::uint64_t seed,
               bool negative_controls, const std::string& out_path) {
  mvic::verify::BatteryOptions opt;
  opt.mc_reps = reps;
  opt.negative_reps = negative_reps;
  opt.seed = seed;
  opt.include_negative_controls = negative_controls;
  const auto reports = mvic::verify::run_default_battery(opt);

  std::ostringstream out;
  out << "identity,config,statistic_kind,statistic,threshold,negative_control,"
         "pass\n";
  for (const auto& r : reports) {
    out << to_string(r.id) << ",\"" << r.config << "\"," << r.statistic_kind
        << ',' << mvic::format_double(r.statistic) << ','
        << mvic::format_double(r.threshold) << ','
        << (r.negative_control ? "true" : "false") << ','
        << (r.passed ? "PASS" : "FAIL") << '\n';
  }
  emit(out.str(), out_path);
  return mvic::verify::battery_ok(reports) ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Loss estimation toolkit for multivariate linear regression: exact "
      "KL-discrepancy evaluation, information criteria (AIC, AICc, MAICc and "
      "shrinkage-improved variants), Monte Carlo comparison grids, and a "
      "numerical identity verification battery."};
  app.require_subcommand(1);

  // fit / criteria ---------------------------------------------------------
  std::string design_path, response_path, fit_out;
  bool csv_header = false;
  auto* fit_cmd =
      app.add_subcommand("fit", "fit a model from CSV data and report "
                                "estimates plus all applicable criteria");
  fit_cmd->add_option("--design", design_path, "design matrix CSV (n x p)")
      ->required();
  fit_cmd
      ->add_option("--response", response_path, "response matrix CSV (n x q)")
      ->required();
  fit_cmd->add_flag("--header", csv_header, "CSV files carry a header row");
  fit_cmd->add_option("--out", fit_out, "output path (default: stdout)");

  auto* crit_cmd = app.add_subcommand(
      "criteria", "criteria table only, from the same CSV inputs");
  crit_cmd->add_option("--design", design_path, "design matrix CSV (n x p)")
      ->required();
  crit_cmd
      ->add_option("--response", response_path, "response matrix CSV (n x q)")
      ->required();
  crit_cmd->add_flag("--header", csv_header, "CSV files carry a header row");
  crit_cmd->add_option("--out", fit_out, "output path (default: stdout)");

  // mc-mse / figure / var-select --------------------------------------------
  CommonSpecArgs mc_args, fig_args, sel_args;
  auto* mc_cmd = app.add_subcommand(
      "mc-mse", "run an MSE-comparison experiment, full per-estimator stats");
  add_spec_options(mc_cmd, mc_args);

  auto* fig_cmd = app.add_subcommand(
      "figure", "run a sweep experiment and emit one CSV row per grid point");
  add_spec_options(fig_cmd, fig_args);

  auto* sel_cmd = app.add_subcommand(
      "var-select", "nested-submodel order selection frequencies");
  add_spec_options(sel_cmd, sel_args);

  // verify -------------------------------------------------------------------
  long verify_reps = 100000;
  long verify_negative_reps = 1000000;
  std::uint64_t verify_seed = 0x5eedf00dULL;
  std::string verify_battery = "default";
  std::string verify_out;
  bool skip_negative = false;
  auto* verify_cmd = app.add_subcommand(
      "verify", "numerical checks of every derivative and moment identity");
  verify_cmd->add_option("--battery", verify_battery,
                         "battery name (only 'default' exists)");
  verify_cmd->add_option("--reps", verify_reps, "MC replications per check");
  verify_cmd->add_option("--negative-reps", verify_negative_reps,
                         "MC replications per negative control");
  verify_cmd->add_option("--seed", verify_seed, "master seed");
  verify_cmd->add_flag("--skip-negative-controls", skip_negative,
                       "run only the positive checks");
  verify_cmd->add_option("--out", verify_out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (fit_cmd->parsed()) {
      return cmd_fit(design_path, response_path, csv_header, fit_out, true);
    }
    if (crit_cmd->parsed()) {
      return cmd_fit(design_path, response_path, csv_header, fit_out, false);
    }
    if (mc_cmd->parsed()) {
      const auto spec = load_spec(mc_args);
      const auto summary = mvic::run_mse_experiment(spec, mc_args.threads);
      emit(mvic::mc_summary_csv(summary), mc_args.out_path);
      return 0;
    }
    if (fig_cmd->parsed()) {
      const auto spec = load_spec(fig_args);
      if (spec.sweep_axis.empty()) {
        throw mvic::ValidationError("figure specs must designate a sweep_axis");
      }
      const auto summary = mvic::run_mse_experiment(spec, fig_args.threads);
      emit(mvic::improvement_grid_csv(summary), fig_args.out_path);
      return 0;
    }
    if (sel_cmd->parsed()) {
      const auto spec = load_spec(sel_args);
      const auto table =
          mvic::run_selection_experiment(spec, {}, sel_args.threads);
      emit(mvic::selection_table_csv(table), sel_args.out_path);
      return 0;
    }
    if (verify_cmd->parsed()) {
      if (verify_battery != "default") {
        throw mvic::ValidationError("unknown battery: " + verify_battery);
      }
      return cmd_verify(verify_reps, verify_negative_reps, verify_seed,
                        !skip_negative, verify_out);
    }
  } catch (const mvic::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mvic::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
