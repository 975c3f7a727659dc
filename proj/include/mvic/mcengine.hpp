#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvic/criteria.hpp"

namespace mvic {

// Which sampling model a Monte Carlo study runs under.
//  - Regression:           Y = XB + E, unknown covariance; estimators of the
//                          KL discrepancy (AIC, AICC, MAICC).
//  - RegressionKnownSigma: same data, Sigma treated as known (AIC_KNOWN,
//                          MAIC, SURE_MAT).
//  - MeanMatrix:           Y ~ N_{p,q}(M, I, I), Frobenius loss of the MLE
//                          (SURE_MAT, MATSUDA, THM1; JOHNSTONE/SURE_VEC at
//                          q = 1).
//  - Selection:            nested-submodel order selection by criterion
//                          minimization.
enum class ExperimentModel { Regression, RegressionKnownSigma, MeanMatrix, Selection };

std::string to_string(ExperimentModel model);

struct SigmaSpec {
  enum class Kind { Identity, ScaledIdentity, UnitCorrelation, Explicit };
  Kind kind = Kind::Identity;
  double value = 1.0;  // scale, or off-diagonal correlation r
  Matrix entries;      // Kind::Explicit only

  SpdMatrix build(int q) const;
};

// One point of the truth grid. Unset dims fall back to the experiment-level
// dims; B is given either explicitly or through target singular values
// (embedded as diag(sv) with identity singular vectors).
struct GridPoint {
  std::optional<int> n, p, q;
  std::vector<double> b_sv;
  std::optional<Matrix> b_explicit;
  SigmaSpec sigma;
  std::optional<double> c_scale;  // scales cbar for MAICC at this point
  std::optional<double> axis;    // explicit sweep-axis value
};

struct EstimatorSpec {
  CriterionName name = CriterionName::Aicc;
  std::optional<double> c;        // fixed tuning constant
  std::optional<double> c_scale;  // c = c_scale * cbar(dims)
  std::string label;              // defaults to the canonical name
};

struct ExperimentSpec {
  ExperimentModel model = ExperimentModel::Regression;
  ModelDims dims;
  std::vector<GridPoint> grid;
  std::vector<EstimatorSpec> estimators;
  long reps = 0;
  std::uint64_t seed = 0;
  bool redraw_x = true;
  std::string sweep_axis;
  std::vector<int> candidate_orders;    // Selection: defaults to 1..p
  std::optional<std::string> x_file;    // fixed design loaded from CSV

  // Structural validation plus per-grid-point satisfiability of every
  // estimator's hard preconditions. Throws ValidationError before any
  // sampling happens.
  void validate() const;

  static ExperimentSpec from_json_string(const std::string& text,
                                         const std::string& origin = "<json>");
  static ExperimentSpec from_json_file(const std::string& path);
};

struct EstimatorStats {
  std::string label;
  CriterionName name = CriterionName::Aicc;
  std::optional<double> c_used;
  double bias = 0.0;      // mean(estimate - target)
  double bias_se = 0.0;
  double mse = 0.0;       // mean((estimate - target)^2)
  double mse_se = 0.0;
  double impr_pct = 0.0;  // 100 (1 - mse / mse_baseline), baseline = first
  double impr_pct_se = 0.0;  // delta method on the paired ratio
};

struct PointSummary {
  double axis = 0.0;
  ModelDims dims;
  std::vector<EstimatorStats> estimators;
};

struct McSummary {
  std::string sweep_axis;
  std::vector<PointSummary> points;
};

struct SelectionTable {
  std::vector<int> orders;
  // (criterion label, frequency per order); each row sums to reps.
  std::vector<std::pair<std::string, std::vector<long>>> counts;
};

// Paired Monte Carlo MSE comparison over the grid. Replication r always uses
// RngStream(seed, r), so results are bit-identical for any thread count
// (threads = 0 picks the hardware count).
McSummary run_mse_experiment(const ExperimentSpec& spec, int threads = 0);

// Order selection over nested candidates (k-th model = first k columns of X),
// ties resolved toward the smaller order. Candidates where a criterion is
// undefined (n - k - q - 1 <= 0, or a singular covariance estimate) receive
// +infinity.
SelectionTable run_selection_experiment(const ExperimentSpec& spec,
                                        const std::vector<int>& candidate_orders,
                                        int threads = 0);

// CSV renderings (17 significant digits everywhere).
std::string improvement_grid_csv(const McSummary& summary);  // wide, per point
std::string mc_summary_csv(const McSummary& summary);        // long form
std::string selection_table_csv(const SelectionTable& table);

}  // namespace mvic
