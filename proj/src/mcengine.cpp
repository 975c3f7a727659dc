#include "mvic/mcengine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mvic/csv.hpp"
#include "mvic/regression.hpp"

namespace mvic {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSetupStreamBase = 1ULL << 62;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier-compensated accumulator; used for every sequential reduction so
// the result is a pure function of the value order, which we fix.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void parallel_for_reps(long reps, int threads,
                       const std::function<void(long, long)>& run_chunk) {
  long t = threads > 0 ? threads
                       : static_cast<long>(std::thread::hardware_concurrency());
  t = std::clamp<long>(t, 1, reps);
  if (t == 1) {
    run_chunk(0, reps);
    return;
  }
  const long chunk = (reps + t - 1) / t;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(t));
  for (long i = 0; i < t; ++i) {
    const long lo = i * chunk;
    const long hi = std::min(reps, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, i, lo, hi] {
      try {
        run_chunk(lo, hi);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

struct ResolvedEstimator {
  CriterionName name;
  std::string label;
  std::optional<double> fixed_c;
  double c_scale = 1.0;  // multiplies cbar when fixed_c is absent
};

struct ResolvedPoint {
  ModelDims dims;
  Matrix B;                         // coefficient (or mean) matrix
  std::optional<SpdMatrix> sigma;   // regression models only
  double axis = 0.0;
  std::vector<std::optional<double>> c;  // concrete c per estimator (MAICC)
  std::vector<ResolvedEstimator> estimators;
};

bool is_regression(ExperimentModel m) {
  return m == ExperimentModel::Regression ||
         m == ExperimentModel::RegressionKnownSigma ||
         m == ExperimentModel::Selection;
}

std::vector<ResolvedEstimator> resolve_estimators(const ExperimentSpec& spec) {
  std::vector<ResolvedEstimator> out;
  std::map<std::string, int> used;
  for (const auto& est : spec.estimators) {
    ResolvedEstimator r;
    r.name = est.name;
    r.fixed_c = est.c;
    if (est.c_scale) r.c_scale = *est.c_scale;
    std::string base = est.label.empty() ? to_string(est.name) : est.label;
    const int count = ++used[base];
    r.label = count == 1 ? base : base + "_" + std::to_string(count);
    out.push_back(std::move(r));
  }
  return out;
}

double resolve_axis(const ExperimentSpec& spec, const GridPoint& gp,
                    const ResolvedPoint& rp, std::size_t index) {
  if (gp.axis) return *gp.axis;
  const std::string& a = spec.sweep_axis;
  if (a == "n") return rp.dims.n;
  if (a == "p") return rp.dims.p;
  if (a == "q") return rp.dims.q;
  if (a == "b_norm" || a == "theta_norm") return rp.B.norm();
  if (a == "sigma1" || a == "sigma1_b") {
    return Eigen::JacobiSVD<Matrix>(rp.B).singularValues()(0);
  }
  if (a == "c_over_cbar") return gp.c_scale.value_or(1.0);
  if (a == "r") {
    return gp.sigma.kind == SigmaSpec::Kind::UnitCorrelation ? gp.sigma.value
                                                             : 0.0;
  }
  if (a == "sigma2") {
    return gp.sigma.kind == SigmaSpec::Kind::ScaledIdentity
               ? gp.sigma.value
               : rp.sigma ? rp.sigma->matrix()(0, 0) : 1.0;
  }
  return static_cast<double>(index);
}

ResolvedPoint resolve_point(const ExperimentSpec& spec, std::size_t index) {
  const GridPoint& gp = spec.grid[index];
  const auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << "grid point " << index << ": " << what;
    throw ValidationError(msg.str());
  };

  ResolvedPoint rp;
  rp.dims = ModelDims{gp.n.value_or(spec.dims.n), gp.p.value_or(spec.dims.p),
                      gp.q.value_or(spec.dims.q)};
  const int p = rp.dims.p;
  const int q = rp.dims.q;
  if (is_regression(spec.model)) {
    rp.dims.validate();
  } else {
    if (rp.dims.n < 1 || p < 1 || q < 1) fail("dims must be positive");
    if (p < q) fail("mean-matrix experiments need p >= q");
  }

  if (gp.b_explicit) {
    if (gp.b_explicit->rows() != p || gp.b_explicit->cols() != q) {
      fail("explicit coefficient matrix must be p x q");
    }
    rp.B = *gp.b_explicit;
  } else {
    if (static_cast<int>(gp.b_sv.size()) > std::min(p, q)) {
      fail("more target singular values than min(p, q)");
    }
    rp.B = Matrix::Zero(p, q);
    for (std::size_t i = 0; i < gp.b_sv.size(); ++i) {
      if (!(gp.b_sv[i] >= 0.0) || !std::isfinite(gp.b_sv[i])) {
        fail("target singular values must be finite and nonnegative");
      }
      rp.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
          gp.b_sv[i];
    }
  }

  if (spec.model != ExperimentModel::MeanMatrix) {
    try {
      rp.sigma = gp.sigma.build(q);
    } catch (const std::exception& e) {
      fail(std::string("noise covariance: ") + e.what());
    }
  }

  rp.estimators = resolve_estimators(spec);
  for (const auto& est : rp.estimators) {
    std::optional<double> c;
    switch (spec.model) {
      case ExperimentModel::Regression:
      case ExperimentModel::Selection: {
        if (est.name != CriterionName::Aic && est.name != CriterionName::Aicc &&
            est.name != CriterionName::Maicc) {
          fail("estimator " + est.label + " does not apply to this model");
        }
        const int dof = rp.dims.n - p - q - 1;
        if (rp.dims.n - p < q) {
          fail("n - p >= q required for a nonsingular covariance estimate");
        }
        if ((est.name == CriterionName::Aicc ||
             est.name == CriterionName::Maicc) &&
            dof <= 0 && spec.model == ExperimentModel::Regression) {
          fail("estimator " + est.label + " needs n - p - q - 1 > 0");
        }
        if (est.name == CriterionName::Maicc &&
            spec.model == ExperimentModel::Regression) {
          const double scale = est.c_scale * gp.c_scale.value_or(1.0);
          c = est.fixed_c ? *est.fixed_c : scale * cbar(rp.dims);
        }
        break;
      }
      case ExperimentModel::RegressionKnownSigma:
        if (est.name != CriterionName::AicKnown &&
            est.name != CriterionName::Maic &&
            est.name != CriterionName::SureMat) {
          fail("estimator " + est.label + " does not apply to this model");
        }
        break;
      case ExperimentModel::MeanMatrix:
        if (est.name == CriterionName::Johnstone ||
            est.name == CriterionName::SureVec) {
          if (q != 1) fail("estimator " + est.label + " needs q = 1");
        } else if (est.name != CriterionName::SureMat &&
                   est.name != CriterionName::Matsuda &&
                   est.name != CriterionName::Thm1) {
          fail("estimator " + est.label + " does not apply to this model");
        }
        break;
    }
    rp.c.push_back(c);
  }

  rp.axis = resolve_axis(spec, gp, rp, index);
  return rp;
}

Matrix fixed_design(const ExperimentSpec& spec, const ResolvedPoint& rp,
                    std::size_t point_index) {
  if (spec.x_file) {
    Matrix x = load_matrix_csv(*spec.x_file, false);
    if (x.rows() != rp.dims.n || x.cols() != rp.dims.p) {
      std::ostringstream msg;
      msg << "design file is " << x.rows() << " x " << x.cols()
          << " but dims call for " << rp.dims.n << " x " << rp.dims.p;
      throw ValidationError(msg.str());
    }
    return x;
  }
  RngStream rng(spec.seed, kSetupStreamBase + point_index);
  return standard_normal_matrix(rp.dims.n, rp.dims.p, rng);
}

// One replication of an MSE-comparison point: fills err[k] with
// (estimate_k - target).
void evaluate_replication(const ExperimentSpec& spec, const ResolvedPoint& rp,
                          const Matrix* fixed_x, const Matrix& sigma_chol_t,
                          double known_sigma_offset, RngStream& rng,
                          double* err) {
  const ModelDims d = rp.dims;
  const std::size_t k_count = rp.estimators.size();
  switch (spec.model) {
    case ExperimentModel::Regression: {
      const Matrix x = fixed_x
                           ? *fixed_x
                           : standard_normal_matrix(d.n, d.p, rng);
      const Matrix y =
          x * rp.B + standard_normal_matrix(d.n, d.q, rng) * sigma_chol_t;
      const FitResult fit = fit_mle(x, y);
      const double target = kl_discrepancy(*rp.sigma, x, rp.B, fit);
      for (std::size_t k = 0; k < k_count; ++k) {
        double v = 0.0;
        switch (rp.estimators[k].name) {
          case CriterionName::Aic: v = aic(fit, d).value; break;
          case CriterionName::Aicc: v = aicc(fit, d).value; break;
          case CriterionName::Maicc: v = maicc(fit, d, rp.c[k]).value; break;
          default: break;
        }
        err[k] = v - target;
      }
      break;
    }
    case ExperimentModel::RegressionKnownSigma: {
      const Matrix x = fixed_x
                           ? *fixed_x
                           : standard_normal_matrix(d.n, d.p, rng);
      const Matrix y =
          x * rp.B + standard_normal_matrix(d.n, d.q, rng) * sigma_chol_t;
      const FitResult fit = fit_mle(x, y);
      const double target =
          kl_discrepancy_known_sigma(*rp.sigma, x, rp.B, fit.Bhat);
      for (std::size_t k = 0; k < k_count; ++k) {
        double v = 0.0;
        switch (rp.estimators[k].name) {
          case CriterionName::AicKnown:
            v = aic_known_sigma(x, y, fit, *rp.sigma).value;
            break;
          case CriterionName::Maic:
            v = maic(x, y, fit, *rp.sigma).value;
            break;
          case CriterionName::SureMat:
            // Reported on the discrepancy scale so every estimator in the
            // model shares one target.
            v = sure_mat_regression(x, y, fit, *rp.sigma) + known_sigma_offset;
            break;
          default:
            break;
        }
        err[k] = v - target;
      }
      break;
    }
    case ExperimentModel::MeanMatrix: {
      const Matrix y = rp.B + standard_normal_matrix(d.p, d.q, rng);
      const double target = (y - rp.B).squaredNorm();
      for (std::size_t k = 0; k < k_count; ++k) {
        double v = 0.0;
        switch (rp.estimators[k].name) {
          case CriterionName::SureMat:
            v = static_cast<double>(d.p) * d.q;
            break;
          case CriterionName::SureVec:
            v = static_cast<double>(d.p);
            break;
          case CriterionName::Matsuda: v = matsuda(y).value; break;
          case CriterionName::Thm1: v = thm1_estimator(y).value; break;
          case CriterionName::Johnstone: v = johnstone(y.col(0)).value; break;
          default: break;
        }
        err[k] = v - target;
      }
      break;
    }
    case ExperimentModel::Selection:
      throw ValidationError("selection specs run through run_selection_experiment");
  }
}

PointSummary reduce_point(const ResolvedPoint& rp,
                          const std::vector<double>& err, long reps) {
  const std::size_t k_count = rp.estimators.size();
  PointSummary out;
  out.axis = rp.axis;
  out.dims = rp.dims;
  const double n = static_cast<double>(reps);

  std::vector<double> mean_err(k_count), mean_sq(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    CompensatedSum se, ssq;
    for (long r = 0; r < reps; ++r) {
      const double e = err[static_cast<std::size_t>(r) * k_count + k];
      se.add(e);
      ssq.add(e * e);
    }
    mean_err[k] = se.value() / n;
    mean_sq[k] = ssq.value() / n;
  }

  // Centered second moments of the errors and of the squared errors, plus
  // the covariance of each squared error with the baseline's (for the paired
  // improvement ratio).
  std::vector<double> var_err(k_count, 0.0), var_sq(k_count, 0.0),
      cov_sq0(k_count, 0.0);
  if (reps >= 2) {
    for (std::size_t k = 0; k < k_count; ++k) {
      CompensatedSum ve, vs, cs;
      for (long r = 0; r < reps; ++r) {
        const double e = err[static_cast<std::size_t>(r) * k_count + k];
        const double e0 = err[static_cast<std::size_t>(r) * k_count];
        const double de = e - mean_err[k];
        const double dsq = e * e - mean_sq[k];
        const double dsq0 = e0 * e0 - mean_sq[0];
        ve.add(de * de);
        vs.add(dsq * dsq);
        cs.add(dsq * dsq0);
      }
      var_err[k] = ve.value() / (n - 1.0);
      var_sq[k] = vs.value() / (n - 1.0);
      cov_sq0[k] = cs.value() / (n - 1.0);
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    EstimatorStats s;
    s.label = rp.estimators[k].label;
    s.name = rp.estimators[k].name;
    s.c_used = rp.c[k];
    s.bias = mean_err[k];
    s.bias_se = reps >= 2 ? std::sqrt(var_err[k] / n) : 0.0;
    s.mse = mean_sq[k];
    s.mse_se = reps >= 2 ? std::sqrt(var_sq[k] / n) : 0.0;
    if (mean_sq[0] > 0.0) {
      const double ratio = mean_sq[k] / mean_sq[0];
      s.impr_pct = 100.0 * (1.0 - ratio);
      if (reps >= 2) {
        const double rel = var_sq[k] / (mean_sq[k] * mean_sq[k]) +
                           var_sq[0] / (mean_sq[0] * mean_sq[0]) -
                           2.0 * cov_sq0[k] / (mean_sq[k] * mean_sq[0]);
        const double var_ratio = ratio * ratio * rel / n;
        s.impr_pct_se = 100.0 * std::sqrt(std::max(var_ratio, 0.0));
      }
    }
    out.estimators.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::string to_string(ExperimentModel model) {
  switch (model) {
    case ExperimentModel::Regression: return "regression";
    case ExperimentModel::RegressionKnownSigma: return "regression_known_sigma";
    case ExperimentModel::MeanMatrix: return "mean_matrix";
    case ExperimentModel::Selection: return "selection";
  }
  return "unknown";
}

SpdMatrix SigmaSpec::build(int q) const {
  switch (kind) {
    case Kind::Identity:
      return SpdMatrix::identity(q);
    case Kind::ScaledIdentity:
      if (!(value > 0.0)) {
        throw ValidationError("covariance scale must be positive");
      }
      return SpdMatrix(value * Matrix::Identity(q, q));
    case Kind::UnitCorrelation: {
      Matrix m = Matrix::Constant(q, q, value);
      m.diagonal().setOnes();
      return SpdMatrix(std::move(m));
    }
    case Kind::Explicit: {
      if (entries.rows() != q || entries.cols() != q) {
        throw ValidationError("explicit covariance must be q x q");
      }
      return SpdMatrix(entries);
    }
  }
  throw ValidationError("unknown covariance kind");
}

void ExperimentSpec::validate() const {
  if (reps < 1) throw ValidationError("reps must be >= 1");
  if (grid.empty()) throw ValidationError("grid must contain at least one point");
  if (estimators.empty()) {
    throw ValidationError("estimators must contain at least one entry");
  }
  if (model == ExperimentModel::Selection) {
    if (grid.size() != 1) {
      throw ValidationError("selection experiments use exactly one grid point");
    }
    for (int k : candidate_orders) {
      if (k < 1 || k > dims.p) {
        throw ValidationError("candidate orders must lie in [1, p]");
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    (void)resolve_point(*this, i);  // throws with point context
  }
}

McSummary run_mse_experiment(const ExperimentSpec& spec, int threads) {
  spec.validate();
  if (spec.model == ExperimentModel::Selection) {
    throw ValidationError("selection specs run through run_selection_experiment");
  }
  McSummary out;
  out.sweep_axis = spec.sweep_axis;
  const std::size_t k_count = spec.estimators.size();

  for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
    const ResolvedPoint rp = resolve_point(spec, gi);

    Matrix x_fixed;
    const Matrix* x_ptr = nullptr;
    Matrix sigma_chol_t;
    double known_sigma_offset = 0.0;
    if (spec.model != ExperimentModel::MeanMatrix) {
      sigma_chol_t = rp.sigma->cholesky_lower().transpose();
      if (!spec.redraw_x) {
        x_fixed = fixed_design(spec, rp, gi);
        x_ptr = &x_fixed;
      }
      known_sigma_offset = rp.dims.n * rp.dims.q * (kLog2Pi + 1.0) +
                           rp.dims.n * rp.sigma->log_det();
    }

    std::vector<double> err(static_cast<std::size_t>(spec.reps) * k_count);
    parallel_for_reps(spec.reps, threads, [&](long lo, long hi) {
      for (long r = lo; r < hi; ++r) {
        RngStream rng(spec.seed, static_cast<std::uint64_t>(r));
        evaluate_replication(spec, rp, x_ptr, sigma_chol_t,
                             known_sigma_offset, rng,
                             err.data() + static_cast<std::size_t>(r) * k_count);
      }
    });

    out.points.push_back(reduce_point(rp, err, spec.reps));
  }
  return out;
}

SelectionTable run_selection_experiment(const ExperimentSpec& spec,
                                        const std::vector<int>& candidate_orders,
                                        int threads) {
  spec.validate();
  if (spec.model != ExperimentModel::Selection) {
    throw ValidationError("not a selection spec");
  }
  std::vector<int> orders = candidate_orders;
  if (orders.empty()) orders = spec.candidate_orders;
  if (orders.empty()) {
    orders.resize(static_cast<std::size_t>(spec.dims.p));
    for (int k = 1; k <= spec.dims.p; ++k) orders[static_cast<std::size_t>(k - 1)] = k;
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  for (int k : orders) {
    if (k < 1 || k > spec.dims.p) {
      throw ValidationError("candidate orders must lie in [1, p]");
    }
  }

  const ResolvedPoint rp = resolve_point(spec, 0);
  const ModelDims d = rp.dims;
  const std::size_t k_count = rp.estimators.size();
  const Matrix sigma_chol_t = rp.sigma->cholesky_lower().transpose();
  Matrix x_fixed;
  const Matrix* x_ptr = nullptr;
  if (!spec.redraw_x) {
    x_fixed = fixed_design(spec, rp, 0);
    x_ptr = &x_fixed;
  }

  std::vector<int> chosen(static_cast<std::size_t>(spec.reps) * k_count);
  parallel_for_reps(spec.reps, threads, [&](long lo, long hi) {
    for (long r = lo; r < hi; ++r) {
      RngStream rng(spec.seed, static_cast<std::uint64_t>(r));
      const Matrix x =
          x_ptr ? *x_ptr : standard_normal_matrix(d.n, d.p, rng);
      const Matrix y =
          x * rp.B + standard_normal_matrix(d.n, d.q, rng) * sigma_chol_t;

      std::vector<double> best(k_count, kInf);
      std::vector<int> best_idx(k_count, -1);
      for (std::size_t oi = 0; oi < orders.size(); ++oi) {
        const int k = orders[oi];
        const ModelDims dk{d.n, k, d.q};
        const FitResult fit = fit_mle(x.leftCols(k), y);
        for (std::size_t j = 0; j < k_count; ++j) {
          double value = kInf;
          const int dof = d.n - k - d.q - 1;
          try {
            if (fit.sigma_hat_chol) {
              switch (rp.estimators[j].name) {
                case CriterionName::Aic:
                  value = aic(fit, dk).value;
                  break;
                case CriterionName::Aicc:
                  if (dof > 0) value = aicc(fit, dk).value;
                  break;
                case CriterionName::Maicc:
                  if (dof > 0) {
                    const auto& est = rp.estimators[j];
                    // The correction is only defined as a dominating
                    // estimator when cbar > 0; candidates below that
                    // threshold fall back to plain AICc.
                    const double c = est.fixed_c
                                         ? *est.fixed_c
                                         : est.c_scale * std::max(cbar(dk), 0.0);
                    value = maicc(fit, dk, c).value;
                  }
                  break;
                default:
                  break;
              }
            }
          } catch (const NumericError&) {
            value = kInf;
          }
          if (value < best[j]) {
            best[j] = value;
            best_idx[j] = static_cast<int>(oi);
          }
        }
      }
      for (std::size_t j = 0; j < k_count; ++j) {
        chosen[static_cast<std::size_t>(r) * k_count + j] = best_idx[j];
      }
    }
  });

  SelectionTable table;
  table.orders = orders;
  for (std::size_t j = 0; j < k_count; ++j) {
    std::vector<long> counts(orders.size(), 0);
    for (long r = 0; r < spec.reps; ++r) {
      const int idx = chosen[static_cast<std::size_t>(r) * k_count + j];
      if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
    }
    table.counts.emplace_back(rp.estimators[j].label, std::move(counts));
  }
  return table;
}

// ---- JSON ---------------------------------------------------------------

namespace {

void require_known_keys(const json& obj,
                        std::initializer_list<const char*> allowed,
                        const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ValidationError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

SigmaSpec parse_sigma(const json& j, const std::string& where) {
  SigmaSpec s;
  if (!j.is_object() || !j.contains("type")) {
    throw ValidationError(where + ": sigma needs a 'type'");
  }
  require_known_keys(j, {"type", "value", "r", "entries"}, where);
  const std::string type = j.at("type").get<std::string>();
  if (type == "identity") {
    s.kind = SigmaSpec::Kind::Identity;
  } else if (type == "scaled_identity") {
    s.kind = SigmaSpec::Kind::ScaledIdentity;
    s.value = j.at("value").get<double>();
  } else if (type == "unit_correlation") {
    s.kind = SigmaSpec::Kind::UnitCorrelation;
    s.value = j.at("r").get<double>();
  } else if (type == "explicit") {
    s.kind = SigmaSpec::Kind::Explicit;
    const auto& rows = j.at("entries");
    if (!rows.is_array() || rows.empty()) {
      throw ValidationError(where + ": explicit sigma needs entry rows");
    }
    const auto q = rows.size();
    s.entries = Matrix(q, q);
    for (std::size_t i = 0; i < q; ++i) {
      const auto& row = rows[i];
      if (!row.is_array() || row.size() != q) {
        throw ValidationError(where + ": explicit sigma must be square");
      }
      for (std::size_t jj = 0; jj < q; ++jj) {
        s.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) =
            row[jj].get<double>();
      }
    }
  } else {
    throw ValidationError(where + ": unknown sigma type '" + type + "'");
  }
  return s;
}

GridPoint parse_grid_point(const json& j, const std::string& where) {
  require_known_keys(
      j, {"n", "p", "q", "b_sv", "beta", "B", "sigma", "c_scale", "axis"},
      where);
  GridPoint gp;
  if (j.contains("n")) gp.n = j.at("n").get<int>();
  if (j.contains("p")) gp.p = j.at("p").get<int>();
  if (j.contains("q")) gp.q = j.at("q").get<int>();
  if (j.contains("b_sv")) {
    gp.b_sv = j.at("b_sv").get<std::vector<double>>();
  }
  if (j.contains("beta")) {
    const auto beta = j.at("beta").get<std::vector<double>>();
    Matrix b(static_cast<Eigen::Index>(beta.size()), 1);
    for (std::size_t i = 0; i < beta.size(); ++i) {
      b(static_cast<Eigen::Index>(i), 0) = beta[i];
    }
    gp.b_explicit = std::move(b);
  }
  if (j.contains("B")) {
    const auto& rows = j.at("B");
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
      throw ValidationError(where + ": B must be an array of rows");
    }
    Matrix b(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) {
        throw ValidationError(where + ": ragged rows in B");
      }
      for (std::size_t jj = 0; jj < rows[i].size(); ++jj) {
        b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) =
            rows[i][jj].get<double>();
      }
    }
    if (gp.b_explicit) {
      throw ValidationError(where + ": give either beta or B, not both");
    }
    gp.b_explicit = std::move(b);
  }
  if (j.contains("sigma")) gp.sigma = parse_sigma(j.at("sigma"), where);
  if (j.contains("c_scale")) gp.c_scale = j.at("c_scale").get<double>();
  if (j.contains("axis")) gp.axis = j.at("axis").get<double>();
  return gp;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json_string(const std::string& text,
                                                const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  if (!j.is_object()) {
    throw ValidationError(origin + ": spec must be a JSON object");
  }
  require_known_keys(j,
                     {"name", "model", "dims", "grid", "estimators", "reps",
                      "seed", "redraw_x", "sweep_axis", "candidate_orders",
                      "x_file"},
                     origin);
  for (const char* key : {"dims", "grid", "estimators", "reps", "seed",
                          "redraw_x"}) {
    if (!j.contains(key)) {
      throw ValidationError(origin + ": missing required key '" +
                            std::string(key) + "'");
    }
  }

  ExperimentSpec spec;
  const std::string model = j.value("model", "regression");
  if (model == "regression") {
    spec.model = ExperimentModel::Regression;
  } else if (model == "regression_known_sigma") {
    spec.model = ExperimentModel::RegressionKnownSigma;
  } else if (model == "mean_matrix") {
    spec.model = ExperimentModel::MeanMatrix;
  } else if (model == "selection") {
    spec.model = ExperimentModel::Selection;
  } else {
    throw ValidationError(origin + ": unknown model '" + model + "'");
  }

  const auto& jd = j.at("dims");
  require_known_keys(jd, {"n", "p", "q"}, origin + ": dims");
  spec.dims = ModelDims{jd.at("n").get<int>(), jd.at("p").get<int>(),
                        jd.at("q").get<int>()};

  const auto& jg = j.at("grid");
  if (!jg.is_array() || jg.empty()) {
    throw ValidationError(origin + ": grid must be a nonempty array");
  }
  for (std::size_t i = 0; i < jg.size(); ++i) {
    std::ostringstream where;
    where << origin << ": grid[" << i << "]";
    spec.grid.push_back(parse_grid_point(jg[i], where.str()));
  }

  const auto& je = j.at("estimators");
  if (!je.is_array() || je.empty()) {
    throw ValidationError(origin + ": estimators must be a nonempty array");
  }
  for (std::size_t i = 0; i < je.size(); ++i) {
    std::ostringstream where;
    where << origin << ": estimators[" << i << "]";
    require_known_keys(je[i], {"name", "c", "c_scale", "label"}, where.str());
    EstimatorSpec est;
    if (!je[i].contains("name")) {
      throw ValidationError(where.str() + ": missing 'name'");
    }
    est.name = criterion_from_string(je[i].at("name").get<std::string>());
    if (je[i].contains("c")) est.c = je[i].at("c").get<double>();
    if (je[i].contains("c_scale")) {
      est.c_scale = je[i].at("c_scale").get<double>();
    }
    est.label = je[i].value("label", "");
    spec.estimators.push_back(std::move(est));
  }

  spec.reps = j.at("reps").get<long>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.redraw_x = j.at("redraw_x").get<bool>();
  spec.sweep_axis = j.value("sweep_axis", "");
  if (j.contains("candidate_orders")) {
    spec.candidate_orders = j.at("candidate_orders").get<std::vector<int>>();
  }
  if (j.contains("x_file")) {
    spec.x_file = j.at("x_file").get<std::string>();
  }

  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open spec file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str(), path);
}

// ---- CSV ----------------------------------------------------------------

std::string improvement_grid_csv(const McSummary& summary) {
  std::ostringstream out;
  const std::string axis =
      summary.sweep_axis.empty() ? "axis" : summary.sweep_axis;
  out << axis << ",n,p,q";
  if (!summary.points.empty()) {
    for (const auto& est : summary.points.front().estimators) {
      out << ",mse_" << est.label << ",mse_se_" << est.label << ",impr_pct_"
          << est.label << ",impr_se_" << est.label;
    }
  }
  out << '\n';
  for (const auto& pt : summary.points) {
    out << format_double(pt.axis) << ',' << pt.dims.n << ',' << pt.dims.p
        << ',' << pt.dims.q;
    for (const auto& est : pt.estimators) {
      out << ',' << format_double(est.mse) << ',' << format_double(est.mse_se)
          << ',' << format_double(est.impr_pct) << ','
          << format_double(est.impr_pct_se);
    }
    out << '\n';
  }
  return out.str();
}

std::string mc_summary_csv(const McSummary& summary) {
  std::ostringstream out;
  out << "point,axis,n,p,q,estimator,c,bias,bias_se,mse,mse_se,impr_pct,"
         "impr_se\n";
  for (std::size_t i = 0; i < summary.points.size(); ++i) {
    const auto& pt = summary.points[i];
    for (const auto& est : pt.estimators) {
      out << i << ',' << format_double(pt.axis) << ',' << pt.dims.n << ','
          << pt.dims.p << ',' << pt.dims.q << ',' << est.label << ',';
      if (est.c_used) out << format_double(*est.c_used);
      out << ',' << format_double(est.bias) << ','
          << format_double(est.bias_se) << ',' << format_double(est.mse) << ','
          << format_double(est.mse_se) << ',' << format_double(est.impr_pct)
          << ',' << format_double(est.impr_pct_se) << '\n';
    }
  }
  return out.str();
}

std::string selection_table_csv(const SelectionTable& table) {
  std::ostringstream out;
  out << "criterion";
  for (int k : table.orders) out << ",k" << k;
  out << '\n';
  for (const auto& [label, counts] : table.counts) {
    out << label;
    for (long c : counts) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace mvic
