#include "mvic/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mvic::verify {

namespace {

Matrix inv_gram(const Matrix& Z) {
  const Matrix gram = Z.transpose() * Z;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("Gram matrix not invertible in identity check", 0.0);
  }
  return llt.solve(Matrix::Identity(gram.rows(), gram.cols()));
}

std::string dims_config(const Matrix& Z) {
  std::ostringstream os;
  os << "p=" << Z.rows() << ",q=" << Z.cols();
  return os.str();
}

// Scalar paired-difference accumulator: z-score of mean(LHS - RHS).
class PairedDiff {
 public:
  void add(double lhs, double rhs) {
    const double d = lhs - rhs;
    ++count_;
    sum_ += d;
    sum_sq_ += d * d;
  }

  double z_score() const {
    const double n = static_cast<double>(count_);
    const double mean = sum_ / n;
    const double var = (sum_sq_ / n - mean * mean) * n / (n - 1.0);
    if (var <= 0.0) return mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return mean / std::sqrt(var / n);
  }

 private:
  long count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

// Componentwise mean-vs-target accumulator for matrix-valued expressions.
class MatrixMoment {
 public:
  explicit MatrixMoment(Eigen::Index rows, Eigen::Index cols)
      : sum_(Matrix::Zero(rows, cols)), sum_sq_(Matrix::Zero(rows, cols)) {}

  void add(const Matrix& m) {
    ++count_;
    sum_ += m;
    sum_sq_ += m.cwiseProduct(m);
  }

  double max_abs_z(const Matrix& target) const {
    const double n = static_cast<double>(count_);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
      for (Eigen::Index j = 0; j < sum_.cols(); ++j) {
        const double mean = sum_(i, j) / n;
        const double var =
            (sum_sq_(i, j) / n - mean * mean) * n / (n - 1.0);
        const double se = var > 0.0 ? std::sqrt(var / n) : 0.0;
        const double dev = mean - target(i, j);
        // Entries that hold exactly (e.g. S A S^{-1} = A at q = 1) have zero
        // MC variance; rounding in the closed form must not read as z = inf.
        if (std::abs(dev) <= 1e-10 * (1.0 + std::abs(target(i, j)))) continue;
        double z;
        if (se > 0.0) {
          z = std::abs(dev) / se;
        } else {
          z = std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, z);
      }
    }
    return worst;
  }

 private:
  long count_ = 0;
  Matrix sum_;
  Matrix sum_sq_;
};

IdentityCheckReport finish_fd(IdentityId id, std::string config,
                              double max_abs_error, const CheckOptions& opt) {
  IdentityCheckReport r;
  r.id = id;
  r.config = std::move(config);
  r.statistic_kind = "max_abs_error";
  r.statistic = max_abs_error;
  r.negative_control = opt.coeff_perturbation != 0.0;
  if (r.negative_control) {
    // A broken coefficient must blow well past the honest FD noise floor
    // (~1e-7 on the battery inputs).
    r.threshold = 2.0 * opt.fd_tolerance;
    r.passed = max_abs_error > r.threshold;
  } else {
    r.threshold = opt.fd_tolerance;
    r.passed = max_abs_error <= r.threshold;
  }
  return r;
}

IdentityCheckReport finish_mc(IdentityId id, std::string config, double z,
                              const CheckOptions& opt) {
  IdentityCheckReport r;
  r.id = id;
  r.config = std::move(config);
  r.statistic_kind = "z_score";
  r.statistic = z;
  r.negative_control = opt.coeff_perturbation != 0.0;
  if (r.negative_control) {
    r.threshold = opt.control_z;
    r.passed = std::abs(z) > opt.control_z;
  } else {
    r.threshold = opt.z_threshold;
    r.passed = std::abs(z) <= opt.z_threshold;
  }
  return r;
}

}  // namespace

std::string to_string(IdentityId id) {
  switch (id) {
    case IdentityId::A1InvGramDeriv: return "A1_inv_gram_deriv";
    case IdentityId::A2TraceDeriv: return "A2_trace_deriv";
    case IdentityId::A3Divergence: return "A3_divergence";
    case IdentityId::B1Stein: return "B1_stein";
    case IdentityId::B2TraceProduct: return "B2_trace_product";
    case IdentityId::B3WishartInvMean: return "B3_wishart_inv_mean";
    case IdentityId::B4InvAInv: return "B4_inv_A_inv";
    case IdentityId::B5TrinvTimesInv: return "B5_trinv_times_inv";
    case IdentityId::B6TrinvTimesS: return "B6_trinv_times_S";
    case IdentityId::B7SasInv: return "B7_SAS_inv";
    case IdentityId::B8aExp0: return "B8a_exp0";
    case IdentityId::B8bExp: return "B8b_exp";
  }
  return "unknown";
}

std::string to_string(SteinTestFn fn) {
  switch (fn) {
    case SteinTestFn::Linear: return "linear";
    case SteinTestFn::Constant: return "constant";
    case SteinTestFn::InvGram: return "Z_invgram";
    case SteinTestFn::InvGramSq: return "Z_invgram_sq";
  }
  return "unknown";
}

IdentityCheckReport check_deriv_inv_gram(const Matrix& Z,
                                         const CheckOptions& opt) {
  checked_singular_values(Z);
  const auto p = Z.rows();
  const auto q = Z.cols();
  const Matrix W = inv_gram(Z);
  const Matrix ZW = Z * W;
  const double pert = 1.0 + opt.coeff_perturbation;

  double max_err = 0.0;
  Matrix Zp = Z;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      const double h = opt.fd_step * (1.0 + std::abs(Z(i, j)));
      Zp(i, j) = Z(i, j) + h;
      const Matrix fwd = inv_gram(Zp);
      Zp(i, j) = Z(i, j) - h;
      const Matrix bwd = inv_gram(Zp);
      Zp(i, j) = Z(i, j);
      const Matrix fd = (fwd - bwd) / (2.0 * h);

      for (Eigen::Index k = 0; k < q; ++k) {
        for (Eigen::Index l = 0; l < q; ++l) {
          const double analytic =
              -W(k, j) * ZW(i, l) - pert * ZW(i, k) * W(j, l);
          max_err = std::max(max_err, std::abs(fd(k, l) - analytic));
        }
      }
    }
  }
  return finish_fd(IdentityId::A1InvGramDeriv, dims_config(Z), max_err, opt);
}

IdentityCheckReport check_deriv_trace(const Matrix& Z, const SpdMatrix& S,
                                      const CheckOptions& opt) {
  checked_singular_values(Z);
  if (S.dim() != Z.cols()) {
    throw ValidationError("S must be q x q for the trace-derivative check");
  }
  const Matrix W = inv_gram(Z);
  const Matrix analytic = -2.0 * (1.0 + opt.coeff_perturbation) *
                          (Z * W * S.matrix() * W);

  double max_err = 0.0;
  Matrix Zp = Z;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
      const double h = opt.fd_step * (1.0 + std::abs(Z(i, j)));
      Zp(i, j) = Z(i, j) + h;
      const double fwd = (S.matrix() * inv_gram(Zp)).trace();
      Zp(i, j) = Z(i, j) - h;
      const double bwd = (S.matrix() * inv_gram(Zp)).trace();
      Zp(i, j) = Z(i, j);
      const double fd = (fwd - bwd) / (2.0 * h);
      max_err = std::max(max_err, std::abs(fd - analytic(i, j)));
    }
  }
  return finish_fd(IdentityId::A2TraceDeriv, dims_config(Z), max_err, opt);
}

IdentityCheckReport check_divergence_identity(const Matrix& Z, const Matrix& A,
                                              const Matrix& B,
                                              const CheckOptions& opt) {
  checked_singular_values(Z);
  const auto p = Z.rows();
  const auto q = Z.cols();
  if (A.rows() != q || A.cols() != q || B.rows() != q || B.cols() != q) {
    throw ValidationError("A and B must be q x q for the divergence check");
  }
  const auto field = [&](const Matrix& z) -> Matrix {
    const Matrix w = inv_gram(z);
    return z * w * A * w * B;
  };
  const Matrix W = inv_gram(Z);
  const double closed =
      (static_cast<double>(p) - q - 2.0) * (W * A * W * B).trace() -
      (1.0 + opt.coeff_perturbation) * (A * W).trace() * (W * B).trace();

  double divergence = 0.0;
  Matrix Zp = Z;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      const double h = opt.fd_step * (1.0 + std::abs(Z(i, j)));
      Zp(i, j) = Z(i, j) + h;
      const double fwd = field(Zp)(i, j);
      Zp(i, j) = Z(i, j) - h;
      const double bwd = field(Zp)(i, j);
      Zp(i, j) = Z(i, j);
      divergence += (fwd - bwd) / (2.0 * h);
    }
  }
  return finish_fd(IdentityId::A3Divergence, dims_config(Z),
                   std::abs(divergence - closed), opt);
}

IdentityCheckReport check_stein(const Matrix& Zbar, SteinTestFn g,
                                const CheckOptions& opt) {
  const auto p = Zbar.rows();
  const auto q = Zbar.cols();
  const double pert = 1.0 + opt.coeff_perturbation;

  // Fixed constant matrix for the Constant registry entry.
  RngStream const_rng(opt.seed ^ 0xC0FFEEULL, 0);
  const Matrix C = standard_normal_matrix(p, q, const_rng);

  PairedDiff acc;
  for (long r = 0; r < opt.reps; ++r) {
    RngStream rng(opt.seed, static_cast<std::uint64_t>(r));
    const Matrix G = standard_normal_matrix(p, q, rng);
    const Matrix Z = Zbar + G;
    double lhs = 0.0;
    double rhs = 0.0;
    switch (g) {
      case SteinTestFn::Linear:
        lhs = (G.transpose() * Z).trace();
        rhs = pert * static_cast<double>(p) * q;
        break;
      case SteinTestFn::Constant:
        lhs = (G.transpose() * C).trace();
        rhs = 0.0;
        break;
      case SteinTestFn::InvGram: {
        const Matrix W = inv_gram(Z);
        lhs = (G.transpose() * Z * W).trace();
        rhs = pert * (static_cast<double>(p) - q - 1.0) * W.trace();
        break;
      }
      case SteinTestFn::InvGramSq: {
        const Matrix W = inv_gram(Z);
        const double t1 = W.trace();
        const double t2 = W.squaredNorm();
        lhs = (G.transpose() * Z * W * W).trace();
        rhs = pert * (static_cast<double>(p) - q - 2.0) * t2 - t1 * t1;
        break;
      }
    }
    acc.add(lhs, rhs);
  }
  std::ostringstream config;
  config << dims_config(Zbar) << ",g=" << to_string(g)
         << ",zbar_norm=" << Zbar.norm() << ",reps=" << opt.reps;
  return finish_mc(IdentityId::B1Stein, config.str(), acc.z_score(), opt);
}

IdentityCheckReport check_wishart_identity(IdentityId which, int dof,
                                           const SpdMatrix& scale,
                                           const CheckOptions& opt) {
  const auto q = scale.dim();
  const int margin = dof - static_cast<int>(q);
  const bool needs_third_moment =
      which == IdentityId::B4InvAInv || which == IdentityId::B5TrinvTimesInv;
  if (needs_third_moment ? margin - 3 <= 0 : margin - 1 <= 0) {
    throw DegreesOfFreedomError("Wishart dof too small for this identity");
  }

  // Diagonal shifts keep tr(A Sigma), tr(B Sigma) away from zero so the
  // perturbed-coefficient controls always move the target.
  RngStream ab_rng(opt.seed ^ 0xAB0ULL, 0);
  const Matrix A_raw = standard_normal_matrix(q, q, ab_rng) +
                       1.5 * Matrix::Identity(q, q);
  const Matrix B_raw = standard_normal_matrix(q, q, ab_rng) +
                       1.5 * Matrix::Identity(q, q);
  const Matrix A_psd = A_raw * A_raw.transpose();

  const Matrix sigma = scale.matrix();
  const Matrix sigma_inv = scale.inverse();
  const double d = dof;
  const double pert = 1.0 + opt.coeff_perturbation;

  Matrix target;
  switch (which) {
    case IdentityId::B2TraceProduct:
      target = Matrix::Constant(
          1, 1,
          d * (A_raw * sigma * B_raw * sigma).trace() +
              d * (A_raw.transpose() * sigma * B_raw * sigma).trace() +
              pert * d * d * (A_raw * sigma).trace() * (B_raw * sigma).trace());
      break;
    case IdentityId::B3WishartInvMean:
      target = pert / (d - q - 1.0) * sigma_inv;
      break;
    case IdentityId::B4InvAInv:
      // The perturbation sits on the dominant second term.
      target = (sigma_inv * A_psd).trace() /
                   ((d - q) * (d - q - 1.0) * (d - q - 3.0)) * sigma_inv +
               pert / ((d - q) * (d - q - 3.0)) * sigma_inv * A_psd * sigma_inv;
      break;
    case IdentityId::B5TrinvTimesInv:
      target = pert * (d - q - 2.0) /
                   ((d - q) * (d - q - 1.0) * (d - q - 3.0)) *
                   sigma_inv.trace() * sigma_inv +
               2.0 / ((d - q) * (d - q - 1.0) * (d - q - 3.0)) * sigma_inv *
                   sigma_inv;
      break;
    case IdentityId::B6TrinvTimesS:
      target = pert * d / (d - q - 1.0) * sigma_inv.trace() * sigma -
               2.0 / (d - q - 1.0) * Matrix::Identity(q, q);
      break;
    case IdentityId::B7SasInv:
      target = (pert * d * sigma * A_raw * sigma_inv - A_raw.transpose() -
                A_raw.trace() * Matrix::Identity(q, q)) /
               (d - q - 1.0);
      break;
    default:
      throw ValidationError("not a Wishart moment identity");
  }

  MatrixMoment acc(target.rows(), target.cols());
  for (long r = 0; r < opt.reps; ++r) {
    RngStream rng(opt.seed, static_cast<std::uint64_t>(r));
    const SpdMatrix S = sample_wishart(dof, scale, rng);
    const Matrix s = S.matrix();
    switch (which) {
      case IdentityId::B2TraceProduct:
        acc.add(Matrix::Constant(1, 1, (A_raw * s).trace() * (B_raw * s).trace()));
        break;
      case IdentityId::B3WishartInvMean:
        acc.add(S.inverse());
        break;
      case IdentityId::B4InvAInv: {
        const Matrix s_inv = S.inverse();
        acc.add(s_inv * A_psd * s_inv);
        break;
      }
      case IdentityId::B5TrinvTimesInv: {
        const Matrix s_inv = S.inverse();
        acc.add(s_inv.trace() * s_inv);
        break;
      }
      case IdentityId::B6TrinvTimesS:
        acc.add(S.inverse().trace() * s);
        break;
      case IdentityId::B7SasInv:
        acc.add(s * A_raw * S.inverse());
        break;
      default:
        break;
    }
  }
  std::ostringstream config;
  config << "d=" << dof << ",q=" << q << ",reps=" << opt.reps;
  return finish_mc(which, config.str(), acc.max_abs_z(target), opt);
}

IdentityCheckReport check_cross_expectation(CrossExpectation which,
                                            const ModelDims& dims,
                                            const Matrix& Zbar,
                                            const CheckOptions& opt,
                                            bool degenerate_s) {
  const int p = dims.p;
  const int q = dims.q;
  const int n = dims.n;
  if (Zbar.rows() != p || Zbar.cols() != q) {
    throw ValidationError("Zbar must be p x q");
  }
  if (p < q + 4) {
    throw ValidationError(
        "cross-expectation moments need p >= q + 4 to be square-integrable");
  }
  if (which == CrossExpectation::Exp && n - p - q - 1 <= 0) {
    throw DegreesOfFreedomError("cross expectation needs n - p - q - 1 > 0");
  }
  const double pert = 1.0 + opt.coeff_perturbation;
  const SpdMatrix wishart_scale =
      which == CrossExpectation::Exp
          ? SpdMatrix(Matrix::Identity(q, q) / static_cast<double>(n))
          : SpdMatrix::identity(q);

  PairedDiff acc;
  for (long r = 0; r < opt.reps; ++r) {
    RngStream rng(opt.seed, static_cast<std::uint64_t>(r));
    const Matrix G = standard_normal_matrix(p, q, rng);
    const Matrix Z = Zbar + G;
    const Matrix W = inv_gram(Z);
    const double t1 = W.trace();
    const double t2 = W.squaredNorm();  // tr(W^2), W symmetric

    double lhs, rhs;
    if (which == CrossExpectation::Exp0) {
      lhs = G.squaredNorm() * t1;
      rhs = static_cast<double>(p) * q * t1 -
            pert * 2.0 * (p - q - 2.0) * t2 + 2.0 * t1 * t1;
    } else {
      Matrix s;
      if (degenerate_s) {
        s = (static_cast<double>(n - p) / n) * Matrix::Identity(q, q);
      } else {
        s = sample_wishart(n - p, wishart_scale, rng).matrix();
      }
      Eigen::LLT<Matrix> s_llt(s);
      const Matrix s_inv = s_llt.solve(Matrix::Identity(q, q));
      lhs = (G.transpose() * G * s_inv).trace() * (s * W).trace();
      const double dof = n - p - q - 1.0;
      rhs = (p * ((n - p) * static_cast<double>(q) - 2.0) * t1 -
             pert * 2.0 * ((n - p - 1.0) * (p - q - 2.0) + 2.0) * t2 +
             2.0 * (n - q - 2.0) * t1 * t1) /
            dof;
    }
    acc.add(lhs, rhs);
  }

  std::ostringstream config;
  config << "n=" << n << ",p=" << p << ",q=" << q
         << ",zbar_norm=" << Zbar.norm() << ",reps=" << opt.reps;
  if (degenerate_s) config << ",degenerate_S";
  IdentityCheckReport report = finish_mc(
      which == CrossExpectation::Exp0 ? IdentityId::B8aExp0 : IdentityId::B8bExp,
      config.str(), acc.z_score(), opt);
  if (degenerate_s) {
    report.negative_control = true;
    report.threshold = opt.control_z;
    report.passed = std::abs(report.statistic) > opt.control_z;
  }
  return report;
}

namespace {

Matrix well_conditioned_normal(Eigen::Index p, Eigen::Index q,
                               std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    RngStream rng(seed, attempt);
    Matrix Z = standard_normal_matrix(p, q, rng);
    Eigen::JacobiSVD<Matrix> svd(Z);
    if (svd.singularValues().minCoeff() >= 0.3) return Z;
  }
  throw NumericError("could not draw a well-conditioned test matrix");
}

}  // namespace

std::vector<IdentityCheckReport> run_default_battery(const BatteryOptions& bat) {
  std::vector<IdentityCheckReport> reports;
  const int ps[] = {6, 8, 12};
  const int qs[] = {1, 2, 3};
  const int dofs[] = {10, 20};
  std::uint64_t salt = 0;
  const auto next_opts = [&](long reps) {
    CheckOptions o;
    o.reps = reps;
    o.seed = bat.seed + 1000003ULL * (++salt);
    return o;
  };

  // Matrix-derivative identities, finite differences.
  for (int p : ps) {
    for (int q : qs) {
      CheckOptions o = next_opts(0);
      const Matrix Z = well_conditioned_normal(p, q, o.seed);
      reports.push_back(check_deriv_inv_gram(Z, o));

      RngStream srng(o.seed ^ 0x51ULL, 0);
      const Matrix root = standard_normal_matrix(q, q, srng);
      const SpdMatrix S(root * root.transpose() +
                        0.5 * Matrix::Identity(q, q));
      reports.push_back(check_deriv_trace(Z, S, o));

      // The closed form needs a symmetric A (every use has A in
      // {I, S, S^{-1}}); B is unrestricted.
      RngStream abrng(o.seed ^ 0xA3ULL, 0);
      const Matrix A_raw = standard_normal_matrix(q, q, abrng);
      const Matrix A_sym = (A_raw + A_raw.transpose()) / 2.0;
      const Matrix B = standard_normal_matrix(q, q, abrng);
      reports.push_back(check_divergence_identity(Z, A_sym, B, o));
    }
  }

  // Integration-by-parts checks over the test-function registry, at a
  // shifted center as used downstream.
  for (int pq_idx = 0; pq_idx < 3; ++pq_idx) {
    const int p = ps[pq_idx];
    const int q = qs[pq_idx];
    for (SteinTestFn fn : {SteinTestFn::Linear, SteinTestFn::Constant,
                           SteinTestFn::InvGram, SteinTestFn::InvGramSq}) {
      CheckOptions o = next_opts(bat.mc_reps);
      RngStream zrng(o.seed ^ 0x2BULL, 0);
      const Matrix Zbar = 0.5 * standard_normal_matrix(p, q, zrng);
      reports.push_back(check_stein(Zbar, fn, o));
    }
  }

  // Wishart moment identities at identity and correlated scale matrices.
  for (int q : qs) {
    for (int dof : dofs) {
      for (int corr = 0; corr < 2; ++corr) {
        Matrix scale = Matrix::Identity(q, q);
        if (corr == 1) {
          scale = Matrix::Constant(q, q, 0.3);
          scale.diagonal().setOnes();
        }
        const SpdMatrix spd_scale(scale);
        for (IdentityId id :
             {IdentityId::B2TraceProduct, IdentityId::B3WishartInvMean,
              IdentityId::B4InvAInv, IdentityId::B5TrinvTimesInv,
              IdentityId::B6TrinvTimesS, IdentityId::B7SasInv}) {
          // Squared-inverse statistics need E||S^-1||^4 finite for a stable
          // standard error: require d - q - 7 > 0 for those two.
          const bool squared_inverse = id == IdentityId::B4InvAInv ||
                                       id == IdentityId::B5TrinvTimesInv;
          if (squared_inverse && dof - q - 7 <= 0) continue;
          CheckOptions o = next_opts(bat.mc_reps);
          reports.push_back(check_wishart_identity(id, dof, spd_scale, o));
        }
      }
    }
  }

  // Cross expectations; combinations below the moment-existence margin are
  // skipped.
  for (int p : ps) {
    for (int q : qs) {
      if (p < q + 4) continue;
      {
        CheckOptions o = next_opts(bat.mc_reps);
        RngStream zrng(o.seed ^ 0x8AULL, 0);
        // A solidly noncentral center keeps the inverse-Gram tails tame at
        // the small p - q margins of the battery.
        const Matrix Zbar = 3.0 * standard_normal_matrix(p, q, zrng);
        reports.push_back(check_cross_expectation(
            CrossExpectation::Exp0, ModelDims{p + 10, p, q}, Zbar, o));
      }
      for (int dof : dofs) {
        const ModelDims dims{p + dof, p, q};
        if (dims.n - p - q - 1 <= 0) continue;
        CheckOptions o = next_opts(bat.mc_reps);
        RngStream zrng(o.seed ^ 0x8BULL, 0);
        const Matrix Zbar = 3.0 * standard_normal_matrix(p, q, zrng);
        reports.push_back(check_cross_expectation(CrossExpectation::Exp, dims,
                                                  Zbar, o));
      }
    }
  }

  if (bat.include_negative_controls) {
    // One 10%-broken coefficient per identity; each must be detected.
    const double delta = 0.10;
    {
      CheckOptions o = next_opts(0);
      o.coeff_perturbation = delta;
      const Matrix Z = well_conditioned_normal(8, 2, o.seed);
      reports.push_back(check_deriv_inv_gram(Z, o));
      RngStream srng(o.seed ^ 0x51ULL, 0);
      const Matrix root = standard_normal_matrix(2, 2, srng);
      const SpdMatrix S(root * root.transpose() + 0.5 * Matrix::Identity(2, 2));
      reports.push_back(check_deriv_trace(Z, S, o));
      // A = B = I makes the perturbed term (tr W)^2, bounded away from 0.
      reports.push_back(check_divergence_identity(Z, Matrix::Identity(2, 2),
                                                  Matrix::Identity(2, 2), o));
    }
    {
      CheckOptions o = next_opts(bat.negative_reps);
      o.coeff_perturbation = delta;
      reports.push_back(check_stein(Matrix::Zero(8, 2), SteinTestFn::InvGramSq, o));
    }
    for (IdentityId id :
         {IdentityId::B2TraceProduct, IdentityId::B3WishartInvMean,
          IdentityId::B4InvAInv, IdentityId::B5TrinvTimesInv,
          IdentityId::B6TrinvTimesS, IdentityId::B7SasInv}) {
      CheckOptions o = next_opts(bat.negative_reps);
      o.coeff_perturbation = delta;
      reports.push_back(
          check_wishart_identity(id, 20, SpdMatrix::identity(2), o));
    }
    {
      CheckOptions o = next_opts(bat.negative_reps);
      o.coeff_perturbation = delta;
      reports.push_back(check_cross_expectation(
          CrossExpectation::Exp0, ModelDims{18, 8, 2}, Matrix::Zero(8, 2), o));
      reports.push_back(check_cross_expectation(
          CrossExpectation::Exp, ModelDims{28, 8, 2}, Matrix::Zero(8, 2), o));
    }
    {
      // Structural control: replacing S by its mean breaks the identity.
      CheckOptions o = next_opts(bat.negative_reps);
      reports.push_back(check_cross_expectation(CrossExpectation::Exp,
                                                ModelDims{28, 8, 2},
                                                Matrix::Zero(8, 2), o, true));
    }
  }
  return reports;
}

bool battery_ok(const std::vector<IdentityCheckReport>& reports) {
  for (const auto& r : reports) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace mvic::verify
