#pragma once

#include <string>
#include <vector>

#include "mvic/matstat.hpp"

namespace mvic::verify {

enum class IdentityId {
  A1InvGramDeriv,
  A2TraceDeriv,
  A3Divergence,
  B1Stein,
  B2TraceProduct,
  B3WishartInvMean,
  B4InvAInv,
  B5TrinvTimesInv,
  B6TrinvTimesS,
  B7SasInv,
  B8aExp0,
  B8bExp,
};

std::string to_string(IdentityId id);

// Result of one identity check. Finite-difference checks report a
// max-absolute-error statistic against `threshold`; Monte Carlo checks report
// a z-score (max componentwise |z| for matrix identities). For negative
// controls `passed` means the deliberately broken identity was detected
// (statistic above the control threshold).
struct IdentityCheckReport {
  IdentityId id = IdentityId::A1InvGramDeriv;
  std::string config;
  std::string statistic_kind;  // "max_abs_error" or "z_score"
  double statistic = 0.0;
  double threshold = 0.0;
  bool passed = false;
  bool negative_control = false;
};

// Knobs shared by the individual checks. `coeff_perturbation` scales one
// designated closed-form coefficient by (1 + value); nonzero values turn the
// check into a negative control that must trip.
struct CheckOptions {
  double fd_step = 1e-5;        // central-difference base step
  double fd_tolerance = 1e-5;   // max abs error for FD identities
  double z_threshold = 3.0;     // |z| bound for MC identities
  long reps = 100000;
  std::uint64_t seed = 0x5eedf00dULL;
  double coeff_perturbation = 0.0;
  double control_z = 5.0;       // negative controls must exceed this
};

// d/dZ_ij of each entry of (Z^T Z)^{-1} against central differences.
IdentityCheckReport check_deriv_inv_gram(const Matrix& Z,
                                         const CheckOptions& opt = {});

// d/dZ_ij of tr(S (Z^T Z)^{-1}) against -2 (Z (Z^T Z)^{-1} S (Z^T Z)^{-1}).
IdentityCheckReport check_deriv_trace(const Matrix& Z, const SpdMatrix& S,
                                      const CheckOptions& opt = {});

// Divergence of Z (Z^T Z)^{-1} A (Z^T Z)^{-1} B against
// (p-q-2) tr((Z^T Z)^{-1} A (Z^T Z)^{-1} B) - tr(A (Z^T Z)^{-1}) tr((Z^T Z)^{-1} B).
IdentityCheckReport check_divergence_identity(const Matrix& Z, const Matrix& A,
                                              const Matrix& B,
                                              const CheckOptions& opt = {});

// Registry of smooth test functions for the integration-by-parts identity
// E[tr((Z - Zbar)^T g(Z))] = E[sum_ij dg_ij/dZ_ij].
enum class SteinTestFn { Linear, Constant, InvGram, InvGramSq };

std::string to_string(SteinTestFn fn);

IdentityCheckReport check_stein(const Matrix& Zbar, SteinTestFn g,
                                const CheckOptions& opt = {});

// Wishart moment identities (B2..B7). A and B test matrices are generated
// internally from opt.seed and recorded in the report config.
IdentityCheckReport check_wishart_identity(IdentityId which, int dof,
                                           const SpdMatrix& scale,
                                           const CheckOptions& opt = {});

// Cross expectations combining the trace moments of (Z^T Z)^{-1}:
// Exp0 couples tr((Z-Zbar)^T (Z-Zbar)) with tr((Z^T Z)^{-1});
// Exp adds an independent S ~ W_q(n-p, I/n) on both sides. Both compare a
// direct MC estimate of the product against the closed-form combination of
// the three trace moments, evaluated on shared draws.
enum class CrossExpectation { Exp0, Exp };

// When `degenerate_s` is set, S is frozen at its mean (n-p)/n I; the identity
// then fails and the check doubles as a structural negative control.
IdentityCheckReport check_cross_expectation(CrossExpectation which,
                                            const ModelDims& dims,
                                            const Matrix& Zbar,
                                            const CheckOptions& opt = {},
                                            bool degenerate_s = false);

struct BatteryOptions {
  long mc_reps = 100000;
  long negative_reps = 1000000;
  std::uint64_t seed = 0x5eedf00dULL;
  bool include_negative_controls = true;
};

// The default battery: every identity over p in {6,8,12}, q in {1,2,3},
// dof in {10,20} (combinations violating moment-existence margins are
// skipped), plus one negative control per identity when enabled.
std::vector<IdentityCheckReport> run_default_battery(
    const BatteryOptions& opt = {});

// True iff every row passed (for negative controls: tripped as intended).
bool battery_ok(const std::vector<IdentityCheckReport>& reports);

}  // namespace mvic::verify
