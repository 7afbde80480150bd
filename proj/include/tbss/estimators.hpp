#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbss/jointdiag.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

enum class Method { skip, tfobi, tjade, ktjade };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Per-mode instruction: which estimator to run and, for ktjade, the band
/// width k (1 <= k <= p_m; k = p_m diagonalizes the full cumulant family).
struct ModeSpec {
  Method method = Method::ktjade;
  index_t k = 1;
};

using ModePlan = std::vector<ModeSpec>;

struct FitConfig {
  JointDiagConfig jd;
  index_t rho_cap = 64;  // vectorized fits refuse rho above this
};

struct ModeDiagnostics {
  Method method = Method::skip;
  index_t k = 0;
  bool skipped = true;
  int sweeps_used = 0;
  bool converged = true;  // joint diagonalization hitting max_sweeps flips this
  double stage_ms = 0.0;
  double kappa_spread = 0.0;      // max - min of the mode's kappa estimates
  bool low_kappa_spread = false;  // spread < 0.1: source order is unreliable
};

/// Outcome of a fit.  gammas[m] is the p_m x p_m unmixing matrix of mode m+1
/// (identity for skipped modes); latent always equals the centered input with
/// every gamma applied (m-mode multiplication).  Within each unmixed mode the
/// rows are ordered by non-increasing kappa (mean excess kurtosis of the final
/// latent, estimated as row means of fourth moments minus 3) and each row is
/// signed so that its largest-magnitude entry is positive.
struct UnmixingResult {
  std::vector<index_t> dims;
  index_t n = 0;
  bool vectorized = false;
  std::vector<Eigen::MatrixXd> gammas;
  std::vector<Eigen::VectorXd> kappas;
  std::vector<ModeDiagnostics> diagnostics;
  TensorSample latent;
};

/// Runs the per-mode estimators in mode order 1..r, each on the sample with
/// all previously fitted modes already rotated.
UnmixingResult fit(const TensorSample& s, const ModePlan& plan, const FitConfig& cfg = {});

/// Vectorizes the observations and runs the matrix estimator on rho x 1 data;
/// the single rho x rho unmixing is returned in gammas[0].
UnmixingResult fit_vectorized(const TensorSample& s, Method method, index_t k,
                              const FitConfig& cfg = {});

/// Single-mode conveniences: the named estimator on one mode, others skipped.
UnmixingResult tfobi_mode(const TensorSample& s, int mode, const FitConfig& cfg = {});
UnmixingResult tjade_mode(const TensorSample& s, int mode, const FitConfig& cfg = {});
UnmixingResult k_tjade_mode(const TensorSample& s, int mode, index_t k,
                            const FitConfig& cfg = {});

/// Per-mode row means of cellwise (fourth moment - 3) across observations.
std::vector<Eigen::VectorXd> mode_kurtosis(const TensorSample& s);

}  // namespace tbss
