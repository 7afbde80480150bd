#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbss/estimators.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

enum class Dist { normal, uniform, exponential, chisq, gamma };

/// A marginal distribution, standardized analytically to mean 0 and variance 1
/// at sampling time.  param is the degrees of freedom (chisq) or the shape
/// (gamma); unused otherwise.
struct DistributionSpec {
  Dist dist = Dist::normal;
  double param = 0.0;

  /// Analytic excess kurtosis: 0 (normal), -6/5 (uniform), 6 (exponential),
  /// 12/nu (chisq), 6/alpha (gamma).
  double excess_kurtosis() const;
};

/// Grid of i.i.d. cell distributions, row-major over dims (last index fastest).
struct LatentLayout {
  std::vector<index_t> dims;
  std::vector<DistributionSpec> cells;

  /// Per-mode means of the analytic cell kurtoses (the population kappa).
  std::vector<Eigen::VectorXd> mode_kurtosis_means() const;
};

enum class Mixing { identity, orthogonal, gaussian };

std::string mixing_name(Mixing m);
Mixing mixing_from_name(const std::string& name);

/// A named estimator resolved against a sample shape.  Accepted names:
/// "tfobi", "tjade", "<digits>-tjade" (one digit per mode, 0 = skip),
/// "ktjade:k1,k2,..." (same, for extents above 9), "vfobi", "vjade",
/// "<k>-vjade" and "kvjade:<k>".
struct EstimatorSpec {
  std::string name;
  bool vectorized = false;
  Method method = Method::ktjade;
  std::vector<index_t> ks;
};

EstimatorSpec parse_estimator(const std::string& name, const std::vector<index_t>& dims);

/// Runs a parsed estimator: tensorial plans go through fit, vectorized ones
/// through fit_vectorized.
UnmixingResult fit_estimator(const TensorSample& s, const EstimatorSpec& est,
                             const FitConfig& cfg);

using rng_t = std::mt19937_64;

/// Deterministic stream derivation (splitmix64 rounds); used to give every
/// (replicate, cell) its own generator so results do not depend on scheduling.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                       std::uint64_t d = 0);

/// n independent tensors with independent standardized entries per the layout.
TensorSample sample_latent(const LatentLayout& layout, index_t n, std::uint64_t seed);

/// Haar-distributed orthogonal matrix: QR of an i.i.d. Gaussian matrix with
/// the sign ambiguity folded by making the R diagonal non-negative.
Eigen::MatrixXd haar_orthogonal(index_t p, rng_t& gen);

/// The three study layouts: 1 is a 3x3 grid with tied row-kurtosis means,
/// 2 is a 3x3x4 grid, 3 is a 3x3 gamma grid with nearly tied kurtoses.
LatentLayout setting_layout(int setting);

/// 3 x q grid with cell (i, j) ~ chisq(3 (j - 1) + i), for timing runs.
LatentLayout timing_layout(index_t q);

struct ExperimentSpec {
  LatentLayout layout;
  std::vector<index_t> sample_sizes;
  index_t replicates = 50;
  std::vector<Mixing> scenarios{Mixing::identity};
  std::vector<std::string> estimators;
  std::uint64_t seed = 1001;
  FitConfig fit;
};

/// Spec with the given setting's layout and its default estimator list.
ExperimentSpec preset_experiment(int setting);

/// Per-(estimator, scenario, n) replicate-level outcomes.  Failed replicates
/// hold NaN and are excluded from the aggregates.
struct ExperimentCell {
  std::string estimator;
  Mixing scenario = Mixing::identity;
  index_t n = 0;
  std::vector<double> md;
  std::vector<double> tmd;
  std::vector<double> fit_ms;
  index_t failures = 0;

  double mean_tmd() const;
  double sd_tmd() const;
  double median_md() const;
  double mean_fit_ms() const;
};

struct ExperimentResult {
  std::vector<ExperimentCell> cells;  // ordered by (n, scenario, estimator)
};

/// Runs the full grid.  Every replicate owns derived RNG streams, so the
/// result is identical for any thread count.  Latent draws are shared across
/// scenarios and estimators within a replicate; mixing matrices are drawn
/// fresh per replicate and scenario.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1);

struct TimingRow {
  std::string estimator;
  index_t q = 0;
  index_t n = 0;
  int iterations = 0;
  double mean_seconds = 0.0;
};

/// Mean wall time of fitting each estimator on fresh timing-layout data, per
/// grid width q.
std::vector<TimingRow> run_timing(const std::vector<index_t>& widths, index_t n,
                                  const std::vector<std::string>& estimators,
                                  std::uint64_t seed, int iterations,
                                  const FitConfig& cfg = {});

}  // namespace tbss
