#include "tbss/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "tbss/errors.hpp"
#include "tbss/moments.hpp"

namespace tbss {

namespace {

constexpr double kLowKappaSpread = 0.1;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Flips column signs so the largest-magnitude entry (first such index on
// ties) of every column is positive.
void canonicalize_columns(Eigen::MatrixXd& m) {
  for (index_t j = 0; j < m.cols(); ++j) {
    index_t arg = 0;
    m.col(j).cwiseAbs().maxCoeff(&arg);
    if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
  }
}

void canonicalize_rows(Eigen::MatrixXd& m) {
  for (index_t i = 0; i < m.rows(); ++i) {
    index_t arg = 0;
    m.row(i).cwiseAbs().maxCoeff(&arg);
    if (m(i, arg) < 0.0) m.row(i) = -m.row(i);
  }
}

// Eigenvectors of a symmetric matrix, columns ordered by descending
// eigenvalue and sign-canonicalized.
Eigen::MatrixXd eigenvectors_descending(const Eigen::MatrixXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::internal, "eigendecomposition failed");
  Eigen::MatrixXd v = eig.eigenvectors().rowwise().reverse();
  canonicalize_columns(v);
  return v;
}

struct ModeEstimate {
  Eigen::MatrixXd gamma;
  int sweeps_used = 0;
  bool converged = true;
};

// Core matrix-model estimator on a centered sample: two-sided standardization,
// then the method-specific rotation.  Composes gamma against the left
// whitening only; the right factor is absorbed by the model.
ModeEstimate estimate_matrix_mode(const MatrixSample& centered, Method method, index_t k,
                                  const JointDiagConfig& jd, const std::string& where) {
  const index_t p = centered.p();
  const index_t q = centered.q();
  const index_t n = centered.n();

  Eigen::MatrixXd s1, s2;
  try {
    s1 = sym_inv_sqrt(left_cov(centered));
    s2 = sym_inv_sqrt(right_cov(centered));
  } catch (const Error& e) {
    fail(e.code(), where + ": " + e.what());
  }

  MatrixSample y(p, q, n);
  for (index_t t = 0; t < n; ++t)
    y.observation(t).noalias() = s1 * centered.observation(t) * s2;

  ModeEstimate out;
  if (method == Method::tfobi) {
    const Eigen::MatrixXd h = eigenvectors_descending(fobi_matrix(y));
    out.gamma = h.transpose() * s1;
  } else if (method == Method::ktjade) {
    const Eigen::MatrixXd h = eigenvectors_descending(fobi_matrix(y));
    MatrixSample f(p, q, n);
    for (index_t t = 0; t < n; ++t)
      f.observation(t).noalias() = h.transpose() * y.observation(t);
    const CumulantSet set = cumulant_set(f, k);
    const JointDiagResult rot = joint_diagonalize(set.matrices, jd, set.weights);
    out.sweeps_used = rot.sweeps_used;
    out.converged = rot.converged;
    out.gamma = rot.rotation.transpose() * h.transpose() * s1;
  } else if (method == Method::tjade) {
    const CumulantSet set = cumulant_set(y, p);
    const JointDiagResult rot = joint_diagonalize(set.matrices, jd, set.weights);
    out.sweeps_used = rot.sweeps_used;
    out.converged = rot.converged;
    out.gamma = rot.rotation.transpose() * s1;
  } else {
    fail(ErrorCode::invalid_argument, where + ": no estimator selected");
  }
  canonicalize_rows(out.gamma);
  return out;
}

void validate_spec(const ModeSpec& spec, index_t p, const std::string& where) {
  if (spec.method == Method::ktjade && (spec.k < 1 || spec.k > p))
    fail(ErrorCode::invalid_argument,
         where + ": band width k = " + std::to_string(spec.k) + " out of range 1.." +
             std::to_string(p));
}

// Orders rows of every unmixed mode by descending kappa of the final latent,
// keeps the latent consistent, and fills the kappa diagnostics.
void finalize_ordering(UnmixingResult& res, TensorSample& latent) {
  res.kappas = mode_kurtosis(latent);
  for (std::size_t m = 0; m < res.gammas.size(); ++m) {
    Eigen::VectorXd& kappa = res.kappas[m];
    const index_t p = kappa.size();
    if (!res.diagnostics[m].skipped) {
      std::vector<index_t> order(static_cast<std::size_t>(p));
      std::iota(order.begin(), order.end(), index_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&kappa](index_t a, index_t b) { return kappa[a] > kappa[b]; });
      Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(p, p);
      for (index_t i = 0; i < p; ++i) perm(i, order[static_cast<std::size_t>(i)]) = 1.0;
      res.gammas[m] = perm * res.gammas[m];
      latent = m_mode_multiply(latent, perm, static_cast<int>(m) + 1);
      Eigen::VectorXd sorted(p);
      for (index_t i = 0; i < p; ++i) sorted[i] = kappa[order[static_cast<std::size_t>(i)]];
      kappa = sorted;
    }
    res.diagnostics[m].kappa_spread = kappa.maxCoeff() - kappa.minCoeff();
    res.diagnostics[m].low_kappa_spread =
        !res.diagnostics[m].skipped && res.diagnostics[m].kappa_spread < kLowKappaSpread;
  }
  res.latent = std::move(latent);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::skip: return "skip";
    case Method::tfobi: return "tfobi";
    case Method::tjade: return "tjade";
    case Method::ktjade: return "ktjade";
  }
  fail(ErrorCode::internal, "unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "skip") return Method::skip;
  if (name == "tfobi") return Method::tfobi;
  if (name == "tjade") return Method::tjade;
  if (name == "ktjade") return Method::ktjade;
  fail(ErrorCode::invalid_argument, "unknown method name: " + name);
}

std::vector<Eigen::VectorXd> mode_kurtosis(const TensorSample& s) {
  if (s.n() < 1) fail(ErrorCode::insufficient_sample, "empty sample");
  const index_t cells = s.cell_count();
  const index_t n = s.n();
  const index_t r = s.order();
  std::vector<double> m4(static_cast<std::size_t>(cells), 0.0);
  for (index_t t = 0; t < n; ++t) {
    const double* obs = s.observation(t);
    for (index_t c = 0; c < cells; ++c) {
      const double v2 = obs[c] * obs[c];
      m4[static_cast<std::size_t>(c)] += v2 * v2;
    }
  }
  std::vector<Eigen::VectorXd> kappa;
  kappa.reserve(static_cast<std::size_t>(r));
  for (index_t m = 0; m < r; ++m)
    kappa.push_back(Eigen::VectorXd::Zero(s.dims()[static_cast<std::size_t>(m)]));
  std::vector<index_t> digit(static_cast<std::size_t>(r), 0);
  for (index_t c = 0; c < cells; ++c) {
    const double v = m4[static_cast<std::size_t>(c)] / static_cast<double>(n) - 3.0;
    for (index_t m = 0; m < r; ++m) kappa[m][digit[static_cast<std::size_t>(m)]] += v;
    for (index_t m = r - 1; m >= 0; --m) {
      auto& d = digit[static_cast<std::size_t>(m)];
      if (++d < s.dims()[static_cast<std::size_t>(m)]) break;
      d = 0;
    }
  }
  for (index_t m = 0; m < r; ++m)
    kappa[m] *= static_cast<double>(s.dims()[static_cast<std::size_t>(m)]) /
                static_cast<double>(cells);
  return kappa;
}

UnmixingResult fit(const TensorSample& s, const ModePlan& plan, const FitConfig& cfg) {
  const index_t r = s.order();
  if (static_cast<index_t>(plan.size()) != r)
    fail(ErrorCode::invalid_argument,
         "plan covers " + std::to_string(plan.size()) + " modes, sample has " +
             std::to_string(r));
  if (s.n() < 2) fail(ErrorCode::insufficient_sample, "fit needs at least 2 observations");
  for (index_t m = 0; m < r; ++m)
    validate_spec(plan[static_cast<std::size_t>(m)], s.dims()[static_cast<std::size_t>(m)],
                  "mode " + std::to_string(m + 1));

  UnmixingResult res;
  res.dims = s.dims();
  res.n = s.n();
  res.vectorized = false;
  res.gammas.resize(static_cast<std::size_t>(r));
  res.diagnostics.resize(static_cast<std::size_t>(r));

  TensorSample cur = s;
  center_in_place(cur);
  for (index_t m = 0; m < r; ++m) {
    const ModeSpec& spec = plan[static_cast<std::size_t>(m)];
    const index_t p = s.dims()[static_cast<std::size_t>(m)];
    ModeDiagnostics& diag = res.diagnostics[static_cast<std::size_t>(m)];
    diag.method = spec.method;
    diag.k = spec.method == Method::ktjade ? spec.k : 0;
    diag.skipped = spec.method == Method::skip;
    if (diag.skipped) {
      res.gammas[static_cast<std::size_t>(m)] = Eigen::MatrixXd::Identity(p, p);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    MatrixSample ms = matricize_sample(cur, static_cast<int>(m) + 1);
    center_in_place(ms);
    const ModeEstimate est = estimate_matrix_mode(ms, spec.method, spec.k, cfg.jd,
                                                  "mode " + std::to_string(m + 1));
    cur = m_mode_multiply(cur, est.gamma, static_cast<int>(m) + 1);
    res.gammas[static_cast<std::size_t>(m)] = est.gamma;
    diag.sweeps_used = est.sweeps_used;
    diag.converged = est.converged;
    diag.stage_ms = elapsed_ms(t0);
  }
  finalize_ordering(res, cur);
  return res;
}

UnmixingResult fit_vectorized(const TensorSample& s, Method method, index_t k,
                              const FitConfig& cfg) {
  if (method == Method::skip)
    fail(ErrorCode::invalid_argument, "vectorized fit needs an estimator");
  if (s.n() < 2) fail(ErrorCode::insufficient_sample, "fit needs at least 2 observations");
  const index_t rho = s.cell_count();
  if (rho > cfg.rho_cap)
    fail(ErrorCode::size_limit,
         "vectorized fit with rho = " + std::to_string(rho) + " exceeds the cap of " +
             std::to_string(cfg.rho_cap) + "; raise rho_cap to allow it");
  ModeSpec spec{method, k};
  validate_spec(spec, rho, "vectorized");

  UnmixingResult res;
  res.dims = s.dims();
  res.n = s.n();
  res.vectorized = true;
  res.gammas.resize(1);
  res.diagnostics.resize(1);

  const auto t0 = std::chrono::steady_clock::now();
  TensorSample vec({rho}, s.n());
  for (index_t t = 0; t < s.n(); ++t) {
    const Eigen::VectorXd v = vectorize(s.tensor(t));
    std::copy(v.data(), v.data() + rho, vec.observation(t));
  }
  center_in_place(vec);
  MatrixSample ms = matricize_sample(vec, 1);
  const ModeEstimate est = estimate_matrix_mode(ms, method, k, cfg.jd, "vectorized");
  TensorSample latent = m_mode_multiply(vec, est.gamma, 1);
  res.gammas[0] = est.gamma;
  ModeDiagnostics& diag = res.diagnostics[0];
  diag.method = method;
  diag.k = method == Method::ktjade ? k : 0;
  diag.skipped = false;
  diag.sweeps_used = est.sweeps_used;
  diag.converged = est.converged;
  diag.stage_ms = elapsed_ms(t0);
  finalize_ordering(res, latent);
  return res;
}

namespace {

UnmixingResult single_mode(const TensorSample& s, int mode, Method method, index_t k,
                           const FitConfig& cfg) {
  if (mode < 1 || mode > s.order())
    fail(ErrorCode::invalid_argument, "mode " + std::to_string(mode) + " out of range");
  ModePlan plan(static_cast<std::size_t>(s.order()), ModeSpec{Method::skip, 0});
  plan[static_cast<std::size_t>(mode - 1)] = ModeSpec{method, k};
  return fit(s, plan, cfg);
}

}  // namespace

UnmixingResult tfobi_mode(const TensorSample& s, int mode, const FitConfig& cfg) {
  return single_mode(s, mode, Method::tfobi, 0, cfg);
}

UnmixingResult tjade_mode(const TensorSample& s, int mode, const FitConfig& cfg) {
  return single_mode(s, mode, Method::tjade, 0, cfg);
}

UnmixingResult k_tjade_mode(const TensorSample& s, int mode, index_t k,
                            const FitConfig& cfg) {
  return single_mode(s, mode, Method::ktjade, k, cfg);
}

}  // namespace tbss
