#include "tbss.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tbss/errors.hpp"
#include "tbss/estimators.hpp"
#include "tbss/io.hpp"
#include "tbss/metrics.hpp"
#include "tbss/simulation.hpp"
#include "tbss/tensor.hpp"

struct tbss_sample {
  tbss::TensorSample impl;
};

struct tbss_result {
  tbss::UnmixingResult impl;
  tbss::JointDiagConfig jd;
};

namespace {

thread_local std::string g_last_error;

tbss_status status_of(tbss::ErrorCode code) {
  switch (code) {
    case tbss::ErrorCode::invalid_argument: return TBSS_INVALID_ARGUMENT;
    case tbss::ErrorCode::shape_mismatch: return TBSS_SHAPE_MISMATCH;
    case tbss::ErrorCode::insufficient_sample: return TBSS_INSUFFICIENT_SAMPLE;
    case tbss::ErrorCode::singular_covariance: return TBSS_SINGULAR_COVARIANCE;
    case tbss::ErrorCode::size_limit: return TBSS_SIZE_LIMIT;
    case tbss::ErrorCode::io_error: return TBSS_IO_ERROR;
    case tbss::ErrorCode::internal: return TBSS_INTERNAL;
  }
  return TBSS_INTERNAL;
}

tbss_status set_error(tbss_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

/// Runs fn, routing exceptions into the status/last-error protocol.
template <typename Fn>
tbss_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TBSS_OK;
  } catch (const tbss::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TBSS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TBSS_INTERNAL, e.what());
  } catch (...) {
    return set_error(TBSS_INTERNAL, "unknown error");
  }
}

tbss_status require(bool ok, const char* message) {
  return ok ? TBSS_OK : set_error(TBSS_INVALID_ARGUMENT, message);
}

tbss::FitConfig fit_config(const tbss_fit_options* opts) {
  tbss::FitConfig cfg;
  if (opts != nullptr) {
    cfg.jd.tolerance = opts->tolerance;
    cfg.jd.max_sweeps = opts->max_sweeps;
    cfg.rho_cap = opts->rho_cap;
  }
  return cfg;
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::vector<std::string> split_csv(const char* csv) {
  std::vector<std::string> items;
  if (csv == nullptr) return items;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
    while (!tok.empty() && tok.back() == ' ') tok.pop_back();
    if (!tok.empty()) items.push_back(tok);
  }
  return items;
}

}  // namespace

extern "C" {

const char* tbss_version(void) { return "1.0.0"; }

const char* tbss_last_error(void) { return g_last_error.c_str(); }

tbss_status tbss_sample_create(const int64_t* dims, size_t order, int64_t n,
                               const double* data, tbss_sample** out) {
  if (tbss_status s = require(out && dims && order > 0, "null argument")) return s;
  return guarded([&] {
    std::vector<tbss::index_t> d(dims, dims + order);
    auto sample = std::make_unique<tbss_sample>(
        tbss_sample{tbss::TensorSample(d, static_cast<tbss::index_t>(n))});
    if (data != nullptr)
      std::memcpy(sample->impl.data().data(), data,
                  sample->impl.data().size() * sizeof(double));
    *out = sample.release();
  });
}

tbss_status tbss_sample_read(const char* path, tbss_sample** out) {
  if (tbss_status s = require(out && path, "null argument")) return s;
  return guarded([&] { *out = new tbss_sample{tbss::read_sample(path)}; });
}

tbss_status tbss_sample_read_csv(const char* path, const int64_t* dims, size_t order,
                                 tbss_sample** out) {
  if (tbss_status s = require(out && path && dims && order > 0, "null argument"))
    return s;
  return guarded([&] {
    std::vector<tbss::index_t> d(dims, dims + order);
    *out = new tbss_sample{tbss::read_sample_csv(path, d)};
  });
}

tbss_status tbss_sample_write(const tbss_sample* s, const char* path) {
  if (tbss_status st = require(s && path, "null argument")) return st;
  return guarded([&] { tbss::write_sample(s->impl, path); });
}

size_t tbss_sample_order(const tbss_sample* s) {
  return s ? static_cast<size_t>(s->impl.order()) : 0;
}

int64_t tbss_sample_dim(const tbss_sample* s, size_t mode) {
  if (!s || mode < 1 || mode > s->impl.dims().size()) return 0;
  return s->impl.dims()[mode - 1];
}

int64_t tbss_sample_n(const tbss_sample* s) { return s ? s->impl.n() : 0; }

const double* tbss_sample_data(const tbss_sample* s) {
  return s ? s->impl.data().data() : nullptr;
}

void tbss_sample_free(tbss_sample* s) { delete s; }

void tbss_fit_options_init(tbss_fit_options* opts) {
  if (opts == nullptr) return;
  tbss::FitConfig defaults;
  opts->tolerance = defaults.jd.tolerance;
  opts->max_sweeps = defaults.jd.max_sweeps;
  opts->rho_cap = defaults.rho_cap;
}

tbss_status tbss_fit(const tbss_sample* s, const char* const* methods,
                     const int64_t* ks, size_t n_modes, const tbss_fit_options* opts,
                     tbss_result** out) {
  if (tbss_status st = require(s && methods && out, "null argument")) return st;
  return guarded([&] {
    if (n_modes != s->impl.dims().size())
      tbss::fail(tbss::ErrorCode::shape_mismatch,
                 "plan has " + std::to_string(n_modes) + " modes, sample has " +
                     std::to_string(s->impl.dims().size()));
    tbss::ModePlan plan(n_modes);
    for (size_t m = 0; m < n_modes; ++m) {
      if (methods[m] == nullptr)
        tbss::fail(tbss::ErrorCode::invalid_argument, "null method name");
      plan[m].method = tbss::method_from_name(methods[m]);
      plan[m].k = ks ? ks[m] : 1;
    }
    const tbss::FitConfig cfg = fit_config(opts);
    auto result = std::make_unique<tbss_result>();
    result->impl = tbss::fit(s->impl, plan, cfg);
    result->jd = cfg.jd;
    *out = result.release();
  });
}

tbss_status tbss_fit_vectorized(const tbss_sample* s, const char* method, int64_t k,
                                const tbss_fit_options* opts, tbss_result** out) {
  if (tbss_status st = require(s && method && out, "null argument")) return st;
  return guarded([&] {
    const tbss::FitConfig cfg = fit_config(opts);
    auto result = std::make_unique<tbss_result>();
    result->impl = tbss::fit_vectorized(s->impl, tbss::method_from_name(method), k, cfg);
    result->jd = cfg.jd;
    *out = result.release();
  });
}

tbss_status tbss_fit_named(const tbss_sample* s, const char* estimator,
                           const tbss_fit_options* opts, tbss_result** out) {
  if (tbss_status st = require(s && estimator && out, "null argument")) return st;
  return guarded([&] {
    const tbss::EstimatorSpec spec = tbss::parse_estimator(estimator, s->impl.dims());
    const tbss::FitConfig cfg = fit_config(opts);
    auto result = std::make_unique<tbss_result>();
    result->impl = tbss::fit_estimator(s->impl, spec, cfg);
    result->jd = cfg.jd;
    *out = result.release();
  });
}

int tbss_result_vectorized(const tbss_result* r) {
  return (r && r->impl.vectorized) ? 1 : 0;
}

size_t tbss_result_mode_count(const tbss_result* r) {
  return r ? r->impl.gammas.size() : 0;
}

int64_t tbss_result_mode_dim(const tbss_result* r, size_t mode) {
  if (!r || mode < 1 || mode > r->impl.gammas.size()) return 0;
  return r->impl.gammas[mode - 1].rows();
}

int64_t tbss_result_n(const tbss_result* r) { return r ? r->impl.n : 0; }

tbss_status tbss_result_unmixing(const tbss_result* r, size_t mode, double* out) {
  if (tbss_status st = require(r && out, "null argument")) return st;
  if (tbss_status st = require(mode >= 1 && mode <= r->impl.gammas.size(),
                               "mode out of range"))
    return st;
  return guarded([&] {
    const Eigen::MatrixXd& g = r->impl.gammas[mode - 1];
    for (tbss::index_t i = 0; i < g.rows(); ++i)
      for (tbss::index_t j = 0; j < g.cols(); ++j) *out++ = g(i, j);
  });
}

tbss_status tbss_result_kurtosis(const tbss_result* r, size_t mode, double* out) {
  if (tbss_status st = require(r && out, "null argument")) return st;
  if (tbss_status st = require(mode >= 1 && mode <= r->impl.kappas.size(),
                               "mode out of range"))
    return st;
  return guarded([&] {
    const Eigen::VectorXd& k = r->impl.kappas[mode - 1];
    for (tbss::index_t i = 0; i < k.size(); ++i) out[i] = k[i];
  });
}

const char* tbss_result_mode_method(const tbss_result* r, size_t mode) {
  if (!r || mode < 1 || mode > r->impl.diagnostics.size()) return nullptr;
  switch (r->impl.diagnostics[mode - 1].method) {
    case tbss::Method::skip: return "skip";
    case tbss::Method::tfobi: return "tfobi";
    case tbss::Method::tjade: return "tjade";
    case tbss::Method::ktjade: return "ktjade";
  }
  return nullptr;
}

int64_t tbss_result_mode_k(const tbss_result* r, size_t mode) {
  if (!r || mode < 1 || mode > r->impl.diagnostics.size()) return 0;
  return r->impl.diagnostics[mode - 1].k;
}

tbss_status tbss_result_mode_stats(const tbss_result* r, size_t mode, int* sweeps,
                                   int* converged, double* stage_ms,
                                   double* kappa_spread, int* low_kappa_spread) {
  if (tbss_status st = require(r != nullptr, "null argument")) return st;
  if (tbss_status st = require(mode >= 1 && mode <= r->impl.diagnostics.size(),
                               "mode out of range"))
    return st;
  const tbss::ModeDiagnostics& d = r->impl.diagnostics[mode - 1];
  if (sweeps) *sweeps = d.sweeps_used;
  if (converged) *converged = d.converged ? 1 : 0;
  if (stage_ms) *stage_ms = d.stage_ms;
  if (kappa_spread) *kappa_spread = d.kappa_spread;
  if (low_kappa_spread) *low_kappa_spread = d.low_kappa_spread ? 1 : 0;
  g_last_error.clear();
  return TBSS_OK;
}

tbss_status tbss_result_latent(const tbss_result* r, tbss_sample** out) {
  if (tbss_status st = require(r && out, "null argument")) return st;
  if (tbss_status st = require(r->impl.latent.n() > 0,
                               "result carries no latent sample"))
    return st;
  return guarded([&] { *out = new tbss_sample{r->impl.latent}; });
}

tbss_status tbss_result_to_json(const tbss_result* r, char** out) {
  if (tbss_status st = require(r && out, "null argument")) return st;
  return guarded([&] { *out = copy_string(tbss::result_to_json(r->impl, r->jd)); });
}

tbss_status tbss_result_write(const tbss_result* r, const char* path) {
  if (tbss_status st = require(r && path, "null argument")) return st;
  return guarded([&] { tbss::write_result(r->impl, r->jd, path); });
}

tbss_status tbss_result_read(const char* path, tbss_result** out) {
  if (tbss_status st = require(path && out, "null argument")) return st;
  return guarded([&] {
    auto result = std::make_unique<tbss_result>();
    result->impl = tbss::read_result(path);
    *out = result.release();
  });
}

void tbss_result_free(tbss_result* r) { delete r; }

tbss_status tbss_md_index(const double* gain, int64_t rows, int64_t cols, double* out) {
  if (tbss_status st = require(gain && out, "null argument")) return st;
  return guarded([&] {
    if (rows != cols)
      tbss::fail(tbss::ErrorCode::shape_mismatch, "gain matrix must be square");
    Eigen::MatrixXd g(rows, cols);
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) g(i, j) = gain[i * cols + j];
    *out = tbss::md_index(g);
  });
}

tbss_status tbss_md_between(const tbss_result* a, const tbss_result* b, double* out) {
  if (tbss_status st = require(a && b && out, "null argument")) return st;
  return guarded([&] {
    if (a->impl.gammas.size() != b->impl.gammas.size())
      tbss::fail(tbss::ErrorCode::shape_mismatch,
                 "results have different mode counts");
    for (size_t m = 0; m < a->impl.gammas.size(); ++m) {
      const Eigen::MatrixXd& ga = a->impl.gammas[m];
      const Eigen::MatrixXd& gb = b->impl.gammas[m];
      if (ga.rows() != gb.rows())
        tbss::fail(tbss::ErrorCode::shape_mismatch,
                   "mode " + std::to_string(m + 1) + " dimensions differ");
      out[m] = tbss::md_index(ga * gb.inverse());
    }
  });
}

tbss_status tbss_scree(const tbss_sample* s, size_t mode, const tbss_fit_options* opts,
                       char** out_tsv) {
  if (tbss_status st = require(s && out_tsv, "null argument")) return st;
  return guarded([&] {
    const auto points =
        tbss::scree(s->impl, static_cast<int>(mode), fit_config(opts));
    *out_tsv = copy_string(tbss::render_scree_tsv(static_cast<int>(mode), points));
  });
}

tbss_status tbss_simulate(int setting, const int64_t* ns, size_t n_ns, int replicates,
                          const char* scenarios_csv, const char* estimators_csv,
                          uint64_t seed, const tbss_fit_options* opts, int threads,
                          char** out_tsv) {
  if (tbss_status st = require(out_tsv != nullptr, "null argument")) return st;
  return guarded([&] {
    tbss::ExperimentSpec spec = tbss::preset_experiment(setting);
    if (ns != nullptr && n_ns > 0)
      spec.sample_sizes.assign(ns, ns + n_ns);
    if (replicates > 0) spec.replicates = replicates;
    if (scenarios_csv != nullptr) {
      spec.scenarios.clear();
      for (const std::string& name : split_csv(scenarios_csv))
        spec.scenarios.push_back(tbss::mixing_from_name(name));
      if (spec.scenarios.empty())
        tbss::fail(tbss::ErrorCode::invalid_argument, "empty scenario list");
    }
    if (estimators_csv != nullptr) {
      spec.estimators = split_csv(estimators_csv);
      if (spec.estimators.empty())
        tbss::fail(tbss::ErrorCode::invalid_argument, "empty estimator list");
    }
    spec.seed = seed;
    spec.fit = fit_config(opts);
    int workers = threads;
    if (workers <= 0)
      workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const tbss::ExperimentResult result = tbss::run_experiment(spec, workers);
    *out_tsv = copy_string(tbss::render_experiment_tsv(result));
  });
}

tbss_status tbss_bench(const int64_t* widths, size_t n_widths, int64_t n,
                       const char* estimators_csv, uint64_t seed, int iterations,
                       const tbss_fit_options* opts, char** out_tsv) {
  if (tbss_status st = require(widths && n_widths > 0 && out_tsv, "null argument"))
    return st;
  return guarded([&] {
    std::vector<tbss::index_t> q(widths, widths + n_widths);
    std::vector<std::string> estimators = split_csv(estimators_csv);
    if (estimators.empty())
      estimators = {"tfobi", "11-tjade", "22-tjade", "tjade"};
    const auto rows = tbss::run_timing(q, n, estimators, seed,
                                       iterations > 0 ? iterations : 5,
                                       fit_config(opts));
    *out_tsv = copy_string(tbss::render_timing_tsv(rows));
  });
}

void tbss_string_free(char* s) { delete[] s; }

}  // extern "C"
