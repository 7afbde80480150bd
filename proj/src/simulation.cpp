#include "tbss/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "tbss/errors.hpp"
#include "tbss/metrics.hpp"

namespace tbss {

namespace {

void check_layout(const LatentLayout& layout) {
  if (layout.dims.empty())
    fail(ErrorCode::invalid_argument, "latent layout needs at least one mode");
  for (index_t d : layout.dims)
    if (d < 1) fail(ErrorCode::invalid_argument, "latent layout dimensions must be positive");
  if (static_cast<index_t>(layout.cells.size()) != dim_product(layout.dims))
    fail(ErrorCode::shape_mismatch,
         "layout has " + std::to_string(layout.cells.size()) + " cells, shape needs " +
             std::to_string(dim_product(layout.dims)));
  for (const DistributionSpec& c : layout.cells)
    if ((c.dist == Dist::chisq || c.dist == Dist::gamma) && !(c.param > 0.0))
      fail(ErrorCode::invalid_argument, "distribution parameter must be positive");
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<index_t> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<index_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string tok = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "cannot parse " + what + ": '" + tok + "'");
    }
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return out;
}

}  // namespace

double DistributionSpec::excess_kurtosis() const {
  switch (dist) {
    case Dist::normal: return 0.0;
    case Dist::uniform: return -6.0 / 5.0;
    case Dist::exponential: return 6.0;
    case Dist::chisq: return 12.0 / param;
    case Dist::gamma: return 6.0 / param;
  }
  fail(ErrorCode::internal, "unknown distribution");
}

std::vector<Eigen::VectorXd> LatentLayout::mode_kurtosis_means() const {
  check_layout(*this);
  const index_t r = static_cast<index_t>(dims.size());
  const index_t cells_n = dim_product(dims);
  std::vector<Eigen::VectorXd> means;
  for (index_t m = 0; m < r; ++m)
    means.push_back(Eigen::VectorXd::Zero(dims[static_cast<std::size_t>(m)]));
  std::vector<index_t> digit(static_cast<std::size_t>(r), 0);
  for (index_t c = 0; c < cells_n; ++c) {
    const double k = cells[static_cast<std::size_t>(c)].excess_kurtosis();
    for (index_t m = 0; m < r; ++m) means[m][digit[static_cast<std::size_t>(m)]] += k;
    for (index_t m = r - 1; m >= 0; --m) {
      auto& d = digit[static_cast<std::size_t>(m)];
      if (++d < dims[static_cast<std::size_t>(m)]) break;
      d = 0;
    }
  }
  for (index_t m = 0; m < r; ++m)
    means[m] *= static_cast<double>(dims[static_cast<std::size_t>(m)]) /
                static_cast<double>(cells_n);
  return means;
}

std::string mixing_name(Mixing m) {
  switch (m) {
    case Mixing::identity: return "identity";
    case Mixing::orthogonal: return "orthogonal";
    case Mixing::gaussian: return "gaussian";
  }
  fail(ErrorCode::internal, "unknown mixing");
}

Mixing mixing_from_name(const std::string& name) {
  const std::string n = lowercase(name);
  if (n == "identity") return Mixing::identity;
  if (n == "orthogonal") return Mixing::orthogonal;
  if (n == "gaussian") return Mixing::gaussian;
  fail(ErrorCode::invalid_argument, "unknown mixing scenario: " + name);
}

EstimatorSpec parse_estimator(const std::string& name, const std::vector<index_t>& dims) {
  const index_t r = static_cast<index_t>(dims.size());
  const index_t rho = dim_product(dims);
  EstimatorSpec spec;
  spec.name = lowercase(name);
  const std::string& n = spec.name;

  auto validate_tensor_ks = [&](const std::vector<index_t>& ks) {
    if (static_cast<index_t>(ks.size()) != r)
      fail(ErrorCode::invalid_argument,
           "estimator '" + name + "' specifies " + std::to_string(ks.size()) +
               " band widths, sample has " + std::to_string(r) + " modes");
    bool any = false;
    for (index_t m = 0; m < r; ++m) {
      const index_t k = ks[static_cast<std::size_t>(m)];
      const index_t p = dims[static_cast<std::size_t>(m)];
      if (k < 0 || k > p)
        fail(ErrorCode::invalid_argument,
             "estimator '" + name + "': band width " + std::to_string(k) +
                 " out of range 0.." + std::to_string(p) + " for mode " +
                 std::to_string(m + 1));
      any = any || k > 0;
    }
    if (!any)
      fail(ErrorCode::invalid_argument, "estimator '" + name + "' skips every mode");
  };
  auto validate_vector_k = [&](index_t k) {
    if (k < 1 || k > rho)
      fail(ErrorCode::invalid_argument,
           "estimator '" + name + "': band width " + std::to_string(k) +
               " out of range 1.." + std::to_string(rho));
  };

  if (n == "tfobi" || n == "tjade") {
    spec.method = n == "tfobi" ? Method::tfobi : Method::tjade;
    return spec;
  }
  if (n == "vfobi" || n == "vjade") {
    spec.vectorized = true;
    spec.method = n == "vfobi" ? Method::tfobi : Method::tjade;
    return spec;
  }
  const auto suffix_of = [&](const std::string& suf) {
    return n.size() > suf.size() && n.compare(n.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (suffix_of("-tjade")) {
    const std::string digits = n.substr(0, n.size() - 6);
    std::vector<index_t> ks;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail(ErrorCode::invalid_argument, "unknown estimator: " + name);
      ks.push_back(c - '0');
    }
    validate_tensor_ks(ks);
    spec.method = Method::ktjade;
    spec.ks = ks;
    return spec;
  }
  if (suffix_of("-vjade")) {
    const std::vector<index_t> k = parse_int_list(n.substr(0, n.size() - 6), "band width");
    if (k.size() != 1) fail(ErrorCode::invalid_argument, "unknown estimator: " + name);
    validate_vector_k(k[0]);
    spec.vectorized = true;
    spec.method = Method::ktjade;
    spec.ks = {k[0]};
    return spec;
  }
  if (n.rfind("ktjade:", 0) == 0) {
    const std::vector<index_t> ks = parse_int_list(n.substr(7), "band widths");
    validate_tensor_ks(ks);
    spec.method = Method::ktjade;
    spec.ks = ks;
    return spec;
  }
  if (n.rfind("kvjade:", 0) == 0) {
    const std::vector<index_t> k = parse_int_list(n.substr(7), "band width");
    if (k.size() != 1)
      fail(ErrorCode::invalid_argument, "estimator '" + name + "' needs exactly one k");
    validate_vector_k(k[0]);
    spec.vectorized = true;
    spec.method = Method::ktjade;
    spec.ks = {k[0]};
    return spec;
  }
  fail(ErrorCode::invalid_argument, "unknown estimator: " + name);
}

UnmixingResult fit_estimator(const TensorSample& s, const EstimatorSpec& est,
                             const FitConfig& cfg) {
  if (est.vectorized)
    return fit_vectorized(s, est.method, est.ks.empty() ? 0 : est.ks[0], cfg);
  ModePlan plan;
  for (index_t m = 0; m < s.order(); ++m) {
    if (est.method == Method::ktjade) {
      const index_t k = est.ks[static_cast<std::size_t>(m)];
      plan.push_back(k == 0 ? ModeSpec{Method::skip, 0} : ModeSpec{Method::ktjade, k});
    } else {
      plan.push_back(ModeSpec{est.method, 0});
    }
  }
  return fit(s, plan, cfg);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(a);
  h = splitmix(h ^ b);
  h = splitmix(h ^ c);
  h = splitmix(h ^ d);
  return h;
}

namespace {

double draw_standardized(const DistributionSpec& spec, rng_t& gen) {
  switch (spec.dist) {
    case Dist::normal: {
      std::normal_distribution<double> d(0.0, 1.0);
      return d(gen);
    }
    case Dist::uniform: {
      std::uniform_real_distribution<double> d(0.0, 1.0);
      return (d(gen) - 0.5) * std::sqrt(12.0);
    }
    case Dist::exponential: {
      std::exponential_distribution<double> d(1.0);
      return d(gen) - 1.0;
    }
    case Dist::chisq: {
      std::chi_squared_distribution<double> d(spec.param);
      return (d(gen) - spec.param) / std::sqrt(2.0 * spec.param);
    }
    case Dist::gamma: {
      std::gamma_distribution<double> d(spec.param, 1.0);
      return (d(gen) - spec.param) / std::sqrt(spec.param);
    }
  }
  fail(ErrorCode::internal, "unknown distribution");
}

}  // namespace

TensorSample sample_latent(const LatentLayout& layout, index_t n, std::uint64_t seed) {
  check_layout(layout);
  if (n < 1) fail(ErrorCode::invalid_argument, "latent sample size must be positive");
  const index_t cells_n = dim_product(layout.dims);
  TensorSample out(layout.dims, n);
  double* data = out.data().data();
  for (index_t c = 0; c < cells_n; ++c) {
    rng_t gen(mix_seed(seed, 0x5eedULL, static_cast<std::uint64_t>(c)));
    const DistributionSpec& spec = layout.cells[static_cast<std::size_t>(c)];
    for (index_t t = 0; t < n; ++t)
      data[t * cells_n + c] = draw_standardized(spec, gen);
  }
  return out;
}

Eigen::MatrixXd haar_orthogonal(index_t p, rng_t& gen) {
  if (p < 1) fail(ErrorCode::invalid_argument, "orthogonal dimension must be positive");
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd a(p, p);
  for (index_t j = 0; j < p; ++j)
    for (index_t i = 0; i < p; ++i) a(i, j) = nd(gen);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
  for (index_t j = 0; j < p; ++j)
    if (rdiag[j] < 0.0) q.col(j) = -q.col(j);
  return q;
}

LatentLayout setting_layout(int setting) {
  const DistributionSpec N{Dist::normal, 0.0};
  const DistributionSpec U{Dist::uniform, 0.0};
  const DistributionSpec E{Dist::exponential, 0.0};
  const DistributionSpec C{Dist::chisq, 1.0};
  auto G = [](double shape) { return DistributionSpec{Dist::gamma, shape}; };

  if (setting == 1)
    return {{3, 3},
            {E, C, U,  //
             C, U, E,  //
             U, E, N}};
  if (setting == 2) {
    const DistributionSpec faces123[3][3] = {{E, N, N}, {N, U, N}, {N, N, E}};
    const DistributionSpec face4[3][3] = {{N, U, E}, {E, E, E}, {E, E, N}};
    LatentLayout layout;
    layout.dims = {3, 3, 4};
    layout.cells.resize(36);
    for (index_t i = 0; i < 3; ++i)
      for (index_t j = 0; j < 3; ++j)
        for (index_t l = 0; l < 4; ++l)
          layout.cells[static_cast<std::size_t>((i * 3 + j) * 4 + l)] =
              l < 3 ? faces123[i][j] : face4[i][j];
    return layout;
  }
  if (setting == 3)
    return {{3, 3},
            {G(0.9999), G(1.0), G(0.9),  //
             G(0.9), G(0.9998), G(1.0),  //
             G(0.9), G(1.0), G(1.0)}};
  fail(ErrorCode::invalid_argument, "setting must be 1, 2 or 3");
}

LatentLayout timing_layout(index_t q) {
  if (q < 1) fail(ErrorCode::invalid_argument, "timing grid width must be positive");
  LatentLayout layout;
  layout.dims = {3, q};
  layout.cells.resize(static_cast<std::size_t>(3 * q));
  for (index_t i = 0; i < 3; ++i)
    for (index_t j = 0; j < q; ++j)
      layout.cells[static_cast<std::size_t>(i * q + j)] =
          DistributionSpec{Dist::chisq, static_cast<double>(3 * j + i + 1)};
  return layout;
}

ExperimentSpec preset_experiment(int setting) {
  ExperimentSpec spec;
  spec.layout = setting_layout(setting);
  spec.sample_sizes = {1000, 2000};
  spec.replicates = 50;
  spec.scenarios = {Mixing::identity};
  if (setting == 1)
    spec.estimators = {"tfobi", "22-tjade", "tjade", "3-vjade", "vjade"};
  else if (setting == 2)
    spec.estimators = {"123-tjade", "tjade", "vjade"};
  else
    spec.estimators = {"11-tjade", "22-tjade", "33-tjade", "tjade"};
  return spec;
}

double ExperimentCell::mean_tmd() const {
  double sum = 0.0;
  index_t count = 0;
  for (double v : tmd)
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  return count > 0 ? sum / static_cast<double>(count) : std::nan("");
}

double ExperimentCell::sd_tmd() const {
  const double m = mean_tmd();
  double sum = 0.0;
  index_t count = 0;
  for (double v : tmd)
    if (std::isfinite(v)) {
      sum += (v - m) * (v - m);
      ++count;
    }
  if (count < 2) return count == 1 ? 0.0 : std::nan("");
  return std::sqrt(sum / static_cast<double>(count - 1));
}

double ExperimentCell::median_md() const {
  std::vector<double> vals;
  for (double v : md)
    if (std::isfinite(v)) vals.push_back(v);
  if (vals.empty()) return std::nan("");
  std::sort(vals.begin(), vals.end());
  const std::size_t h = vals.size() / 2;
  return vals.size() % 2 == 1 ? vals[h] : (vals[h - 1] + vals[h]) / 2.0;
}

double ExperimentCell::mean_fit_ms() const {
  double sum = 0.0;
  index_t count = 0;
  for (double v : fit_ms)
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  return count > 0 ? sum / static_cast<double>(count) : std::nan("");
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
  check_layout(spec.layout);
  if (spec.replicates < 1)
    fail(ErrorCode::invalid_argument, "at least one replicate required");
  if (spec.sample_sizes.empty())
    fail(ErrorCode::invalid_argument, "at least one sample size required");
  for (index_t n : spec.sample_sizes)
    if (n < 2) fail(ErrorCode::invalid_argument, "sample sizes must be at least 2");
  if (spec.scenarios.empty())
    fail(ErrorCode::invalid_argument, "at least one mixing scenario required");
  if (spec.estimators.empty())
    fail(ErrorCode::invalid_argument, "at least one estimator required");

  const std::vector<index_t>& dims = spec.layout.dims;
  const index_t rho = dim_product(dims);
  const index_t r = static_cast<index_t>(dims.size());
  std::vector<EstimatorSpec> ests;
  for (const std::string& name : spec.estimators)
    ests.push_back(parse_estimator(name, dims));

  const index_t n_count = static_cast<index_t>(spec.sample_sizes.size());
  const index_t s_count = static_cast<index_t>(spec.scenarios.size());
  const index_t e_count = static_cast<index_t>(ests.size());

  ExperimentResult result;
  result.cells.resize(static_cast<std::size_t>(n_count * s_count * e_count));
  for (index_t ni = 0; ni < n_count; ++ni)
    for (index_t si = 0; si < s_count; ++si)
      for (index_t ei = 0; ei < e_count; ++ei) {
        ExperimentCell& cell =
            result.cells[static_cast<std::size_t>((ni * s_count + si) * e_count + ei)];
        cell.estimator = ests[static_cast<std::size_t>(ei)].name;
        cell.scenario = spec.scenarios[static_cast<std::size_t>(si)];
        cell.n = spec.sample_sizes[static_cast<std::size_t>(ni)];
        cell.md.assign(static_cast<std::size_t>(spec.replicates), std::nan(""));
        cell.tmd.assign(static_cast<std::size_t>(spec.replicates), std::nan(""));
        cell.fit_ms.assign(static_cast<std::size_t>(spec.replicates), std::nan(""));
      }

  auto run_replicate = [&](index_t rep) {
    for (index_t ni = 0; ni < n_count; ++ni) {
      const index_t n = spec.sample_sizes[static_cast<std::size_t>(ni)];
      const TensorSample latent = sample_latent(
          spec.layout, n,
          mix_seed(spec.seed, 0xA1, static_cast<std::uint64_t>(ni),
                   static_cast<std::uint64_t>(rep)));
      for (index_t si = 0; si < s_count; ++si) {
        const Mixing scenario = spec.scenarios[static_cast<std::size_t>(si)];
        std::vector<Eigen::MatrixXd> mixings;
        rng_t gen(mix_seed(spec.seed, 0xB0 + static_cast<std::uint64_t>(si),
                           static_cast<std::uint64_t>(ni), static_cast<std::uint64_t>(rep)));
        std::normal_distribution<double> nd(0.0, 1.0);
        for (index_t m = 0; m < r; ++m) {
          const index_t p = dims[static_cast<std::size_t>(m)];
          if (scenario == Mixing::identity) {
            mixings.push_back(Eigen::MatrixXd::Identity(p, p));
          } else if (scenario == Mixing::orthogonal) {
            mixings.push_back(haar_orthogonal(p, gen));
          } else {
            Eigen::MatrixXd omega(p, p);
            for (index_t j = 0; j < p; ++j)
              for (index_t i = 0; i < p; ++i) omega(i, j) = nd(gen);
            mixings.push_back(omega);
          }
        }
        TensorSample mixed = latent;
        if (scenario != Mixing::identity)
          for (index_t m = 0; m < r; ++m)
            mixed = m_mode_multiply(mixed, mixings[static_cast<std::size_t>(m)],
                                    static_cast<int>(m) + 1);
        for (index_t ei = 0; ei < e_count; ++ei) {
          ExperimentCell& cell =
              result.cells[static_cast<std::size_t>((ni * s_count + si) * e_count + ei)];
          try {
            const auto t0 = std::chrono::steady_clock::now();
            const UnmixingResult fitres =
                fit_estimator(mixed, ests[static_cast<std::size_t>(ei)], spec.fit);
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            const double d = md_index(gain_matrix(fitres, mixings));
            cell.md[static_cast<std::size_t>(rep)] = d;
            cell.tmd[static_cast<std::size_t>(rep)] = transformed_md(d, n, rho);
            cell.fit_ms[static_cast<std::size_t>(rep)] = ms;
          } catch (const Error&) {
            // replicate failure: slots stay NaN and are counted below
          }
        }
      }
    }
  };

  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(spec.replicates)));
  if (workers == 1) {
    for (index_t rep = 0; rep < spec.replicates; ++rep) run_replicate(rep);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (index_t rep = w; rep < spec.replicates; rep += workers) run_replicate(rep);
      });
    for (std::thread& t : pool) t.join();
  }

  for (ExperimentCell& cell : result.cells)
    cell.failures = static_cast<index_t>(
        std::count_if(cell.md.begin(), cell.md.end(),
                      [](double v) { return !std::isfinite(v); }));
  return result;
}

std::vector<TimingRow> run_timing(const std::vector<index_t>& widths, index_t n,
                                  const std::vector<std::string>& estimators,
                                  std::uint64_t seed, int iterations,
                                  const FitConfig& cfg) {
  if (widths.empty()) fail(ErrorCode::invalid_argument, "at least one grid width required");
  if (n < 2) fail(ErrorCode::invalid_argument, "timing sample size must be at least 2");
  if (iterations < 1) fail(ErrorCode::invalid_argument, "at least one iteration required");
  if (estimators.empty())
    fail(ErrorCode::invalid_argument, "at least one estimator required");

  std::vector<TimingRow> rows;
  for (index_t q : widths) {
    const LatentLayout layout = timing_layout(q);
    std::vector<EstimatorSpec> ests;
    for (const std::string& name : estimators)
      ests.push_back(parse_estimator(name, layout.dims));
    std::vector<double> total(ests.size(), 0.0);
    for (int it = 0; it < iterations; ++it) {
      const TensorSample latent = sample_latent(
          layout, n,
          mix_seed(seed, 0xC3, static_cast<std::uint64_t>(q),
                   static_cast<std::uint64_t>(it)));
      for (std::size_t ei = 0; ei < ests.size(); ++ei) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)fit_estimator(latent, ests[ei], cfg);
        total[ei] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                         .count();
      }
    }
    for (std::size_t ei = 0; ei < ests.size(); ++ei)
      rows.push_back({ests[ei].name, q, n, iterations,
                      total[ei] / static_cast<double>(iterations)});
  }
  return rows;
}

}  // namespace tbss
