#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbss/errors.hpp"
#include "tbss/estimators.hpp"
#include "tbss/metrics.hpp"
#include "tbss/simulation.hpp"
#include "tbss/tensor.hpp"

using namespace tbss;

namespace {

// 3 x 4 grid whose per-mode kurtosis means are all distinct, so every
// estimator identifies every source.
LatentLayout no_tie_layout() {
  LatentLayout layout;
  layout.dims = {3, 4};
  const DistributionSpec e{Dist::exponential, 0.0};
  const DistributionSpec u{Dist::uniform, 0.0};
  const DistributionSpec g{Dist::normal, 0.0};
  const DistributionSpec c3{Dist::chisq, 3.0};
  layout.cells = {e, e, e, e, u, u, u, u, g, c3, u, e};
  return layout;
}

std::vector<Eigen::MatrixXd> identities(const std::vector<index_t>& dims) {
  std::vector<Eigen::MatrixXd> out;
  for (index_t d : dims) out.push_back(Eigen::MatrixXd::Identity(d, d));
  return out;
}

Eigen::MatrixXd random_invertible(index_t p, rng_t& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(p, p);
  do {
    for (index_t i = 0; i < p; ++i)
      for (index_t j = 0; j < p; ++j) a(i, j) = normal(gen);
  } while (std::fabs(a.determinant()) < 1e-2);
  return a;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("every estimator recovers an identity-mixed model") {
  const TensorSample s = sample_latent(no_tie_layout(), 12000, mix_seed(8101));
  const auto eye = identities(s.dims());
  const UnmixingResult tf = fit(s, {{Method::tfobi, 0}, {Method::tfobi, 0}});
  const UnmixingResult tj = fit(s, {{Method::tjade, 0}, {Method::tjade, 0}});
  const UnmixingResult kt = fit(s, {{Method::ktjade, 1}, {Method::ktjade, 1}});
  const UnmixingResult vj = fit_vectorized(s, Method::tjade, 0);
  CHECK(md_index(gain_matrix(tf, eye)) < 0.2);
  CHECK(md_index(gain_matrix(tj, eye)) < 0.15);
  CHECK(md_index(gain_matrix(kt, eye)) < 0.15);
  CHECK(md_index(gain_matrix(vj, eye)) < 0.2);
}

TEST_CASE("band width p reproduces the full joint estimator") {
  const TensorSample s = sample_latent(no_tie_layout(), 10000, mix_seed(8102));
  const UnmixingResult banded = fit(s, {{Method::ktjade, 3}, {Method::ktjade, 4}});
  const UnmixingResult full = fit(s, {{Method::tjade, 0}, {Method::tjade, 0}});
  for (std::size_t m = 0; m < 2; ++m)
    CHECK(md_index(banded.gammas[m] * full.gammas[m].inverse()) < 1e-4);
}

TEST_CASE("orthogonal equivariance holds exactly at the sample level") {
  const TensorSample s = sample_latent(no_tie_layout(), 2000, mix_seed(8103));
  rng_t gen(mix_seed(8104));
  const Eigen::MatrixXd u = haar_orthogonal(3, gen);
  const Eigen::MatrixXd v = haar_orthogonal(4, gen);
  const TensorSample mixed = m_mode_multiply(m_mode_multiply(s, u, 1), v, 2);
  for (const ModePlan plan :
       {ModePlan{{Method::tfobi, 0}, {Method::tfobi, 0}},
        ModePlan{{Method::tjade, 0}, {Method::tjade, 0}},
        ModePlan{{Method::ktjade, 2}, {Method::ktjade, 2}}}) {
    const UnmixingResult base = fit(s, plan);
    const UnmixingResult rot = fit(mixed, plan);
    CHECK(md_index(rot.gammas[0] * u * base.gammas[0].inverse()) < 1e-8);
    CHECK(md_index(rot.gammas[1] * v * base.gammas[1].inverse()) < 1e-8);
  }
}

TEST_CASE("vectorized fit performance is invariant to invertible mixing") {
  const TensorSample s = sample_latent(no_tie_layout(), 1500, mix_seed(8105));
  rng_t gen(mix_seed(8106));
  const std::vector<Eigen::MatrixXd> mix = {random_invertible(3, gen),
                                            random_invertible(4, gen)};
  const TensorSample mixed = m_mode_multiply(m_mode_multiply(s, mix[0], 1), mix[1], 2);
  const double base = md_index(gain_matrix(fit_vectorized(s, Method::tjade, 0),
                                           identities(s.dims())));
  const double moved = md_index(gain_matrix(fit_vectorized(mixed, Method::tjade, 0), mix));
  CHECK(std::fabs(base - moved) < 1e-6);
}

TEST_CASE("rows come out kurtosis-ordered, sign-fixed, and latent-consistent") {
  const TensorSample s = sample_latent(no_tie_layout(), 4000, mix_seed(8107));
  const UnmixingResult res = fit(s, {{Method::ktjade, 2}, {Method::ktjade, 2}});
  const auto latent_kappa = mode_kurtosis(res.latent);
  for (std::size_t m = 0; m < 2; ++m) {
    const Eigen::VectorXd& kappa = res.kappas[m];
    for (index_t i = 0; i + 1 < kappa.size(); ++i) CHECK(kappa[i] >= kappa[i + 1]);
    CHECK((kappa - latent_kappa[m]).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd& g = res.gammas[m];
    for (index_t i = 0; i < g.rows(); ++i) {
      index_t arg = 0;
      g.row(i).cwiseAbs().maxCoeff(&arg);
      CHECK(g(i, arg) > 0.0);
    }
    CHECK_FALSE(res.diagnostics[m].skipped);
    CHECK(res.diagnostics[m].converged);
    CHECK(res.diagnostics[m].kappa_spread ==
          doctest::Approx(kappa[0] - kappa[kappa.size() - 1]).epsilon(1e-12));
  }
  // The reported latent is exactly the centered input with the unmixings
  // applied mode by mode.
  TensorSample check = s;
  center_in_place(check);
  check = m_mode_multiply(check, res.gammas[0], 1);
  check = m_mode_multiply(check, res.gammas[1], 2);
  REQUIRE(check.data().size() == res.latent.data().size());
  double worst = 0.0;
  for (std::size_t i = 0; i < check.data().size(); ++i)
    worst = std::max(worst, std::fabs(check.data()[i] - res.latent.data()[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("skipped modes keep the identity") {
  const TensorSample s = sample_latent(no_tie_layout(), 3000, mix_seed(8108));
  const UnmixingResult res = fit(s, {{Method::skip, 0}, {Method::ktjade, 2}});
  CHECK((res.gammas[0] - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.diagnostics[0].skipped);
  CHECK(res.diagnostics[0].k == 0);
  CHECK_FALSE(res.diagnostics[1].skipped);
  CHECK(res.diagnostics[1].k == 2);

  const UnmixingResult none = fit(s, {{Method::skip, 0}, {Method::skip, 0}});
  TensorSample centered = s;
  center_in_place(centered);
  for (std::size_t i = 0; i < centered.data().size(); ++i)
    CHECK(none.latent.data()[i] == doctest::Approx(centered.data()[i]).epsilon(1e-14));
}

TEST_CASE("single-mode helpers equal their explicit plans") {
  const TensorSample s = sample_latent(no_tie_layout(), 2500, mix_seed(8109));
  const UnmixingResult a = tjade_mode(s, 2);
  const UnmixingResult b = fit(s, {{Method::skip, 0}, {Method::tjade, 0}});
  CHECK((a.gammas[1] - b.gammas[1]).cwiseAbs().maxCoeff() == 0.0);
  const UnmixingResult c = k_tjade_mode(s, 1, 2);
  const UnmixingResult d = fit(s, {{Method::ktjade, 2}, {Method::skip, 0}});
  CHECK((c.gammas[0] - d.gammas[0]).cwiseAbs().maxCoeff() == 0.0);
  const UnmixingResult e = tfobi_mode(s, 1);
  CHECK(e.diagnostics[0].method == Method::tfobi);
  CHECK(e.diagnostics[1].skipped);
}

TEST_CASE("vectorized fits refuse rho beyond the cap") {
  LatentLayout layout;
  layout.dims = {9, 8};
  layout.cells.assign(72, DistributionSpec{Dist::normal, 0.0});
  const TensorSample s = sample_latent(layout, 300, mix_seed(8110));
  try {
    fit_vectorized(s, Method::tfobi, 0);
    FAIL("expected the cap to reject rho = 72");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::size_limit);
    CHECK(std::string(e.what()).find("72") != std::string::npos);
  }
  FitConfig wide;
  wide.rho_cap = 128;
  const UnmixingResult res = fit_vectorized(s, Method::tfobi, 0, wide);
  CHECK(res.vectorized);
  CHECK(res.gammas[0].rows() == 72);
}

TEST_CASE("shape and size validation") {
  const TensorSample s = sample_latent(no_tie_layout(), 100, mix_seed(8111));
  CHECK_THROWS_AS(fit(s, {{Method::tjade, 0}}), Error);
  CHECK_THROWS_AS(fit(s, {{Method::ktjade, 0}, {Method::ktjade, 1}}), Error);
  CHECK_THROWS_AS(fit(s, {{Method::ktjade, 4}, {Method::ktjade, 1}}), Error);
  CHECK_THROWS_AS(fit_vectorized(s, Method::skip, 0), Error);
  const TensorSample tiny = sample_latent(no_tie_layout(), 1, mix_seed(8112));
  try {
    fit(tiny, {{Method::tjade, 0}, {Method::tjade, 0}});
    FAIL("expected too-small samples to be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_sample);
  }
}

TEST_CASE("tied kurtosis trips the low-spread diagnostic") {
  LatentLayout layout;
  layout.dims = {2, 3};
  layout.cells.assign(6, DistributionSpec{Dist::normal, 0.0});
  const TensorSample s = sample_latent(layout, 50000, mix_seed(8113));
  const UnmixingResult res = fit(s, {{Method::ktjade, 1}, {Method::ktjade, 1}});
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(res.diagnostics[m].kappa_spread < 0.1);
    CHECK(res.diagnostics[m].low_kappa_spread);
  }
  // Well-separated kurtosis on a decent sample must not trip it.
  const TensorSample sep = sample_latent(no_tie_layout(), 12000, mix_seed(8114));
  const UnmixingResult res2 = fit(sep, {{Method::ktjade, 1}, {Method::ktjade, 1}});
  CHECK_FALSE(res2.diagnostics[0].low_kappa_spread);
  CHECK_FALSE(res2.diagnostics[1].low_kappa_spread);
}

TEST_CASE("fits are deterministic") {
  const TensorSample s = sample_latent(no_tie_layout(), 3000, mix_seed(8115));
  const UnmixingResult a = fit(s, {{Method::ktjade, 2}, {Method::tjade, 0}});
  const UnmixingResult b = fit(s, {{Method::ktjade, 2}, {Method::tjade, 0}});
  for (std::size_t m = 0; m < 2; ++m)
    CHECK((a.gammas[m] - b.gammas[m]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::skip, Method::tfobi, Method::tjade, Method::ktjade})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("fastica"), Error);
}

}  // TEST_SUITE
