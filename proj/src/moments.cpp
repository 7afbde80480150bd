#include "tbss/moments.hpp"

#include <algorithm>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

void check_nonempty(const MatrixSample& s) {
  if (s.n() < 1 || s.p() < 1 || s.q() < 1)
    fail(ErrorCode::insufficient_sample, "empty matrix sample");
}

Eigen::Map<const Eigen::MatrixXd> flat_view(const MatrixSample& s) {
  return {s.data().data(), s.p(), s.q() * s.n()};
}

}  // namespace

MatrixSample::MatrixSample(index_t p, index_t q, index_t n) : p_(p), q_(q), n_(n) {
  if (p < 1 || q < 1 || n < 0)
    fail(ErrorCode::invalid_argument, "matrix sample shape must be positive");
  data_.assign(static_cast<std::size_t>(p * q * n), 0.0);
}

MatrixSample matricize_sample(const TensorSample& s, int mode) {
  if (mode < 1 || mode > s.order())
    fail(ErrorCode::invalid_argument, "mode " + std::to_string(mode) + " out of range");
  const index_t p = s.dims()[mode - 1];
  const index_t q = s.cell_count() / p;
  MatrixSample out(p, q, s.n());
  for (index_t t = 0; t < s.n(); ++t)
    out.observation(t) = matricize(s.tensor(t), mode);
  return out;
}

MatrixSample vectorize_sample(const TensorSample& s) {
  const index_t rho = s.cell_count();
  MatrixSample out(rho, 1, s.n());
  for (index_t t = 0; t < s.n(); ++t) {
    Eigen::VectorXd v = vectorize(s.tensor(t));
    out.observation(t).col(0) = v;
  }
  return out;
}

void center_in_place(MatrixSample& s) {
  check_nonempty(s);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(s.p(), s.q());
  for (index_t t = 0; t < s.n(); ++t) mean += s.observation(t);
  mean /= static_cast<double>(s.n());
  for (index_t t = 0; t < s.n(); ++t) s.observation(t) -= mean;
}

Eigen::MatrixXd left_cov(const MatrixSample& s) {
  check_nonempty(s);
  auto flat = flat_view(s);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(s.p(), s.p());
  c.selfadjointView<Eigen::Lower>().rankUpdate(flat);
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  c /= static_cast<double>(s.n() * s.q());
  return c;
}

Eigen::MatrixXd right_cov(const MatrixSample& s) {
  check_nonempty(s);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(s.q(), s.q());
  for (index_t t = 0; t < s.n(); ++t) {
    auto x = s.observation(t);
    c.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  }
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  c /= static_cast<double>(s.n() * s.p());
  return c;
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    fail(ErrorCode::invalid_argument, "sym_inv_sqrt needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::internal, "eigendecomposition failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double eps = 1e-12 * ev.maxCoeff();
  for (index_t i = 0; i < ev.size(); ++i)
    if (ev[i] <= eps || !(ev[i] > 0.0))
      fail(ErrorCode::singular_covariance,
           "covariance is numerically singular: eigenvalue " + std::to_string(i + 1) +
               " is " + std::to_string(ev[i]) + " (threshold " + std::to_string(eps) + ")");
  return eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

MatrixSample standardize(const MatrixSample& s) {
  const Eigen::MatrixXd s1 = sym_inv_sqrt(left_cov(s));
  const Eigen::MatrixXd s2 = sym_inv_sqrt(right_cov(s));
  MatrixSample out(s.p(), s.q(), s.n());
  for (index_t t = 0; t < s.n(); ++t)
    out.observation(t).noalias() = s1 * s.observation(t) * s2;
  return out;
}

Eigen::MatrixXd fobi_matrix(const MatrixSample& s) {
  check_nonempty(s);
  const index_t p = s.p();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd m(p, p);
  for (index_t t = 0; t < s.n(); ++t) {
    auto x = s.observation(t);
    m.noalias() = x * x.transpose();
    b.noalias() += m * m;
  }
  b /= static_cast<double>(s.n() * s.q());
  return b;
}

Eigen::MatrixXd cumulant_matrix(const MatrixSample& s, index_t i, index_t j) {
  check_nonempty(s);
  const index_t p = s.p();
  if (i < 0 || i >= p || j < 0 || j >= p)
    fail(ErrorCode::invalid_argument, "cumulant indices out of range");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd m(p, p);
  for (index_t t = 0; t < s.n(); ++t) {
    auto x = s.observation(t);
    m.noalias() = x * x.transpose();
    acc.noalias() += m(i, j) * m;
  }
  acc /= static_cast<double>(s.n() * s.q());
  const Eigen::MatrixXd sigma = left_cov(s);
  if (i == j) acc.noalias() -= static_cast<double>(s.q()) * sigma * sigma;
  acc.noalias() -= sigma.col(i) * sigma.row(j);
  acc.noalias() -= sigma.col(j) * sigma.row(i);
  return ((acc + acc.transpose()) / 2.0).eval();
}

CumulantSet cumulant_set(const MatrixSample& s, index_t k) {
  check_nonempty(s);
  const index_t p = s.p();
  const index_t q = s.q();
  const index_t n = s.n();
  if (k < 1 || k > p)
    fail(ErrorCode::invalid_argument,
         "band width k = " + std::to_string(k) + " out of range 1.." + std::to_string(p));

  const Eigen::MatrixXd sigma = left_cov(s);

  CumulantSet set;
  set.p = p;
  set.k = k;
  set.tau2 = sigma.trace() / static_cast<double>(p);

  // Unique pairs i <= j within the band, in (i, j) lexicographic order.
  std::vector<std::pair<index_t, index_t>> upairs;
  for (index_t i = 0; i < p; ++i)
    for (index_t j = i; j < p && j - i < k; ++j) upairs.emplace_back(i, j);
  const index_t m = static_cast<index_t>(upairs.size());

  // Gram accumulation: column t of g holds vec(X_t X_t'); the band slice of
  // the fourth-moment array is then g * g(sel,:)', built in observation chunks
  // to bound memory.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p * p, m);
  std::vector<index_t> sel(static_cast<std::size_t>(m));
  for (index_t u = 0; u < m; ++u) sel[u] = upairs[u].second * p + upairs[u].first;

  const index_t chunk = std::max<index_t>(1, std::min<index_t>(n, (1 << 22) / (p * p) + 1));
  Eigen::MatrixXd g(p * p, chunk);
  Eigen::MatrixXd gsel(chunk, m);
  for (index_t t0 = 0; t0 < n; t0 += chunk) {
    const index_t len = std::min<index_t>(chunk, n - t0);
    for (index_t t = 0; t < len; ++t) {
      Eigen::Map<Eigen::MatrixXd> mt(g.col(t).data(), p, p);
      auto x = s.observation(t0 + t);
      mt.noalias() = x * x.transpose();
    }
    for (index_t u = 0; u < m; ++u)
      gsel.col(u).head(len) = g.row(sel[u]).head(len).transpose();
    acc.noalias() += g.leftCols(len) * gsel.topRows(len);
  }
  acc /= static_cast<double>(n * q);

  set.matrices.reserve(static_cast<std::size_t>(m));
  set.weights.reserve(static_cast<std::size_t>(m));
  for (index_t u = 0; u < m; ++u) {
    const auto [i, j] = upairs[u];
    Eigen::MatrixXd c = Eigen::Map<const Eigen::MatrixXd>(acc.col(u).data(), p, p);
    if (i == j) c.noalias() -= static_cast<double>(q) * sigma * sigma;
    c.noalias() -= sigma.col(i) * sigma.row(j);
    c.noalias() -= sigma.col(j) * sigma.row(i);
    c = ((c + c.transpose()) / 2.0).eval();
    set.matrices.push_back(std::move(c));
    set.weights.push_back(i == j ? 1.0 : 2.0);
  }

  // Ordered pair list with mirrored duplicates referencing the same matrix.
  for (index_t u = 0; u < m; ++u) {
    const auto [i, j] = upairs[u];
    set.pairs.emplace_back(i, j);
    set.pair_matrix.push_back(u);
    if (i != j) {
      set.pairs.emplace_back(j, i);
      set.pair_matrix.push_back(u);
    }
  }
  return set;
}

}  // namespace tbss
