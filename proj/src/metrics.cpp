#include "tbss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

// Row-normalized squared gain: W(r, c) = g(r, c)^2 / ||g(r, .)||^2.  Every row
// sums to one, which keeps the assignment optimum in [1, rho] and hence the
// index in [0, 1].
Eigen::MatrixXd normalized_squares(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols())
    fail(ErrorCode::invalid_argument, "gain matrix must be square");
  if (g.rows() < 2)
    fail(ErrorCode::invalid_argument, "minimum-distance index needs rho >= 2");
  Eigen::MatrixXd w(g.rows(), g.cols());
  for (index_t r = 0; r < g.rows(); ++r) {
    const double norm2 = g.row(r).squaredNorm();
    if (norm2 == 0.0)
      fail(ErrorCode::invalid_argument,
           "gain matrix row " + std::to_string(r + 1) + " is zero");
    w.row(r) = g.row(r).array().square() / norm2;
  }
  return w;
}

double md_from_assignment(double best, index_t rho) {
  const double d2 = (static_cast<double>(rho) - best) / static_cast<double>(rho - 1);
  return std::sqrt(std::clamp(d2, 0.0, 1.0));
}

}  // namespace

double max_assignment(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols() || w.rows() < 1)
    fail(ErrorCode::invalid_argument, "assignment needs a square matrix");
  const int n = static_cast<int>(w.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting paths on the minimization of -w, with potentials
  // u (rows) and v (columns); p[j] is the row matched to column j, 1-based.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += w(p[j] - 1, j - 1);
  return total;
}

double md_index(const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd w = normalized_squares(g);
  return md_from_assignment(max_assignment(w), g.rows());
}

double md_index_bruteforce(const Eigen::MatrixXd& g) {
  const index_t rho = g.rows();
  if (rho > 8)
    fail(ErrorCode::size_limit, "brute-force index is limited to rho <= 8");
  const Eigen::MatrixXd w = normalized_squares(g);
  std::vector<index_t> perm(static_cast<std::size_t>(rho));
  std::iota(perm.begin(), perm.end(), index_t{0});
  double best = -std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (index_t i = 0; i < rho; ++i) sum += w(perm[static_cast<std::size_t>(i)], i);
    best = std::max(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return md_from_assignment(best, rho);
}

double transformed_md(double md, index_t n, index_t rho) {
  if (n < 1 || rho < 2)
    fail(ErrorCode::invalid_argument, "transformed index needs n >= 1 and rho >= 2");
  return static_cast<double>(n) * static_cast<double>(rho - 1) * md * md;
}

Eigen::MatrixXd gain_matrix(const UnmixingResult& result,
                            const std::vector<Eigen::MatrixXd>& mixings) {
  if (mixings.size() != result.dims.size())
    fail(ErrorCode::invalid_argument,
         "expected one mixing matrix per mode (" + std::to_string(result.dims.size()) +
             "), got " + std::to_string(mixings.size()));
  for (std::size_t m = 0; m < mixings.size(); ++m)
    if (mixings[m].rows() != result.dims[m] || mixings[m].cols() != result.dims[m])
      fail(ErrorCode::shape_mismatch,
           "mixing matrix for mode " + std::to_string(m + 1) + " must be " +
               std::to_string(result.dims[m]) + " square");
  const Eigen::MatrixXd omega = kronecker_compound(mixings);
  if (result.vectorized) return result.gammas.at(0) * omega;
  return kronecker_compound(result.gammas) * omega;
}

std::vector<ScreePoint> scree(const TensorSample& s, int mode, const FitConfig& cfg) {
  if (mode < 1 || mode > s.order())
    fail(ErrorCode::invalid_argument, "mode " + std::to_string(mode) + " out of range");
  const index_t p = s.dims()[static_cast<std::size_t>(mode - 1)];
  if (p < 2)
    fail(ErrorCode::invalid_argument, "scree needs the mode extent to be at least 2");

  std::vector<Eigen::MatrixXd> gammas;
  gammas.reserve(static_cast<std::size_t>(p));
  for (index_t k = 1; k <= p; ++k) {
    ModePlan plan(static_cast<std::size_t>(s.order()), ModeSpec{Method::ktjade, 1});
    plan[static_cast<std::size_t>(mode - 1)] = ModeSpec{Method::ktjade, k};
    const UnmixingResult res = fit(s, plan, cfg);
    gammas.push_back(res.gammas[static_cast<std::size_t>(mode - 1)]);
  }

  std::vector<ScreePoint> curve;
  curve.reserve(static_cast<std::size_t>(p - 1));
  for (index_t k = 1; k < p; ++k) {
    double sum = 0.0;
    for (index_t l = 1; l <= p - k; ++l) {
      const Eigen::MatrixXd rel = gammas[static_cast<std::size_t>(k - 1)] *
                                  gammas[static_cast<std::size_t>(k + l - 1)].inverse();
      sum += md_index(rel);
    }
    curve.push_back({k, sum / static_cast<double>(p - k)});
  }
  return curve;
}

}  // namespace tbss
