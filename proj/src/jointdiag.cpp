#include "tbss/jointdiag.hpp"

#include <cmath>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

void check_set(const std::vector<Eigen::MatrixXd>& matrices,
               const std::vector<double>& weights) {
  if (matrices.empty())
    fail(ErrorCode::invalid_argument, "joint diagonalization of an empty set");
  const index_t p = matrices.front().rows();
  for (const auto& c : matrices)
    if (c.rows() != p || c.cols() != p)
      fail(ErrorCode::shape_mismatch, "matrices in the set must share one square shape");
  if (!weights.empty() && weights.size() != matrices.size())
    fail(ErrorCode::invalid_argument, "one weight per matrix required");
}

double weight_at(const std::vector<double>& weights, std::size_t s) {
  return weights.empty() ? 1.0 : weights[s];
}

}  // namespace

double off_objective(const Eigen::MatrixXd& v, const std::vector<Eigen::MatrixXd>& matrices,
                     const std::vector<double>& weights) {
  check_set(matrices, weights);
  if (v.rows() != matrices.front().rows() || v.cols() != v.rows())
    fail(ErrorCode::shape_mismatch, "rotation shape does not match the set");
  double total = 0.0;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    Eigen::MatrixXd d = v.transpose() * matrices[s] * v;
    total += weight_at(weights, s) * (d.squaredNorm() - d.diagonal().squaredNorm());
  }
  return total;
}

double diag_objective(const Eigen::MatrixXd& v, const std::vector<Eigen::MatrixXd>& matrices,
                      const std::vector<double>& weights) {
  check_set(matrices, weights);
  if (v.rows() != matrices.front().rows() || v.cols() != v.rows())
    fail(ErrorCode::shape_mismatch, "rotation shape does not match the set");
  double total = 0.0;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    Eigen::MatrixXd d = v.transpose() * matrices[s] * v;
    total += weight_at(weights, s) * d.diagonal().squaredNorm();
  }
  return total;
}

JointDiagResult joint_diagonalize(const std::vector<Eigen::MatrixXd>& matrices,
                                  const JointDiagConfig& cfg,
                                  const std::vector<double>& weights) {
  check_set(matrices, weights);
  if (!(cfg.tolerance > 0.0))
    fail(ErrorCode::invalid_argument, "tolerance must be positive");
  if (cfg.max_sweeps < 1)
    fail(ErrorCode::invalid_argument, "max_sweeps must be at least 1");

  const index_t p = matrices.front().rows();
  const std::size_t m = matrices.size();
  std::vector<Eigen::MatrixXd> work(matrices);

  JointDiagResult res;
  res.rotation = Eigen::MatrixXd::Identity(p, p);

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double max_sin = 0.0;
    for (index_t a = 0; a + 1 < p; ++a) {
      for (index_t b = a + 1; b < p; ++b) {
        // Accumulate the 2x2 objective form for the (a, b) plane: the angle
        // doubling [cos 2t, sin 2t] G [cos 2t, sin 2t]' is maximized along the
        // dominant eigenvector of G, which atan2 of (ton, toff) extracts.
        double g11 = 0.0, g12 = 0.0, g22 = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
          const double w = weight_at(weights, s);
          const double u = work[s](a, a) - work[s](b, b);
          const double v = work[s](a, b) + work[s](b, a);
          g11 += w * u * u;
          g12 += w * u * v;
          g22 += w * v * v;
        }
        const double ton = g11 - g22;
        const double toff = 2.0 * g12;
        const double theta = 0.5 * std::atan2(toff, ton + std::hypot(ton, toff));
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        if (std::abs(sn) > max_sin) max_sin = std::abs(sn);
        if (sn == 0.0) continue;
        for (std::size_t s = 0; s < m; ++s) {
          Eigen::MatrixXd& d = work[s];
          // d <- R' d R with R the rotation by theta in the (a, b) plane.
          Eigen::VectorXd ca = d.col(a), cb = d.col(b);
          d.col(a) = c * ca + sn * cb;
          d.col(b) = c * cb - sn * ca;
          Eigen::RowVectorXd ra = d.row(a), rb = d.row(b);
          d.row(a) = c * ra + sn * rb;
          d.row(b) = c * rb - sn * ra;
        }
        Eigen::VectorXd va = res.rotation.col(a), vb = res.rotation.col(b);
        res.rotation.col(a) = c * va + sn * vb;
        res.rotation.col(b) = c * vb - sn * va;
      }
    }
    res.sweeps_used = sweep;
    if (max_sin < cfg.tolerance) {
      res.converged = true;
      break;
    }
  }

  double off = 0.0;
  for (std::size_t s = 0; s < m; ++s)
    off += weight_at(weights, s) *
           (work[s].squaredNorm() - work[s].diagonal().squaredNorm());
  res.off_diagonal = off;
  return res;
}

}  // namespace tbss
