#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tbss/tensor.hpp"

namespace tbss {

struct JointDiagConfig {
  double tolerance = 1e-6;  // convergence: largest |sin theta| in a full sweep
  int max_sweeps = 100;
};

struct JointDiagResult {
  Eigen::MatrixXd rotation;  // orthogonal V with V' C V jointly near-diagonal
  int sweeps_used = 0;
  bool converged = false;
  double off_diagonal = 0.0;  // final weighted off objective
};

/// Sum of squared off-diagonal entries of v' C v over the set (optionally
/// weighted); v must be square and match the matrices.
double off_objective(const Eigen::MatrixXd& v, const std::vector<Eigen::MatrixXd>& matrices,
                     const std::vector<double>& weights = {});

/// Sum of squared diagonal entries of v' C v over the set.  For orthogonal v,
/// off_objective + diag_objective is the (weighted) total squared norm of the
/// set and does not depend on v.
double diag_objective(const Eigen::MatrixXd& v, const std::vector<Eigen::MatrixXd>& matrices,
                      const std::vector<double>& weights = {});

/// Cyclic Jacobi scheme over Givens rotations: every sweep visits all index
/// pairs (a, b), picks the closed-form angle maximizing the plane-restricted
/// diagonal objective, and applies it to the whole set.  Starts from the
/// identity; stops when the largest |sin theta| in a sweep drops below
/// cfg.tolerance or after cfg.max_sweeps sweeps (converged reports which).
JointDiagResult joint_diagonalize(const std::vector<Eigen::MatrixXd>& matrices,
                                  const JointDiagConfig& cfg = {},
                                  const std::vector<double>& weights = {});

}  // namespace tbss
