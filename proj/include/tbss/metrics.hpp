#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tbss/estimators.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

/// Minimum-distance index of a gain matrix g (rho x rho, invertible):
///   D(g) = inf_C ||C g - I||_F / sqrt(rho - 1)
/// over matrices C with exactly one nonzero entry per row and column.  The
/// row-wise scale optimum reduces the infimum to a linear assignment over
/// W(r, c) = g(r, c)^2 / ||g(r, .)||^2, solved exactly in O(rho^3).  Ranges
/// over [0, 1]; 0 iff g is a scaled-permutation matrix.
double md_index(const Eigen::MatrixXd& g);

/// Reference implementation enumerating all permutations (rho <= 8).
double md_index_bruteforce(const Eigen::MatrixXd& g);

/// n (rho - 1) D^2: the scale on which sqrt(n)-consistent estimators have a
/// non-degenerate limit.
double transformed_md(double md, index_t n, index_t rho);

/// Exact maximum of sum_i w(pi(i), i) over permutations pi (Hungarian method
/// with potentials).
double max_assignment(const Eigen::MatrixXd& w);

/// Compound gain of a fit against the true per-mode mixing matrices, on the
/// vectorized scale: compound unmixing times kronecker_compound(mixings).
/// For vectorized results the single gamma is already rho x rho.
Eigen::MatrixXd gain_matrix(const UnmixingResult& result,
                            const std::vector<Eigen::MatrixXd>& mixings);

struct ScreePoint {
  index_t k = 0;
  double mstar = 0.0;
};

/// Band-width scree for one mode: fits the mode with k = 1..p and reports
///   m*_k = (1/(p-k)) sum_{l=1}^{p-k} D(gamma_k gamma_{k+l}^{-1})
/// for k = 1..p-1.  Other modes are handled with a fixed k = 1 reference plan;
/// the curve is invariant to that choice.  The elbow (first k after which the
/// curve stays low) estimates the largest kurtosis multiplicity of the mode.
std::vector<ScreePoint> scree(const TensorSample& s, int mode, const FitConfig& cfg = {});

}  // namespace tbss
