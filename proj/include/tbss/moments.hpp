#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tbss/tensor.hpp"

namespace tbss {

/// n matrices of a common shape p x q; observation t is the column-major
/// p x q block at data()[t * p * q].  The full buffer therefore doubles as a
/// single column-major p x (q n) matrix, which the second-moment routines use.
class MatrixSample {
public:
  MatrixSample() = default;
  MatrixSample(index_t p, index_t q, index_t n);

  index_t p() const { return p_; }
  index_t q() const { return q_; }
  index_t n() const { return n_; }

  Eigen::Map<const Eigen::MatrixXd> observation(index_t t) const {
    return {data_.data() + t * p_ * q_, p_, q_};
  }
  Eigen::Map<Eigen::MatrixXd> observation(index_t t) {
    return {data_.data() + t * p_ * q_, p_, q_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

private:
  index_t p_ = 0, q_ = 0, n_ = 0;
  std::vector<double> data_;
};

/// Matricizes every observation at the given 1-based mode.
MatrixSample matricize_sample(const TensorSample& s, int mode);

/// Vectorizes every observation (each becomes a rho x 1 matrix).
MatrixSample vectorize_sample(const TensorSample& s);

/// Subtracts the sample mean matrix.
void center_in_place(MatrixSample& s);

/// Left covariance (1/(n q)) sum_t X_t X_t'.  Divides by n, not n - 1.
Eigen::MatrixXd left_cov(const MatrixSample& s);

/// Right covariance (1/(n p)) sum_t X_t' X_t; equals left_cov of the
/// transposed sample.
Eigen::MatrixXd right_cov(const MatrixSample& s);

/// Inverse symmetric square root of an SPD matrix via its eigendecomposition.
/// Eigenvalues below eps = 1e-12 * max eigenvalue are rejected with an error
/// naming the offending eigenvalue.
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m);

/// Two-sided standardization Y_t = S1 X_t S2 with S1 = left_cov^{-1/2} and
/// S2 = right_cov^{-1/2} of the (assumed centered) input.
MatrixSample standardize(const MatrixSample& s);

/// Fourth-moment matrix B = (1/(n q)) sum_t (X_t X_t')^2 of an (assumed
/// standardized) sample.  For i.i.d. standardized latent entries its
/// eigenvalues approach kappa_k + p + q + 1 where kappa_k is the mean excess
/// kurtosis of row k.
Eigen::MatrixXd fobi_matrix(const MatrixSample& s);

/// Cumulant matrix (0-based indices i, j):
///   C^{ij} = (1/(n q)) sum_t (X_t X_t')_{ij} X_t X_t'
///            - S (delta_ij q I + E^{ij} + E^{ji}) S'
/// where S is the recomputed sample left covariance and E^{ij} = e_i e_j'.
Eigen::MatrixXd cumulant_matrix(const MatrixSample& s, index_t i, index_t j);

/// The band-limited family {C^{ij} : |i - j| < k}.  Mirrored duplicates are
/// stored once: pairs lists every ordered (i, j) and pair_matrix maps each
/// pair to its entry in matrices (which holds only i <= j).  weights carries
/// the multiplicity (1 on the diagonal, 2 off it) matching the ordered family.
struct CumulantSet {
  index_t p = 0;
  index_t k = 0;
  double tau2 = 0.0;  // trace(left covariance) / p of the input sample
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<double> weights;
  std::vector<std::pair<index_t, index_t>> pairs;
  std::vector<index_t> pair_matrix;
};

CumulantSet cumulant_set(const MatrixSample& s, index_t k);

}  // namespace tbss
