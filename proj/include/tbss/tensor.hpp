#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tbss {

using index_t = std::int64_t;

index_t dim_product(const std::vector<index_t>& dims);

/// Dense real tensor of order r >= 1.  Elements are stored row-major over
/// (i_1, ..., i_r): the last index varies fastest, so the linear position of
/// (i_1, ..., i_r) is (((i_1 p_2 + i_2) p_3 + i_3) ... ) p_r + i_r.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<index_t> dims);
  Tensor(std::vector<index_t> dims, std::vector<double> data);

  index_t order() const { return static_cast<index_t>(dims_.size()); }
  const std::vector<index_t>& dims() const { return dims_; }
  index_t size() const { return static_cast<index_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double operator()(const std::vector<index_t>& idx) const;
  double& operator()(const std::vector<index_t>& idx);

private:
  index_t offset(const std::vector<index_t>& idx) const;

  std::vector<index_t> dims_;
  std::vector<double> data_;
};

/// n tensors of a common shape, observation-major: observation t occupies the
/// contiguous slice [t * cell_count, (t + 1) * cell_count) of data().
class TensorSample {
public:
  TensorSample() = default;
  TensorSample(std::vector<index_t> dims, index_t n);

  index_t n() const { return n_; }
  const std::vector<index_t>& dims() const { return dims_; }
  index_t order() const { return static_cast<index_t>(dims_.size()); }
  index_t cell_count() const { return cell_count_; }

  double* observation(index_t t) { return data_.data() + t * cell_count_; }
  const double* observation(index_t t) const { return data_.data() + t * cell_count_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Tensor tensor(index_t t) const;
  void set_tensor(index_t t, const Tensor& x);

private:
  std::vector<index_t> dims_;
  index_t n_ = 0;
  index_t cell_count_ = 0;
  std::vector<double> data_;
};

/// x ×_m a: multiplies every mode-m fiber of x by a (mode is 1-based),
/// (x ×_m a)(i_1,..,i_m,..,i_r) = sum_j a(i_m, j) x(i_1,..,j,..,i_r).
Tensor m_mode_multiply(const Tensor& x, const Eigen::MatrixXd& a, int mode);

/// Applies x_t -> x_t ×_m a to every observation.
TensorSample m_mode_multiply(const TensorSample& s, const Eigen::MatrixXd& a, int mode);

/// Mode-m matricization, p_m x (prod dims / p_m).  Columns run over the
/// remaining modes in the cyclic order (m+1, ..., r, 1, ..., m-1) with the
/// leftmost slowest, which makes the identity
///   matricize(x ×_m a, m) = a * matricize(x, m)
/// hold together with the corresponding Kronecker identity on the right side
/// (see kronecker_compound).
Eigen::MatrixXd matricize(const Tensor& x, int mode);

/// Column-stacking of matricize(x, 1); for matrices this is the classic
/// column-major vec with vec(a x b') = (b ⊗ a) vec(x).
Eigen::VectorXd vectorize(const Tensor& x);

/// Inverse of vectorize for the given shape.
Tensor devectorize(const Eigen::VectorXd& v, const std::vector<index_t>& dims);

/// Kronecker product a ⊗ b.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// The compound matrix consistent with vectorize:
///   vectorize(x ×_1 a_1 ... ×_r a_r) = kronecker_compound({a_1,...,a_r}) * vectorize(x),
/// namely a_2 ⊗ a_3 ⊗ ... ⊗ a_r ⊗ a_1 (and just a_1 when r = 1).
Eigen::MatrixXd kronecker_compound(const std::vector<Eigen::MatrixXd>& mats);

/// Subtracts the per-cell mean across observations.
void center_in_place(TensorSample& s);

}  // namespace tbss
