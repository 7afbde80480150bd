#include "tbss/tensor.hpp"

#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_dims(const std::vector<index_t>& dims) {
  if (dims.empty())
    fail(ErrorCode::invalid_argument, "tensor order must be at least 1");
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i] < 1)
      fail(ErrorCode::invalid_argument,
           "tensor dimension " + std::to_string(i + 1) + " must be positive, got " +
               std::to_string(dims[i]));
}

void check_mode(const std::vector<index_t>& dims, int mode) {
  if (mode < 1 || static_cast<std::size_t>(mode) > dims.size())
    fail(ErrorCode::invalid_argument,
         "mode " + std::to_string(mode) + " out of range for order " +
             std::to_string(dims.size()) + " tensor");
}

// Row-major strides: stride[j] = prod of dims after j.
std::vector<index_t> strides_of(const std::vector<index_t>& dims) {
  std::vector<index_t> s(dims.size(), 1);
  for (index_t j = static_cast<index_t>(dims.size()) - 2; j >= 0; --j)
    s[j] = s[j + 1] * dims[j + 1];
  return s;
}

}  // namespace

index_t dim_product(const std::vector<index_t>& dims) {
  index_t p = 1;
  for (index_t d : dims) p *= d;
  return p;
}

Tensor::Tensor(std::vector<index_t> dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(static_cast<std::size_t>(dim_product(dims_)), 0.0);
}

Tensor::Tensor(std::vector<index_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (static_cast<index_t>(data_.size()) != dim_product(dims_))
    fail(ErrorCode::shape_mismatch,
         "tensor data has " + std::to_string(data_.size()) + " elements, shape needs " +
             std::to_string(dim_product(dims_)));
}

index_t Tensor::offset(const std::vector<index_t>& idx) const {
  if (idx.size() != dims_.size())
    fail(ErrorCode::invalid_argument, "index order does not match tensor order");
  index_t off = 0;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= dims_[j])
      fail(ErrorCode::invalid_argument, "tensor index out of range");
    off = off * dims_[j] + idx[j];
  }
  return off;
}

double Tensor::operator()(const std::vector<index_t>& idx) const {
  return data_[static_cast<std::size_t>(offset(idx))];
}

double& Tensor::operator()(const std::vector<index_t>& idx) {
  return data_[static_cast<std::size_t>(offset(idx))];
}

TensorSample::TensorSample(std::vector<index_t> dims, index_t n)
    : dims_(std::move(dims)), n_(n) {
  check_dims(dims_);
  if (n < 0) fail(ErrorCode::invalid_argument, "sample size must be non-negative");
  cell_count_ = dim_product(dims_);
  data_.assign(static_cast<std::size_t>(n_ * cell_count_), 0.0);
}

Tensor TensorSample::tensor(index_t t) const {
  if (t < 0 || t >= n_) fail(ErrorCode::invalid_argument, "observation index out of range");
  std::vector<double> d(observation(t), observation(t) + cell_count_);
  return Tensor(dims_, std::move(d));
}

void TensorSample::set_tensor(index_t t, const Tensor& x) {
  if (t < 0 || t >= n_) fail(ErrorCode::invalid_argument, "observation index out of range");
  if (x.dims() != dims_) fail(ErrorCode::shape_mismatch, "observation shape mismatch");
  std::copy(x.data(), x.data() + cell_count_, observation(t));
}

namespace {

// Shared kernel: y = x ×_m a for one observation laid out row-major.
// With inner = prod dims after m and outer = prod dims before m, the slab for
// a fixed outer index is a contiguous p_m x inner row-major block.
void mode_multiply_kernel(const double* x, double* y, const std::vector<index_t>& dims,
                          int mode, const Eigen::MatrixXd& a) {
  const index_t p = dims[mode - 1];
  const index_t q = a.rows();
  index_t inner = 1, outer = 1;
  for (std::size_t j = static_cast<std::size_t>(mode); j < dims.size(); ++j) inner *= dims[j];
  for (int j = 0; j + 1 < mode; ++j) outer *= dims[j];
  for (index_t o = 0; o < outer; ++o) {
    Eigen::Map<const RowMajorMatrix> in(x + o * p * inner, p, inner);
    Eigen::Map<RowMajorMatrix> out(y + o * q * inner, q, inner);
    out.noalias() = a * in;
  }
}

}  // namespace

Tensor m_mode_multiply(const Tensor& x, const Eigen::MatrixXd& a, int mode) {
  check_mode(x.dims(), mode);
  if (a.cols() != x.dims()[mode - 1])
    fail(ErrorCode::shape_mismatch,
         "mode " + std::to_string(mode) + " has extent " +
             std::to_string(x.dims()[mode - 1]) + ", matrix has " +
             std::to_string(a.cols()) + " columns");
  std::vector<index_t> out_dims = x.dims();
  out_dims[mode - 1] = a.rows();
  Tensor y(out_dims);
  mode_multiply_kernel(x.data(), y.data(), x.dims(), mode, a);
  return y;
}

TensorSample m_mode_multiply(const TensorSample& s, const Eigen::MatrixXd& a, int mode) {
  check_mode(s.dims(), mode);
  if (a.cols() != s.dims()[mode - 1])
    fail(ErrorCode::shape_mismatch,
         "mode " + std::to_string(mode) + " has extent " +
             std::to_string(s.dims()[mode - 1]) + ", matrix has " +
             std::to_string(a.cols()) + " columns");
  std::vector<index_t> out_dims = s.dims();
  out_dims[mode - 1] = a.rows();
  TensorSample out(out_dims, s.n());
  for (index_t t = 0; t < s.n(); ++t)
    mode_multiply_kernel(s.observation(t), out.observation(t), s.dims(), mode, a);
  return out;
}

Eigen::MatrixXd matricize(const Tensor& x, int mode) {
  check_mode(x.dims(), mode);
  const std::vector<index_t>& dims = x.dims();
  const std::vector<index_t> strides = strides_of(dims);
  const index_t r = x.order();
  const index_t p = dims[mode - 1];
  const index_t cols = x.size() / p;
  const index_t mode_stride = strides[mode - 1];

  // Remaining modes in cyclic order (m+1, ..., r, 1, ..., m-1); the odometer
  // below increments the rightmost digit fastest, so the leftmost is slowest.
  std::vector<index_t> ord;
  for (index_t j = mode; j < r; ++j) ord.push_back(j);          // 0-based m..r-1
  for (index_t j = 0; j + 1 < mode; ++j) ord.push_back(j);      // 0-based 0..m-2

  Eigen::MatrixXd out(p, cols);
  std::vector<index_t> digit(ord.size(), 0);
  index_t base = 0;
  for (index_t c = 0; c < cols; ++c) {
    const double* src = x.data() + base;
    for (index_t i = 0; i < p; ++i) out(i, c) = src[i * mode_stride];
    for (index_t d = static_cast<index_t>(ord.size()) - 1; d >= 0; --d) {
      const index_t j = ord[d];
      ++digit[d];
      base += strides[j];
      if (digit[d] < dims[j]) break;
      base -= digit[d] * strides[j];
      digit[d] = 0;
    }
  }
  return out;
}

Eigen::VectorXd vectorize(const Tensor& x) {
  Eigen::MatrixXd m1 = matricize(x, 1);
  return Eigen::Map<const Eigen::VectorXd>(m1.data(), m1.size());
}

Tensor devectorize(const Eigen::VectorXd& v, const std::vector<index_t>& dims) {
  check_dims(dims);
  if (v.size() != dim_product(dims))
    fail(ErrorCode::shape_mismatch,
         "vector of length " + std::to_string(v.size()) + " cannot fill shape of size " +
             std::to_string(dim_product(dims)));
  // Invert the column-stacked mode-1 matricization: entry (i_1,...,i_r) sits at
  // column c (odometer over modes 2..r, leftmost slowest) and row i_1.
  const std::vector<index_t> strides = strides_of(dims);
  const index_t p = dims[0];
  const index_t cols = v.size() / p;
  Tensor x(dims);
  std::vector<index_t> ord;
  for (std::size_t j = 1; j < dims.size(); ++j) ord.push_back(static_cast<index_t>(j));
  std::vector<index_t> digit(ord.size(), 0);
  index_t base = 0;
  for (index_t c = 0; c < cols; ++c) {
    double* dst = x.data() + base;
    for (index_t i = 0; i < p; ++i) dst[i * strides[0]] = v[c * p + i];
    for (index_t d = static_cast<index_t>(ord.size()) - 1; d >= 0; --d) {
      const index_t j = ord[d];
      ++digit[d];
      base += strides[j];
      if (digit[d] < dims[j]) break;
      base -= digit[d] * strides[j];
      digit[d] = 0;
    }
  }
  return x;
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (index_t i = 0; i < a.rows(); ++i)
    for (index_t j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd kronecker_compound(const std::vector<Eigen::MatrixXd>& mats) {
  if (mats.empty()) fail(ErrorCode::invalid_argument, "compound of empty matrix list");
  if (mats.size() == 1) return mats[0];
  Eigen::MatrixXd acc = mats[1];
  for (std::size_t j = 2; j < mats.size(); ++j) acc = kronecker(acc, mats[j]);
  return kronecker(acc, mats[0]);
}

void center_in_place(TensorSample& s) {
  const index_t cells = s.cell_count();
  const index_t n = s.n();
  if (n == 0) return;
  std::vector<double> mean(static_cast<std::size_t>(cells), 0.0);
  for (index_t t = 0; t < n; ++t) {
    const double* obs = s.observation(t);
    for (index_t c = 0; c < cells; ++c) mean[c] += obs[c];
  }
  for (index_t c = 0; c < cells; ++c) mean[c] /= static_cast<double>(n);
  for (index_t t = 0; t < n; ++t) {
    double* obs = s.observation(t);
    for (index_t c = 0; c < cells; ++c) obs[c] -= mean[c];
  }
}

}  // namespace tbss
