#include "dwsnn/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "dwsnn/error.hpp"

namespace dwsnn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape));
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data_[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape_ = {values.size()};
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  if (values.size() != rows * cols)
    throw Error(ErrorClass::Shape, "matrix literal size mismatch");
  Tensor t;
  t.shape_ = {rows, cols};
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return rank() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  return rank() == 1 ? shape_[0] : shape_[rank() - 1];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_inplace(const Tensor& other) {
  if (!same_shape(other))
    throw Error(ErrorClass::Shape, "add_inplace shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::axpy_inplace(double alpha, const Tensor& other) {
  if (!same_shape(other))
    throw Error(ErrorClass::Shape, "axpy_inplace shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += alpha * other.data_[i];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw Error(ErrorClass::Shape, "matmul expects rank-2 tensors");
  if (a.cols() != b.rows())
    throw Error(ErrorClass::Shape, "matmul inner dimension mismatch");
  Tensor out({a.rows(), b.cols()});
  MatMap(out.data(), a.rows(), b.cols()).noalias() =
      ConstMatMap(a.data(), a.rows(), a.cols()) *
      ConstMatMap(b.data(), b.rows(), b.cols());
  return out;
}

void matmul_accum(Tensor& out, const Tensor& a, bool transpose_a,
                  const Tensor& b, bool transpose_b) {
  const std::size_t am = transpose_a ? a.cols() : a.rows();
  const std::size_t ak = transpose_a ? a.rows() : a.cols();
  const std::size_t bk = transpose_b ? b.cols() : b.rows();
  const std::size_t bn = transpose_b ? b.rows() : b.cols();
  if (ak != bk || out.rows() != am || out.cols() != bn)
    throw Error(ErrorClass::Shape, "matmul_accum dimension mismatch");

  ConstMatMap ma(a.data(), a.rows(), a.cols());
  ConstMatMap mb(b.data(), b.rows(), b.cols());
  MatMap mo(out.data(), am, bn);
  if (!transpose_a && !transpose_b)
    mo.noalias() += ma * mb;
  else if (transpose_a && !transpose_b)
    mo.noalias() += ma.transpose() * mb;
  else if (!transpose_a && transpose_b)
    mo.noalias() += ma * mb.transpose();
  else
    mo.noalias() += ma.transpose() * mb.transpose();
}

}  // namespace dwsnn
