#pragma once

#include <cstddef>
#include <vector>

namespace dwsnn {

// Dense row-major tensor of doubles. Rank 1 or 2 is all the network needs;
// time-major batches are carried as [(T*B) x F] matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);  // shape [n]
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors; rank-1 tensors behave as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  void fill(double v);
  void add_inplace(const Tensor& other);           // elementwise +=
  void axpy_inplace(double alpha, const Tensor&);  // this += alpha * other

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// C = A * B for 2-D tensors [m x k] * [k x n]; throws Error(Shape) on
// mismatched inner dimensions.
Tensor matmul(const Tensor& a, const Tensor& b);

// C += A * B (optionally transposing either input); used by backward rules.
void matmul_accum(Tensor& out, const Tensor& a, bool transpose_a,
                  const Tensor& b, bool transpose_b);

}  // namespace dwsnn
