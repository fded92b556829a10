#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace imgbk {

// Dense row-major float64 matrix. The only tensor rank in the project;
// vectors are n x 1 or 1 x n, scalars 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::int64_t rows, std::int64_t cols);  // zero-filled
  static Tensor full(std::int64_t rows, std::int64_t cols, double value);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }

  double& operator()(std::int64_t i, std::int64_t j) { return data_[i * cols_ + j]; }
  double operator()(std::int64_t i, std::int64_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::int64_t i) { return {data_.data() + i * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(std::int64_t i) const {
    return {data_.data() + i * cols_, static_cast<std::size_t>(cols_)};
  }

  bool same_shape(const Tensor& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool operator==(const Tensor& other) const {
    return same_shape(other) && data_ == other.data_;
  }

  void fill(double value);

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<double> data_;
};

// Value-level kernels shared by the tape and by gradient-free evaluation.
// All throw std::invalid_argument on shape mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor tanh_map(const Tensor& a);
Tensor sigmoid_map(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor select_rows(const Tensor& a, std::span<const std::int64_t> rows);
Tensor log_softmax_rows(const Tensor& a);
Tensor softmax_rows(const Tensor& a);

bool all_finite(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace imgbk
