#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace autoal {

// Dense row-major matrix of doubles. The universal carrier for features,
// logits, probabilities and gradients.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  // C = this * other; throws ShapeError on inner-dimension mismatch.
  Matrix matmul(const Matrix& other) const;
  Matrix transposed() const;

  void fill(double value);
  void add_inplace(const Matrix& other);  // ShapeError on mismatch
  void scale_inplace(double factor);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace autoal
