#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace igs {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double value);

  Matrix transposed() const;
  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double factor);

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix hadamard(const Matrix& a, const Matrix& b);

// Dense kernels. All accumulate into `out`, which must already be sized.
void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& out);     // out += a * b
void gemm_at_b_accumulate(const Matrix& a, const Matrix& b, Matrix& out);  // out += a^T * b
void gemm_a_bt_accumulate(const Matrix& a, const Matrix& b, Matrix& out);  // out += a * b^T

Matrix matmul(const Matrix& a, const Matrix& b);

/// Largest |a(i,j) - a(j,i)|; requires a square matrix.
double max_asymmetry(const Matrix& a);

}  // namespace igs
