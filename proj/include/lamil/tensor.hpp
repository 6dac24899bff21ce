#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lamil {

// Dense row-major matrix of doubles. Vectors are plain std::vector<double>.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  std::string shape() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix identity(std::size_t n);
Matrix transpose(const Matrix& a);

// a[m×p] · b[p×q]
Matrix matmul(const Matrix& a, const Matrix& b);
// a[m×p] · b[q×p]ᵀ
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a[p×m]ᵀ · b[p×q]
Matrix matmul_at(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& a, const Matrix& b);
void add_row_inplace(Matrix& a, std::span<const double> row);
std::vector<double> column_sums(const Matrix& a);

struct LayerNormResult {
  std::vector<double> out;
  std::vector<double> normalized;  // (x - mean) / sqrt(var + eps)
  double inv_std = 0.0;
};

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gamma,
                               std::span<const double> beta, double eps);
LayerNormResult layer_norm_with_stats(std::span<const double> x, std::span<const double> gamma,
                                      std::span<const double> beta, double eps);

// Accumulates into dgamma/dbeta and returns dx.
std::vector<double> layer_norm_backward(std::span<const double> dy, const LayerNormResult& fwd,
                                        std::span<const double> gamma, std::span<double> dgamma,
                                        std::span<double> dbeta);

std::vector<double> softmax(std::span<const double> x);
// dx_i = y_i (dy_i - Σ_j y_j dy_j)
std::vector<double> softmax_backward(std::span<const double> y, std::span<const double> dy);

double sigmoid(double x);
// log σ(x), stable for large |x|.
double log_sigmoid(double x);

using ScalarFn = std::function<double(std::span<const double>)>;

// max_i |g_i - fd_i| / max(1, |fd_i|) with central differences of step h.
double grad_check(const ScalarFn& f, std::span<const double> analytic_grad,
                  std::span<const double> x, double h = 1e-5);

}  // namespace lamil
