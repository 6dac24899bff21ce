#include "lamil/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eigen_view.hpp"

namespace lamil {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": dimension mismatch " + a.shape() + " and " +
                              b.shape());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

std::string Matrix::shape() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

using detail::view;

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_bt", a, b);
  Matrix out(a.rows(), b.rows());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_at", a, b);
  Matrix out(a.cols(), b.cols());
  if (a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
}

void add_row_inplace(Matrix& a, std::span<const double> row) {
  require_same_length(a.cols(), row.size(), "add_row");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row[j];
  }
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> s(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) s[j] += r[j];
  }
  return s;
}

LayerNormResult layer_norm_with_stats(std::span<const double> x, std::span<const double> gamma,
                                      std::span<const double> beta, double eps) {
  require_same_length(x.size(), gamma.size(), "layer_norm gamma");
  require_same_length(x.size(), beta.size(), "layer_norm beta");
  if (x.empty()) throw std::invalid_argument("layer_norm: empty input");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;

  LayerNormResult r;
  r.out.resize(x.size());
  r.normalized.resize(x.size());
  // Zero variance with eps = 0 would divide by zero; the centred input is all
  // zeros in that case, so the normalized value is zero too.
  const double denom = std::sqrt(var + eps);
  r.inv_std = denom > 0.0 ? 1.0 / denom : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.normalized[i] = (x[i] - mean) * r.inv_std;
    r.out[i] = gamma[i] * r.normalized[i] + beta[i];
  }
  return r;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gamma,
                               std::span<const double> beta, double eps) {
  return layer_norm_with_stats(x, gamma, beta, eps).out;
}

std::vector<double> layer_norm_backward(std::span<const double> dy, const LayerNormResult& fwd,
                                        std::span<const double> gamma, std::span<double> dgamma,
                                        std::span<double> dbeta) {
  const std::size_t d = dy.size();
  const double n = static_cast<double>(d);
  std::vector<double> dxhat(d);
  double mean_dxhat = 0.0;
  double mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    dgamma[i] += dy[i] * fwd.normalized[i];
    dbeta[i] += dy[i];
    dxhat[i] = dy[i] * gamma[i];
    mean_dxhat += dxhat[i];
    mean_dxhat_xhat += dxhat[i] * fwd.normalized[i];
  }
  mean_dxhat /= n;
  mean_dxhat_xhat /= n;
  std::vector<double> dx(d);
  for (std::size_t i = 0; i < d; ++i) {
    dx[i] = fwd.inv_std * (dxhat[i] - mean_dxhat - fwd.normalized[i] * mean_dxhat_xhat);
  }
  return dx;
}

std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> y(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (double& v : y) v /= sum;
  return y;
}

std::vector<double> softmax_backward(std::span<const double> y, std::span<const double> dy) {
  require_same_length(y.size(), dy.size(), "softmax_backward");
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
  std::vector<double> dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - dot);
  return dx;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  // log σ(x) = -log(1 + e^{-x}) = min(x, 0) - log1p(e^{-|x|})
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

double grad_check(const ScalarFn& f, std::span<const double> analytic_grad,
                  std::span<const double> x, double h) {
  require_same_length(analytic_grad.size(), x.size(), "grad_check");
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("grad_check: non-finite evaluation at index " + std::to_string(i));
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic_grad[i] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace lamil
