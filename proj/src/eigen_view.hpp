#pragma once

// Zero-copy Eigen views of row-major Matrix storage, for the hot kernels.

#include <span>

#include <Eigen/Core>

#include "lamil/tensor.hpp"

namespace lamil::detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

inline ConstView view(const Matrix& m) {
  return ConstView(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                   static_cast<Eigen::Index>(m.cols()));
}

inline View view(Matrix& m) {
  return View(m.data().data(), static_cast<Eigen::Index>(m.rows()),
              static_cast<Eigen::Index>(m.cols()));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()))
      .dot(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
}

inline Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace lamil::detail
