#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace ssvep {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatView = Eigen::Map<RowMat>;
using ConstMatView = Eigen::Map<const RowMat>;

// Dense f64 array with an optional same-shape gradient buffer. Layout is
// row-major over the shape vector.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, bool req_grad = false);

  static Tensor zeros(std::vector<std::size_t> s, bool req_grad = false) {
    return Tensor(std::move(s), req_grad);
  }

  std::size_t size() const { return values.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  double& at(std::size_t i) { return values[i]; }
  double at(std::size_t i) const { return values[i]; }
  double& at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * shape[1] + j) * shape[2] + k];
  }

  void ensure_grad();
  void zero_grad();
  // NumericError naming `what` if any value is NaN/Inf.
  void check_finite(const char* what) const;

  // 2-D Eigen views over the flat buffers (caller supplies the factoring).
  MatView mat(std::size_t rows, std::size_t cols) {
    return MatView(values.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
  }
  ConstMatView mat(std::size_t rows, std::size_t cols) const {
    return ConstMatView(values.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
  }
  MatView grad_mat(std::size_t rows, std::size_t cols) {
    return MatView(grad.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
  }
};

}  // namespace ssvep
