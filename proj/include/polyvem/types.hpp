#pragma once

#include <Eigen/Dense>

namespace vem {

using Vector2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Matrix2 = Eigen::Matrix2d;
using Matrix3 = Eigen::Matrix3d;

// dim P_d in two variables; d = -1 denotes the empty space {0}
inline int poly_dim(int degree) {
  return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2;
}

}  // namespace vem
