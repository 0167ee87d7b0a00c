#include "polyvem/stabilization.hpp"

#include <stdexcept>

namespace vem {

Matrix stab_matrix_raw(int kind, const ElementOps& ops, const Matrix& consistency) {
  const int n = ops.ndof();
  switch (kind) {
    case 1:
      return Matrix::Identity(n, n);
    case 2: {
      Matrix s = Matrix::Zero(n, n);
      for (int r : ops.layout().boundary_dofs()) s(r, r) = 1.0;
      return s;
    }
    case 3: {
      Matrix s = Matrix::Zero(n, n);
      for (int r = 0; r < n; ++r) s(r, r) = std::max(1.0, consistency(r, r));
      return s;
    }
    case 4: {
      const int k = ops.k();
      const double h = ops.diameter();
      Matrix s = (double(k) / h) * ops.boundary_mass();
      if (k >= 2) {
        const Matrix p0 = ops.pi0_star(k - 2);
        s.noalias() += (double(k) * k / (h * h)) * (p0.transpose() * p0);
      }
      return s;
    }
    case 5: {
      const Matrix D = ops.dof_matrix(ops.k());
      Eigen::LDLT<Matrix> dtd(Matrix(D.transpose() * D));
      if (dtd.info() != Eigen::Success || !dtd.isPositive())
        throw std::runtime_error("S5: D^T D numerically singular (degenerate element)");
      return Matrix::Identity(n, n) - D * dtd.solve(D.transpose());
    }
    default:
      throw std::invalid_argument("stab_matrix: kind must be in 1..5");
  }
}

Matrix stab_matrix(int kind, const ElementOps& ops, const Matrix& consistency) {
  const Matrix raw = stab_matrix_raw(kind, ops, consistency);
  const Matrix residual =
      Matrix::Identity(ops.ndof(), ops.ndof()) - ops.primary_projector().pi_dof;
  Matrix s = residual.transpose() * raw * residual;
  if (ops.problem() == Problem::Elasticity && kind != 3) s *= consistency.trace();
  return s;
}

double tau_mean(const Matrix& consistency) {
  return consistency.trace() / consistency.rows();
}

}  // namespace vem
