#include "polyvem/coefficients.hpp"

#include <cmath>
#include <stdexcept>

namespace vem {

Matrix3 plane_stress_matrix(double e1, double e2, double nu12, double nu21, double g12) {
  const double d = 1.0 - nu12 * nu21;
  Matrix3 c = Matrix3::Zero();
  c(0, 0) = e1 / d;
  c(1, 1) = e2 / d;
  c(0, 1) = c(1, 0) = nu12 * e2 / d;
  c(2, 2) = g12;
  return c;
}

Coefficient2x2 identity_coefficient() {
  Coefficient2x2 c;
  c.value = [](const Vector2&) { return Matrix2::Identity(); };
  c.dx = [](const Vector2&) { return Matrix2::Zero(); };
  c.dy = [](const Vector2&) { return Matrix2::Zero(); };
  c.constant = true;
  c.name = "identity";
  return c;
}

Coefficient2x2 builtin_coefficient(const std::string& name) {
  Coefficient2x2 c;
  c.name = name;
  if (name == "identity") return identity_coefficient();
  if (name == "poly-diag") {
    c.value = [](const Vector2& p) {
      Matrix2 a = Matrix2::Zero();
      a(0, 0) = p.x() + 1.0;
      a(1, 1) = p.y() + 1.0;
      return a;
    };
    c.dx = [](const Vector2&) {
      Matrix2 a = Matrix2::Zero();
      a(0, 0) = 1.0;
      return a;
    };
    c.dy = [](const Vector2&) {
      Matrix2 a = Matrix2::Zero();
      a(1, 1) = 1.0;
      return a;
    };
    return c;
  }
  if (name == "trig") {
    const double pi = std::acos(-1.0);
    c.value = [pi](const Vector2& p) {
      const double cx = std::cos(pi * p.x()), sy = std::sin(pi * p.y());
      Matrix2 a;
      a(0, 0) = std::pow(cx, 4) + 1.0;
      a(0, 1) = a(1, 0) = cx * cx * sy * sy;
      a(1, 1) = std::pow(sy, 4) + 3.0;
      return a;
    };
    c.dx = [pi](const Vector2& p) {
      const double cx = std::cos(pi * p.x()), sx = std::sin(pi * p.x());
      const double sy = std::sin(pi * p.y());
      Matrix2 a;
      a(0, 0) = -4.0 * pi * std::pow(cx, 3) * sx;
      a(0, 1) = a(1, 0) = -2.0 * pi * cx * sx * sy * sy;
      a(1, 1) = 0.0;
      return a;
    };
    c.dy = [pi](const Vector2& p) {
      const double cx = std::cos(pi * p.x());
      const double sy = std::sin(pi * p.y()), cy = std::cos(pi * p.y());
      Matrix2 a;
      a(0, 0) = 0.0;
      a(0, 1) = a(1, 0) = 2.0 * pi * cx * cx * sy * cy;
      a(1, 1) = 4.0 * pi * std::pow(sy, 3) * cy;
      return a;
    };
    return c;
  }
  throw std::invalid_argument("unknown coefficient: " + name);
}

ElasticityCoefficient isotropic_elasticity(double e, double nu) {
  ElasticityCoefficient c;
  const Matrix3 m = plane_stress_matrix(e, e, nu, nu, e / (2.0 * (1.0 + nu)));
  c.value = [m](const Vector2&) { return m; };
  c.dx = [](const Vector2&) { return Matrix3::Zero(); };
  c.dy = [](const Vector2&) { return Matrix3::Zero(); };
  c.constant = true;
  c.name = "isotropic";
  return c;
}

ElasticityCoefficient builtin_elasticity(const std::string& name) {
  if (name == "isotropic") return isotropic_elasticity(72000.0, 0.3);
  if (name == "elasticity-poly") {
    // E1 = E2 = 72000 (1 + 100 (x-xc)^4 + (y-yc)^2) about (0.5, 0.5),
    // nu = 0.33, G12 = E1 / (2 (1 + nu)).
    ElasticityCoefficient c;
    c.name = name;
    const double nu = 0.33, xc = 0.5, yc = 0.5;
    auto modulus = [=](const Vector2& p) {
      return 72000.0 * (1.0 + 100.0 * std::pow(p.x() - xc, 4) + (p.y() - yc) * (p.y() - yc));
    };
    c.value = [=](const Vector2& p) {
      const double e = modulus(p);
      return plane_stress_matrix(e, e, nu, nu, e / (2.0 * (1.0 + nu)));
    };
    // C is linear in the single modulus, so dC = C(E=dE).
    c.dx = [=](const Vector2& p) {
      const double de = 72000.0 * 400.0 * std::pow(p.x() - xc, 3);
      return plane_stress_matrix(de, de, nu, nu, de / (2.0 * (1.0 + nu)));
    };
    c.dy = [=](const Vector2& p) {
      const double de = 72000.0 * 2.0 * (p.y() - yc);
      return plane_stress_matrix(de, de, nu, nu, de / (2.0 * (1.0 + nu)));
    };
    return c;
  }
  throw std::invalid_argument("unknown elasticity coefficient: " + name);
}

Matrix2 piecewise_constant_approx(const Coefficient2x2& c, const QuadRule2D& rule) {
  Matrix2 acc = Matrix2::Zero();
  for (int q = 0; q < rule.size(); ++q) acc += c.value(rule.points.col(q));
  return acc / double(rule.size());
}

Matrix3 piecewise_constant_approx(const ElasticityCoefficient& c, const QuadRule2D& rule) {
  Matrix3 acc = Matrix3::Zero();
  for (int q = 0; q < rule.size(); ++q) acc += c.value(rule.points.col(q));
  return acc / double(rule.size());
}

namespace {
template <typename Coeff>
double min_eig(const Coeff& c, const QuadRule2D& rule) {
  double lo = std::numeric_limits<double>::infinity();
  for (int q = 0; q < rule.size(); ++q) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(c.value(rule.points.col(q))));
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}
}  // namespace

double min_eigenvalue_on(const Coefficient2x2& c, const QuadRule2D& rule) {
  return min_eig(c, rule);
}
double min_eigenvalue_on(const ElasticityCoefficient& c, const QuadRule2D& rule) {
  return min_eig(c, rule);
}

}  // namespace vem
