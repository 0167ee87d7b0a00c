#pragma once

#include <functional>
#include <string>

#include "polyvem/quadrature.hpp"
#include "polyvem/types.hpp"

namespace vem {

// Symmetric 2x2 diffusion coefficient with analytic partial derivatives.
struct Coefficient2x2 {
  std::function<Matrix2(const Vector2&)> value;
  std::function<Matrix2(const Vector2&)> dx;
  std::function<Matrix2(const Vector2&)> dy;
  bool constant = false;
  std::string name;
};

// Plane-stress constitutive matrix C(x,y) with analytic partial derivatives.
struct ElasticityCoefficient {
  std::function<Matrix3(const Vector2&)> value;
  std::function<Matrix3(const Vector2&)> dx;
  std::function<Matrix3(const Vector2&)> dy;
  bool constant = false;
  std::string name;
};

Matrix3 plane_stress_matrix(double e1, double e2, double nu12, double nu21, double g12);

Coefficient2x2 identity_coefficient();
// "identity" | "poly-diag" (diag(x+1, y+1)) | "trig"
Coefficient2x2 builtin_coefficient(const std::string& name);

ElasticityCoefficient isotropic_elasticity(double e, double nu);
// "isotropic" (E=72000, nu=0.3) | "elasticity-poly" (the quartic/quadratic
// modulus variation about the domain center, nu=0.33)
ElasticityCoefficient builtin_elasticity(const std::string& name);

// Unweighted average of the coefficient at the rule's points.
Matrix2 piecewise_constant_approx(const Coefficient2x2& c, const QuadRule2D& rule);
Matrix3 piecewise_constant_approx(const ElasticityCoefficient& c, const QuadRule2D& rule);

// Minimum eigenvalue over the rule's points; positive iff SPD on the sample.
double min_eigenvalue_on(const Coefficient2x2& c, const QuadRule2D& rule);
double min_eigenvalue_on(const ElasticityCoefficient& c, const QuadRule2D& rule);

}  // namespace vem
