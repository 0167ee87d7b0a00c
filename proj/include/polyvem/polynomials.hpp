#pragma once

#include <vector>

#include "polyvem/geometry.hpp"
#include "polyvem/quadrature.hpp"
#include "polyvem/types.hpp"

namespace vem {

// Scaled monomials m_{a,b}(x,y) = ((x-xc)/h)^a ((y-yc)/h)^b in graded
// lexicographic order: (0,0); (1,0),(0,1); (2,0),(1,1),(0,2); ...
struct MonomialBasis {
  Vector2 center = Vector2::Zero();
  double h = 1.0;
  int degree = 0;

  int dim() const { return poly_dim(degree); }
  static std::pair<int, int> exponents(int index);
  static int index_of(int a, int b);  // -1 if a or b negative

  // Values of all monomials at the given physical points: dim x npts.
  Matrix eval(const Matrix& points) const;
  // Derivative coefficient maps on monomial coefficient ROWS: the row vector
  // of coefficients of d(m_beta)/dx over the basis is row beta of dx().
  Matrix dx() const;
  Matrix dy() const;
};

// Integrals of all scaled monomials up to max_degree over the element,
// computed edge-wise by the divergence theorem (exact, curved edges included,
// since the integrands are parametric polynomials).
Vector monomial_moments(const Mesh& mesh, int element, int max_degree);

// Monomial mass Gram H_{ab} = integral of m_a m_b; needs moments to 2*degree.
Matrix monomial_mass(const MonomialBasis& basis, const Vector& moments);

// L2(E)-orthonormal basis q = R m over scaled monomials, R lower triangular,
// built by modified Gram-Schmidt in the H-inner product (re-orthogonalized
// once more for degrees above 6).
struct OrthoBasis {
  MonomialBasis mono;
  Matrix R;  // dim x dim, lower triangular
  Matrix H;  // monomial mass Gram

  int dim() const { return mono.dim(); }
  int degree() const { return mono.degree; }

  Matrix eval(const Matrix& points) const;     // dim x npts
  Matrix eval_dx(const Matrix& points) const;  // dim x npts
  Matrix eval_dy(const Matrix& points) const;

  // Derivative coefficient maps in the orthonormal basis: the coefficients of
  // d(q_beta)/dx over {q} are row beta of cx(). Cached on first use.
  const Matrix& cx() const;
  const Matrix& cy() const;
  // Coefficient rows of the Laplacian: cx()*cx() + cy()*cy().
  Matrix laplacian() const;

  // Convert monomial coefficient rows to orthonormal coefficient rows and
  // back: p = a^T m = s^T q with a = R^T s, s = R^{-T} a.
  Vector mono_to_ortho(const Vector& a) const;
  Vector ortho_to_mono(const Vector& s) const;

 private:
  mutable Matrix cx_, cy_;
};

OrthoBasis mgs_orthonormalize(const Mesh& mesh, int element, int degree);
OrthoBasis mgs_orthonormalize(const MonomialBasis& basis, const Matrix& mass);

// Differential-operator coefficient actions used by the projector builders;
// all matrices act on coefficient ROWS of the orthonormal basis.
enum class PolyOp { Grad, Div, Laplacian, Curl, LSigma, Eps, EpsPerp };

// For scalar-to-vector ops (Grad, Curl) returns {X-part, Y-part}; for
// vector-to-scalar (Div) the two blocks to be applied to the components; for
// Voigt ops the per-slot blocks as documented in projectors.cpp.
std::vector<Matrix> apply_operator(const OrthoBasis& basis, PolyOp op);

}  // namespace vem
