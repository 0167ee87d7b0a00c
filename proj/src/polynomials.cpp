#include "polyvem/polynomials.hpp"

#include <cmath>
#include <stdexcept>

namespace vem {

std::pair<int, int> MonomialBasis::exponents(int index) {
  int d = 0;
  while (poly_dim(d) <= index) ++d;
  const int offset = index - poly_dim(d - 1);
  return {d - offset, offset};  // (d,0), (d-1,1), ..., (0,d)
}

int MonomialBasis::index_of(int a, int b) {
  if (a < 0 || b < 0) return -1;
  const int d = a + b;
  return poly_dim(d - 1) + b;
}

Matrix MonomialBasis::eval(const Matrix& points) const {
  const int n = dim(), npts = static_cast<int>(points.cols());
  // Powers of the scaled coordinates up to `degree`.
  Matrix px(degree + 1, npts), py(degree + 1, npts);
  px.row(0).setOnes();
  py.row(0).setOnes();
  for (int q = 0; q < npts; ++q) {
    const double xi = (points(0, q) - center.x()) / h;
    const double eta = (points(1, q) - center.y()) / h;
    for (int d = 1; d <= degree; ++d) {
      px(d, q) = px(d - 1, q) * xi;
      py(d, q) = py(d - 1, q) * eta;
    }
  }
  Matrix out(n, npts);
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = exponents(i);
    out.row(i) = px.row(a).cwiseProduct(py.row(b));
  }
  return out;
}

Matrix MonomialBasis::dx() const {
  const int n = dim();
  Matrix D = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = exponents(i);
    const int j = index_of(a - 1, b);
    if (j >= 0) D(i, j) = a / h;
  }
  return D;
}

Matrix MonomialBasis::dy() const {
  const int n = dim();
  Matrix D = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = exponents(i);
    const int j = index_of(a, b - 1);
    if (j >= 0) D(i, j) = b / h;
  }
  return D;
}

Vector monomial_moments(const Mesh& mesh, int element, int max_degree) {
  const Element& el = mesh.elements[element];
  const MonomialBasis basis{el.centroid, el.diameter, max_degree};
  const int n = basis.dim();
  Vector mom = Vector::Zero(n);
  // int_E m_{a,b} = h/(a+1) * sum_e int_0^1 xi(t)^{a+1} eta(t)^b y'(t) dt,
  // exact per edge: parametric degree 3(d+1)+2 on cubic edges.
  for (int e = 0; e < el.num_edges(); ++e) {
    const EdgeCurve c = mesh.edge_curve(element, e);
    const int pdeg = c.curved() ? 3 * (max_degree + 1) + 2 : max_degree + 2;
    const QuadRule1D g = gauss_legendre_01((pdeg + 2) / 2);
    const int nq = static_cast<int>(g.points.size());
    Matrix px(max_degree + 2, nq), py(max_degree + 1, nq);
    Vector wdy(nq);
    for (int q = 0; q < nq; ++q) {
      const Vector2 p = c.eval(g.points[q]);
      const Vector2 d = c.derivative(g.points[q]);
      const double xi = (p.x() - el.centroid.x()) / el.diameter;
      const double eta = (p.y() - el.centroid.y()) / el.diameter;
      px(0, q) = 1;
      py(0, q) = 1;
      for (int k = 1; k <= max_degree + 1; ++k) px(k, q) = px(k - 1, q) * xi;
      for (int k = 1; k <= max_degree; ++k) py(k, q) = py(k - 1, q) * eta;
      wdy[q] = g.weights[q] * d.y();
    }
    for (int i = 0; i < n; ++i) {
      const auto [a, b] = MonomialBasis::exponents(i);
      double s = 0;
      for (int q = 0; q < nq; ++q) s += px(a + 1, q) * py(b, q) * wdy[q];
      mom[i] += el.diameter / (a + 1.0) * s;
    }
  }
  return mom;
}

Matrix monomial_mass(const MonomialBasis& basis, const Vector& moments) {
  const int n = basis.dim();
  Matrix H(n, n);
  for (int i = 0; i < n; ++i) {
    const auto [ai, bi] = MonomialBasis::exponents(i);
    for (int j = 0; j <= i; ++j) {
      const auto [aj, bj] = MonomialBasis::exponents(j);
      const int idx = MonomialBasis::index_of(ai + aj, bi + bj);
      if (idx >= static_cast<int>(moments.size()))
        throw std::invalid_argument("monomial_mass: moment table too short");
      H(i, j) = H(j, i) = moments[idx];
    }
  }
  return H;
}

OrthoBasis mgs_orthonormalize(const MonomialBasis& basis, const Matrix& mass) {
  const int n = basis.dim();
  Matrix R = Matrix::Identity(n, n);
  Matrix HR = mass;  // columns j of HR hold H * r_j for accepted rows r_j
  // Modified Gram-Schmidt on coefficient rows in the H-inner product; a second
  // pass keeps orthogonality at high degree.
  const int passes = basis.degree > 6 ? 2 : 1;
  for (int j = 0; j < n; ++j) {
    Vector r = Matrix::Identity(n, n).col(j);
    Vector hr = mass.col(j);
    for (int pass = 0; pass < passes; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double proj = HR.col(i).dot(r);
        r -= proj * R.row(i).transpose();
        hr -= proj * HR.col(i);
      }
    }
    const double nrm2 = r.dot(hr);
    if (!(nrm2 > 0) || !std::isfinite(nrm2))
      throw std::runtime_error("mgs_orthonormalize: numerically singular Gram (degenerate element)");
    const double nrm = std::sqrt(nrm2);
    R.row(j) = r.transpose() / nrm;
    HR.col(j) = hr / nrm;
  }
  OrthoBasis ob;
  ob.mono = basis;
  ob.R = R;
  ob.H = mass;
  return ob;
}

OrthoBasis mgs_orthonormalize(const Mesh& mesh, int element, int degree) {
  const Element& el = mesh.elements[element];
  const MonomialBasis basis{el.centroid, el.diameter, degree};
  const Vector mom = monomial_moments(mesh, element, 2 * degree);
  return mgs_orthonormalize(basis, monomial_mass(basis, mom));
}

Matrix OrthoBasis::eval(const Matrix& points) const { return R * mono.eval(points); }

Matrix OrthoBasis::eval_dx(const Matrix& points) const {
  return cx() * (R * mono.eval(points));
}

Matrix OrthoBasis::eval_dy(const Matrix& points) const {
  return cy() * (R * mono.eval(points));
}

const Matrix& OrthoBasis::cx() const {
  if (cx_.size() == 0) {
    // dq/dx = R dxM m = (R dxM R^{-1}) q; R is triangular, so
    // Cx = A R^{-1} with A = R dxM, i.e. Cx^T = R^{-T} A^T.
    const Matrix A = R * mono.dx();
    cx_ = R.transpose().triangularView<Eigen::Upper>().solve(A.transpose()).transpose();
  }
  return cx_;
}

const Matrix& OrthoBasis::cy() const {
  if (cy_.size() == 0) {
    const Matrix A = R * mono.dy();
    cy_ = R.transpose().triangularView<Eigen::Upper>().solve(A.transpose()).transpose();
  }
  return cy_;
}

Matrix OrthoBasis::laplacian() const { return cx() * cx() + cy() * cy(); }

Vector OrthoBasis::mono_to_ortho(const Vector& a) const {
  return R.transpose().triangularView<Eigen::Upper>().solve(a);
}

Vector OrthoBasis::ortho_to_mono(const Vector& s) const { return R.transpose() * s; }

std::vector<Matrix> apply_operator(const OrthoBasis& basis, PolyOp op) {
  const Matrix& Cx = basis.cx();
  const Matrix& Cy = basis.cy();
  switch (op) {
    case PolyOp::Grad:
      return {Cx, Cy};
    case PolyOp::Div:
      return {Cx, Cy};  // applied to (vx, vy) component rows and summed
    case PolyOp::Laplacian:
      return {basis.laplacian()};
    case PolyOp::Curl:
      return {Cy, -Cx};  // curl q = (dq/dy, -dq/dx)
    case PolyOp::LSigma:
      // L sigma = (s1,x + s3,y ; s3,x + s2,y) per Voigt slot: blocks ordered
      // as the contribution of slots (1,2,3) to components (x,y).
      return {Cx, Matrix::Zero(Cx.rows(), Cx.cols()), Cy,
              Matrix::Zero(Cx.rows(), Cx.cols()), Cy, Cx};
    case PolyOp::Eps:
      // eps(v) = (v1,x ; v2,y ; v1,y + v2,x): blocks for (v1, v2) per slot.
      return {Cx, Matrix::Zero(Cx.rows(), Cx.cols()),
              Matrix::Zero(Cx.rows(), Cx.cols()), Cy, Cy, Cx};
    case PolyOp::EpsPerp:
      // eps-perp(w) = (w1,y ; -w2,x ; -w1,x + w2,y)
      return {Cy, Matrix::Zero(Cx.rows(), Cx.cols()),
              Matrix::Zero(Cx.rows(), Cx.cols()), -Cx, -Cx, Cy};
  }
  throw std::logic_error("apply_operator: unknown op");
}

}  // namespace vem
