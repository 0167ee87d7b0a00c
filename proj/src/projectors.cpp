#include "polyvem/projectors.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace vem {

namespace {

// Barycentric Lagrange evaluation on arbitrary nodes.
Matrix lagrange_eval(const Vector& nodes, const Vector& t) {
  const int n = static_cast<int>(nodes.size());
  const int m = static_cast<int>(t.size());
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) p *= nodes[i] - nodes[j];
    w[i] = 1.0 / p;
  }
  Matrix L = Matrix::Zero(n, m);
  for (int q = 0; q < m; ++q) {
    int hit = -1;
    for (int i = 0; i < n; ++i)
      if (t[q] == nodes[i]) {
        hit = i;
        break;
      }
    if (hit >= 0) {
      L(hit, q) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int i = 0; i < n; ++i) denom += w[i] / (t[q] - nodes[i]);
    for (int i = 0; i < n; ++i) L(i, q) = (w[i] / (t[q] - nodes[i])) / denom;
  }
  return L;
}

Matrix kron3(const Matrix3& c, int n) {
  Matrix out = Matrix::Zero(3 * n, 3 * n);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < 3; ++r)
      out.block(s * n, r * n, n, n) = c(s, r) * Matrix::Identity(n, n);
  return out;
}

// Coefficient columns of a vector (2) or Voigt (3) polynomial target basis.
struct VecTarget {
  int ncomp = 2;
  int n = 0;        // coefficient length per component
  Matrix cols;      // (ncomp*n) x ntargets
  int vol_deg = 0;  // max degree of the divergence/L image over volume columns
  std::vector<bool> boundary_only;  // per column: skip the volume term

  int count() const { return static_cast<int>(cols.cols()); }
  Eigen::Block<const Matrix> comp(int c) const { return cols.block(c * n, 0, n, cols.cols()); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Detail helpers
// ---------------------------------------------------------------------------

struct ElementOpsDetail {
  const ElementOps& o;
  explicit ElementOpsDetail(const ElementOps& ops) : o(ops) {}

  const OrthoBasis& basis() const { return o.basis_; }
  int k() const { return o.k_; }
  int K() const { return o.basis_.degree(); }
  int nK() const { return poly_dim(K()); }

  Matrix cxn(int n) const { return o.basis_.cx().topLeftCorner(n, n); }
  Matrix cyn(int n) const { return o.basis_.cy().topLeftCorner(n, n); }

  Matrix stiffness_gram(int n) const {
    const Matrix cx = cxn(n), cy = cyn(n);
    return cx * cx.transpose() + cy * cy.transpose();
  }

  int edge_exactness(bool curved, int g_deg) const {
    return curved ? o.k_ + 3 * g_deg + 2 : o.k_ + g_deg;
  }

  Matrix nodal_points() const {
    const LocalLayout& lay = o.layout_;
    Matrix pts(2, lay.nodal_per_comp());
    for (int v = 0; v < lay.nv; ++v) pts.col(v) = o.mesh_->vertices[o.elem().edges[v].v0];
    for (int e = 0; e < lay.nv; ++e) {
      const EdgeCurve c = o.mesh_->edge_curve(o.element_, e);
      for (int i = 0; i < o.k_ - 1; ++i)
        pts.col(lay.nv + e * (o.k_ - 1) + i) = c.eval(o.node_params_[i + 1]);
    }
    return pts;
  }

  // sum_e int_e trace(phi_comp) * fn ds-type accumulation; fn returns the
  // weighted integrand rows (nrows x nq).
  Matrix boundary(int comp, int nrows, int g_deg,
                  const std::function<Matrix(int, const EdgeQuad&)>& fn) const {
    Matrix out = Matrix::Zero(nrows, o.ndof());
    for (int e = 0; e < o.elem().num_edges(); ++e) {
      const bool curved = o.elem().edges[e].curved();
      const EdgeQuad& q = o.edge_quad(e, edge_exactness(curved, g_deg));
      const Matrix lag = lagrange_eval(o.node_params_, q.t);
      const Matrix contrib = fn(e, q) * lag.transpose();
      const std::vector<int> dofs = o.layout_.edge_nodal_dofs(comp, e);
      for (int i = 0; i <= o.k_; ++i) out.col(dofs[i]) += contrib.col(i);
    }
    return out;
  }

  // Scalar elliptic projector onto P_target through component `comp`.
  void elliptic_scalar(int target_degree, int comp, Matrix& G, Matrix& B, Matrix& pi) const {
    const int n = poly_dim(target_degree);
    G = stiffness_gram(n);
    B = Matrix::Zero(n, o.ndof());
    const int m2 = poly_dim(target_degree - 2);
    if (m2 > 0) {
      const Matrix lap = basis().laplacian().topLeftCorner(n, m2);
      B.noalias() -= lap * o.moment_matrix(comp, target_degree - 2);
    }
    B += boundary(comp, n, target_degree - 1, [&](int, const EdgeQuad& q) {
      const Matrix Q = basis().eval(q.points);
      const Matrix dx = basis().cx().topRows(n) * Q;
      const Matrix dy = basis().cy().topRows(n) * Q;
      Matrix out(n, q.t.size());
      for (int i = 0; i < q.t.size(); ++i)
        out.col(i) = dx.col(i) * q.w_nds(0, i) + dy.col(i) * q.w_nds(1, i);
      return out;
    });
    // Vertex-average condition pins the constant.
    Matrix Gt = G;
    Matrix Bt = B;
    const Matrix vn = basis().eval(nodal_points()).topRows(n);
    Gt.row(0) = vn.leftCols(o.nv()).rowwise().sum().transpose() / o.nv();
    Bt.row(0).setZero();
    for (int v = 0; v < o.nv(); ++v) Bt(0, o.layout_.vertex_dof(comp, v)) = 1.0 / o.nv();
    pi = Gt.partialPivLu().solve(Bt);
  }

  // ---- generic vector-target machinery (scalar gradient pairings) ----

  // Pairing Gram of the target columns in L2.
  Matrix target_gram(const VecTarget& t) const {
    Matrix G = Matrix::Zero(t.count(), t.count());
    for (int c = 0; c < t.ncomp; ++c) G.noalias() += t.comp(c).transpose() * t.comp(c);
    return G;
  }

  // Rows (grad phi_comp, t_j) = -(phi, div t_j) + int phi t_j . n.
  Matrix scalar_vec_rhs(int comp, const VecTarget& t) const {
    const int nt = t.count(), n = t.n;
    Matrix div = cxn(n).transpose() * t.comp(0) + cyn(n).transpose() * t.comp(1);
    for (int j = 0; j < nt; ++j)
      if (!t.boundary_only.empty() && t.boundary_only[j]) div.col(j).setZero();
    Matrix B = Matrix::Zero(nt, o.ndof());
    const int m = poly_dim(t.vol_deg);
    if (m > 0) B.noalias() -= div.topRows(m).transpose() * o.moment_matrix(comp, t.vol_deg);
    B += boundary(comp, nt, K(), [&](int, const EdgeQuad& q) {
      const Matrix Q = basis().eval(q.points).topRows(n);
      const Matrix v1 = t.comp(0).transpose() * Q;  // nt x nq
      const Matrix v2 = t.comp(1).transpose() * Q;
      Matrix out(nt, q.t.size());
      for (int i = 0; i < q.t.size(); ++i)
        out.col(i) = v1.col(i) * q.w_nds(0, i) + v2.col(i) * q.w_nds(1, i);
      return out;
    });
    return B;
  }

  // A-weighted pairing Gram of the target columns by quadrature.
  Matrix target_gram_weighted(const VecTarget& t) const {
    const QuadRule2D& rule = o.area_rule(2 * K() + o.quad_.vc_surplus);
    const Matrix Q = basis().eval(rule.points).topRows(t.n);
    const Matrix v1 = (t.comp(0).transpose() * Q).transpose();  // nq x nt
    const Matrix v2 = (t.comp(1).transpose() * Q).transpose();
    const int nq = rule.size();
    Vector a11(nq), a12(nq), a22(nq);
    for (int q = 0; q < nq; ++q) {
      const Matrix2 A = o.coeffs_.a->value(rule.points.col(q));
      a11[q] = A(0, 0) * rule.weights[q];
      a12[q] = A(0, 1) * rule.weights[q];
      a22[q] = A(1, 1) * rule.weights[q];
    }
    Matrix G = v1.transpose() * a11.asDiagonal() * v1;
    G.noalias() += v1.transpose() * a12.asDiagonal() * v2;
    G.noalias() += v2.transpose() * a12.asDiagonal() * v1;
    G.noalias() += v2.transpose() * a22.asDiagonal() * v2;
    return G;
  }

  // Rows (grad phi, A t_j) = -(Pi0_k phi, div(A t_j)) + int phi (A t_j) . n.
  Matrix scalar_vec_rhs_weighted(int comp, const VecTarget& t) const {
    const int nt = t.count(), n = t.n, nk = poly_dim(k());
    const QuadRule2D& rule = o.area_rule(2 * K() + o.quad_.vc_surplus);
    const int nq = rule.size();
    const Matrix Qf = basis().eval(rule.points);
    const Matrix Q = Qf.topRows(n);
    const Matrix Qdx = basis().cx().topRows(n) * Qf;
    const Matrix Qdy = basis().cy().topRows(n) * Qf;
    const Matrix v1 = (t.comp(0).transpose() * Q).transpose();   // nq x nt
    const Matrix v2 = (t.comp(1).transpose() * Q).transpose();
    const Matrix v1x = (t.comp(0).transpose() * Qdx).transpose();
    const Matrix v2x = (t.comp(1).transpose() * Qdx).transpose();
    const Matrix v1y = (t.comp(0).transpose() * Qdy).transpose();
    const Matrix v2y = (t.comp(1).transpose() * Qdy).transpose();
    Matrix divA(nq, nt);
    for (int q = 0; q < nq; ++q) {
      const Vector2 x = rule.points.col(q);
      const Matrix2 A = o.coeffs_.a->value(x);
      const Matrix2 Ax = o.coeffs_.a->dx(x);
      const Matrix2 Ay = o.coeffs_.a->dy(x);
      divA.row(q) = Ax(0, 0) * v1.row(q) + Ax(0, 1) * v2.row(q) + Ay(1, 0) * v1.row(q) +
                    Ay(1, 1) * v2.row(q) + A(0, 0) * v1x.row(q) + A(0, 1) * v2x.row(q) +
                    A(1, 0) * v1y.row(q) + A(1, 1) * v2y.row(q);
    }
    const Matrix Qk = Qf.topRows(nk);
    const Matrix acc = Qk * rule.weights.asDiagonal() * divA;  // nk x nt
    Matrix B = -acc.transpose() * o.pi0_star(k());
    B += boundary(comp, nt, 2 * K() + o.quad_.vc_surplus, [&](int, const EdgeQuad& q) {
      const Matrix Qb = basis().eval(q.points).topRows(n);
      const Matrix w1 = t.comp(0).transpose() * Qb;  // nt x nq
      const Matrix w2 = t.comp(1).transpose() * Qb;
      Matrix out(nt, q.t.size());
      for (int i = 0; i < q.t.size(); ++i) {
        const Matrix2 A = o.coeffs_.a->value(q.points.col(i));
        const double nx = q.w_nds(0, i), ny = q.w_nds(1, i);
        out.col(i) = w1.col(i) * (A(0, 0) * nx + A(1, 0) * ny) +
                     w2.col(i) * (A(0, 1) * nx + A(1, 1) * ny);
      }
      return out;
    });
    return B;
  }

  // ---- Voigt-target machinery (strain pairings, elasticity) ----

  Matrix voigt_gram(const VecTarget& t) const { return target_gram(t); }

  Matrix voigt_energy_gram(const VecTarget& t, const Matrix3& c) const {
    Matrix G = Matrix::Zero(t.count(), t.count());
    for (int s = 0; s < 3; ++s)
      for (int r = 0; r < 3; ++r)
        G.noalias() += c(s, r) * t.comp(s).transpose() * t.comp(r);
    return G;
  }

  // Rows (eps(phi), t_j) = -(phi, L(t_j)) + int phi . N(n) t_j.
  Matrix voigt_rhs(const VecTarget& t) const {
    const int nt = t.count(), n = t.n;
    const Matrix Lx = cxn(n).transpose() * t.comp(0) + cyn(n).transpose() * t.comp(2);
    const Matrix Ly = cxn(n).transpose() * t.comp(2) + cyn(n).transpose() * t.comp(1);
    Matrix B = Matrix::Zero(nt, o.ndof());
    const int m = poly_dim(t.vol_deg);
    if (m > 0) {
      B.noalias() -= Lx.topRows(m).transpose() * o.moment_matrix(0, t.vol_deg);
      B.noalias() -= Ly.topRows(m).transpose() * o.moment_matrix(1, t.vol_deg);
    }
    for (int c = 0; c < 2; ++c) {
      B += boundary(c, nt, K(), [&](int, const EdgeQuad& q) {
        const Matrix Q = basis().eval(q.points).topRows(n);
        const Matrix s0 = t.comp(0).transpose() * Q;
        const Matrix s1 = t.comp(1).transpose() * Q;
        const Matrix s2 = t.comp(2).transpose() * Q;
        Matrix out(nt, q.t.size());
        for (int i = 0; i < q.t.size(); ++i) {
          const double nx = q.w_nds(0, i), ny = q.w_nds(1, i);
          out.col(i) = c == 0 ? Matrix(s0.col(i) * nx + s2.col(i) * ny)
                              : Matrix(s2.col(i) * nx + s1.col(i) * ny);
        }
        return out;
      });
    }
    return B;
  }

  Matrix voigt_gram_weighted(const VecTarget& t) const {
    const QuadRule2D& rule = o.area_rule(2 * K() + o.quad_.vc_surplus);
    const Matrix Q = basis().eval(rule.points).topRows(t.n);
    std::array<Matrix, 3> v;
    for (int s = 0; s < 3; ++s) v[s] = (t.comp(s).transpose() * Q).transpose();  // nq x nt
    const int nq = rule.size();
    Matrix G = Matrix::Zero(t.count(), t.count());
    Vector wc(nq);
    for (int s = 0; s < 3; ++s)
      for (int r = 0; r < 3; ++r) {
        for (int q = 0; q < nq; ++q)
          wc[q] = o.coeffs_.c->value(rule.points.col(q))(s, r) * rule.weights[q];
        G.noalias() += v[s].transpose() * wc.asDiagonal() * v[r];
      }
    return G;
  }

  // Rows (eps(phi), C t_j) = -(Pi0_k phi, L(C t_j)) + int phi . N(n) C t_j.
  Matrix voigt_rhs_weighted(const VecTarget& t) const {
    const int nt = t.count(), n = t.n, nk = poly_dim(k());
    const QuadRule2D& rule = o.area_rule(2 * K() + o.quad_.vc_surplus);
    const int nq = rule.size();
    const Matrix Qf = basis().eval(rule.points);
    const Matrix Q = Qf.topRows(n);
    const Matrix Qdx = basis().cx().topRows(n) * Qf;
    const Matrix Qdy = basis().cy().topRows(n) * Qf;
    std::array<Matrix, 3> v, vx, vy;
    for (int s = 0; s < 3; ++s) {
      v[s] = (t.comp(s).transpose() * Q).transpose();
      vx[s] = (t.comp(s).transpose() * Qdx).transpose();
      vy[s] = (t.comp(s).transpose() * Qdy).transpose();
    }
    Matrix Lxv(nq, nt), Lyv(nq, nt);
    for (int q = 0; q < nq; ++q) {
      const Vector2 x = rule.points.col(q);
      const Matrix3 C = o.coeffs_.c->value(x);
      const Matrix3 Cx3 = o.coeffs_.c->dx(x);
      const Matrix3 Cy3 = o.coeffs_.c->dy(x);
      auto dx_slot = [&](int s) {
        return (Cx3(s, 0) * v[0].row(q) + Cx3(s, 1) * v[1].row(q) + Cx3(s, 2) * v[2].row(q) +
                C(s, 0) * vx[0].row(q) + C(s, 1) * vx[1].row(q) + C(s, 2) * vx[2].row(q))
            .eval();
      };
      auto dy_slot = [&](int s) {
        return (Cy3(s, 0) * v[0].row(q) + Cy3(s, 1) * v[1].row(q) + Cy3(s, 2) * v[2].row(q) +
                C(s, 0) * vy[0].row(q) + C(s, 1) * vy[1].row(q) + C(s, 2) * vy[2].row(q))
            .eval();
      };
      Lxv.row(q) = dx_slot(0) + dy_slot(2);
      Lyv.row(q) = dx_slot(2) + dy_slot(1);
    }
    const Matrix Qk = Qf.topRows(nk);
    const Matrix p0 = o.pi0_star(k());
    Matrix B = -(Qk * rule.weights.asDiagonal() * Lxv).transpose() * p0.topRows(nk);
    B.noalias() -= (Qk * rule.weights.asDiagonal() * Lyv).transpose() * p0.bottomRows(nk);
    for (int c = 0; c < 2; ++c) {
      B += boundary(c, nt, 2 * K() + o.quad_.vc_surplus, [&](int, const EdgeQuad& q) {
        const Matrix Qb = basis().eval(q.points).topRows(n);
        std::array<Matrix, 3> s;
        for (int m = 0; m < 3; ++m) s[m] = t.comp(m).transpose() * Qb;  // nt x nq
        Matrix out(nt, q.t.size());
        for (int i = 0; i < q.t.size(); ++i) {
          const Matrix3 C = o.coeffs_.c->value(q.points.col(i));
          const double nx = q.w_nds(0, i), ny = q.w_nds(1, i);
          Vector sig0 = C(0, 0) * s[0].col(i) + C(0, 1) * s[1].col(i) + C(0, 2) * s[2].col(i);
          Vector sig1 = C(1, 0) * s[0].col(i) + C(1, 1) * s[1].col(i) + C(1, 2) * s[2].col(i);
          Vector sig2 = C(2, 0) * s[0].col(i) + C(2, 1) * s[1].col(i) + C(2, 2) * s[2].col(i);
          out.col(i) = c == 0 ? Vector(sig0 * nx + sig2 * ny) : Vector(sig2 * nx + sig1 * ny);
        }
        return out;
      });
    }
    return B;
  }

  // ---- target basis constructions ----

  // Full vector block [P_deg]^2 over the orthonormal basis.
  VecTarget full_vec_target(int deg) const {
    VecTarget t;
    t.ncomp = 2;
    t.n = nK();
    const int m = poly_dim(deg);
    t.cols = Matrix::Zero(2 * t.n, 2 * m);
    t.cols.block(0, 0, m, m).setIdentity();
    t.cols.block(t.n, m, m, m).setIdentity();
    t.vol_deg = deg - 1;
    return t;
  }

  // [P_{k-1}]^2 (+) curl(P_K \ P_k)  (V3) or grad(P_k \ P_0) (+) curl(...) (V6).
  VecTarget mixed_scalar_target(bool v6) const {
    VecTarget t;
    t.ncomp = 2;
    t.n = nK();
    const int nk = poly_dim(k()), nk1 = poly_dim(k() - 1);
    const int ncurl = nK() - nk;
    const int nfirst = v6 ? nk - 1 : 2 * nk1;
    t.cols = Matrix::Zero(2 * t.n, nfirst + ncurl);
    t.boundary_only.assign(nfirst + ncurl, false);
    if (v6) {
      for (int b = 1; b < nk; ++b) {
        t.cols.col(b - 1).head(t.n) = basis().cx().row(b).head(t.n).transpose();
        t.cols.col(b - 1).segment(t.n, t.n) = basis().cy().row(b).head(t.n).transpose();
      }
    } else {
      for (int b = 0; b < nk1; ++b) {
        t.cols(b, b) = 1.0;
        t.cols(t.n + b, nk1 + b) = 1.0;
      }
    }
    for (int d = 0; d < ncurl; ++d) {
      const int src = nk + d, col = nfirst + d;
      t.cols.col(col).head(t.n) = basis().cy().row(src).head(t.n).transpose();
      t.cols.col(col).segment(t.n, t.n) = -basis().cx().row(src).head(t.n).transpose();
      t.boundary_only[col] = true;  // div curl = 0: volume term vanishes
    }
    t.vol_deg = v6 ? k() - 2 : k() - 2;
    return t;
  }

  // Full Voigt block [P_deg]^3.
  VecTarget full_voigt_target(int deg) const {
    VecTarget t;
    t.ncomp = 3;
    t.n = nK();
    const int m = poly_dim(deg);
    t.cols = Matrix::Zero(3 * t.n, 3 * m);
    for (int s = 0; s < 3; ++s) t.cols.block(s * t.n, s * m, m, m).setIdentity();
    t.vol_deg = deg - 1;
    return t;
  }

  // eps-perp applied to [span(q_delta)]^2 for delta in [dim(P_k), dim(P_K)).
  void append_eps_perp(VecTarget& t) const {
    const int nk = poly_dim(k());
    const int nhigh = nK() - nk;
    const int base = t.count();
    t.cols.conservativeResize(Eigen::NoChange, base + 2 * nhigh);
    t.cols.rightCols(2 * nhigh).setZero();
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < nhigh; ++d) {
        const int src = nk + d, col = base + c * nhigh + d;
        if (c == 0) {  // eps-perp(w, 0) = (w_y ; 0 ; -w_x)
          t.cols.col(col).head(t.n) = basis().cy().row(src).head(t.n).transpose();
          t.cols.col(col).segment(2 * t.n, t.n) = -basis().cx().row(src).head(t.n).transpose();
        } else {  // eps-perp(0, w) = (0 ; -w_x ; w_y)
          t.cols.col(col).segment(t.n, t.n) = -basis().cx().row(src).head(t.n).transpose();
          t.cols.col(col).segment(2 * t.n, t.n) = basis().cy().row(src).head(t.n).transpose();
        }
      }
    t.boundary_only.resize(t.count(), false);
    t.vol_deg = K() - 2;  // the eps-perp block needs the enlarged moments
  }

  // Voigt [P_{k-1}]^3 (+) eps-perp block (elasticity V3).
  VecTarget mixed_voigt_target_v3() const {
    VecTarget t = full_voigt_target(k() - 1);
    t.boundary_only.assign(t.count(), false);
    append_eps_perp(t);
    return t;
  }

  // eps([P_k]^2 modulo rigid motions) (+) eps-perp block (elasticity V6).
  VecTarget mixed_voigt_target_v6() const {
    const int nk = poly_dim(k());
    VecTarget t;
    t.ncomp = 3;
    t.n = nK();
    // Strain columns of the component-blocked vector basis, dropping the two
    // constants and the pivot carrying the rotation.
    Matrix rm = rigid_rotation_coeffs();
    int jrot = 1;
    double best = 0;
    for (int cand : {1, 2, nk + 1, nk + 2})
      if (cand < 2 * nk && std::abs(rm[cand]) > best) {
        best = std::abs(rm[cand]);
        jrot = cand;
      }
    std::vector<int> keep;
    for (int a = 0; a < 2 * nk; ++a)
      if (a != 0 && a != nk && a != jrot) keep.push_back(a);
    t.cols = Matrix::Zero(3 * t.n, keep.size());
    const Matrix cx = basis().cx(), cy = basis().cy();
    for (size_t i = 0; i < keep.size(); ++i) {
      const int a = keep[i];
      const int c = a / nk, b = a % nk;
      if (c == 0) {
        t.cols.col(i).head(t.n) = cx.row(b).head(t.n).transpose();
        t.cols.col(i).segment(2 * t.n, t.n) = cy.row(b).head(t.n).transpose();
      } else {
        t.cols.col(i).segment(t.n, t.n) = cy.row(b).head(t.n).transpose();
        t.cols.col(i).segment(2 * t.n, t.n) = cx.row(b).head(t.n).transpose();
      }
    }
    t.boundary_only.assign(t.count(), false);
    t.vol_deg = k() - 2;
    append_eps_perp(t);
    return t;
  }

  // Rotation (-y, x) over the component-blocked vector basis at degree k.
  Vector rigid_rotation_coeffs() const {
    const int nk = poly_dim(k());
    Vector rm = Vector::Zero(2 * nk);
    Vector ax = Vector::Zero(basis().dim());
    ax[MonomialBasis::index_of(0, 0)] = -o.elem().centroid.y();
    ax[MonomialBasis::index_of(0, 1)] = -o.elem().diameter;
    Vector ay = Vector::Zero(basis().dim());
    ay[MonomialBasis::index_of(0, 0)] = o.elem().centroid.x();
    ay[MonomialBasis::index_of(1, 0)] = o.elem().diameter;
    rm.head(nk) = basis().mono_to_ortho(ax).head(nk);
    rm.tail(nk) = basis().mono_to_ortho(ay).head(nk);
    return rm;
  }
};

// ---------------------------------------------------------------------------
// ElementOps
// ---------------------------------------------------------------------------

ElementOps::ElementOps(const Mesh& mesh, int element, Problem problem, FormulationSpec spec,
                       int k, int l, ProblemCoefficients coeffs, QuadConfig quad)
    : mesh_(&mesh),
      element_(element),
      problem_(problem),
      spec_(spec),
      k_(k),
      l_(spec.self_stabilized() ? std::max(l, 1) : 0),
      coeffs_(coeffs),
      quad_(quad),
      layout_(local_layout(problem, spec.form, k, l_, mesh.elements[element].num_vertices())),
      basis_(mgs_orthonormalize(mesh, element, spec.self_stabilized() ? k + l_ : k)) {
  const QuadRule1D gl = gauss_lobatto(k_ + 1);
  node_params_ = (gl.points.array() + 1.0) * 0.5;
}

const QuadRule2D& ElementOps::area_rule(int exactness) const {
  auto it = area_rules_.find(exactness);
  if (it == area_rules_.end())
    it = area_rules_.emplace(exactness, element_rule(*mesh_, element_, exactness)).first;
  return it->second;
}

const EdgeQuad& ElementOps::edge_quad(int e, int param_exactness) const {
  const auto key = std::make_pair(e, param_exactness);
  auto it = edge_quads_.find(key);
  if (it == edge_quads_.end())
    it = edge_quads_.emplace(key, edge_rule(mesh_->edge_curve(element_, e), param_exactness))
             .first;
  return it->second;
}

Matrix ElementOps::edge_trace_lagrange(const Vector& t) const {
  return lagrange_eval(node_params_, t);
}

const Matrix& ElementOps::stokes_gperp() const {
  if (!gperp_) {
    const int n2 = poly_dim(k_ - 2);
    const int nk1 = poly_dim(k_ - 1);
    Matrix grads(2 * n2, nk1 - 1);
    for (int b = 1; b < nk1; ++b) {
      grads.col(b - 1).head(n2) = basis().cx().row(b).head(n2).transpose();
      grads.col(b - 1).tail(n2) = basis().cy().row(b).head(n2).transpose();
    }
    Eigen::HouseholderQR<Matrix> qr(grads);
    const Matrix Q = qr.householderQ() * Matrix::Identity(2 * n2, 2 * n2);
    gperp_ = std::make_unique<Matrix>(Q.rightCols(2 * n2 - (nk1 - 1)));
  }
  return *gperp_;
}

Matrix ElementOps::dof_matrix(int target_degree) const {
  ElementOpsDetail d(*this);
  const int n = poly_dim(target_degree);
  const int ncomp = layout_.ncomp;
  Matrix D = Matrix::Zero(ndof(), ncomp * n);
  const Matrix vn = basis().eval(d.nodal_points()).topRows(n);
  for (int c = 0; c < ncomp; ++c) {
    for (int v = 0; v < layout_.nv; ++v)
      D.row(layout_.vertex_dof(c, v)).segment(c * n, n) = vn.col(v).transpose();
    for (int e = 0; e < layout_.nv; ++e)
      for (int i = 0; i < k_ - 1; ++i)
        D.row(layout_.edge_dof(c, e, i)).segment(c * n, n) =
            vn.col(layout_.nv + e * (k_ - 1) + i).transpose();
  }
  const double inv_area = 1.0 / area();
  if (problem_ != Problem::Stokes) {
    for (int c = 0; c < ncomp; ++c)
      for (int m = 0; m < layout_.n_mom && m < n; ++m)
        D(layout_.moment_dof(c, m), c * n + m) = inv_area;
  } else {
    const Matrix& gp = stokes_gperp();
    const int n2 = poly_dim(k_ - 2);
    for (int j = 0; j < layout_.n_perp; ++j)
      for (int c = 0; c < 2; ++c)
        for (int g = 0; g < std::min(n2, n); ++g)
          D(layout_.perp_dof(j), c * n + g) = gp(c * n2 + g, j) * inv_area;
    const int nk1 = poly_dim(k_ - 1);
    for (int m = 1; m < nk1; ++m)
      for (int a = 0; a < n; ++a) {
        D(layout_.div_dof(m - 1), 0 * n + a) = basis().cx()(a, m) * inv_area;
        D(layout_.div_dof(m - 1), 1 * n + a) = basis().cy()(a, m) * inv_area;
      }
    for (int c = 0; c < 2; ++c)
      for (int m = 0; m < layout_.n_extra; ++m) {
        const int alpha = n2 + m;
        if (alpha < n) D(layout_.extra_dof(c, m), c * n + alpha) = inv_area;
      }
  }
  return D;
}

const Matrix& ElementOps::stokes_decomposed_moments() const {
  const auto key = std::make_pair(-1, -1);
  auto it = moment_cache_.find(key);
  if (it != moment_cache_.end()) return it->second;

  ElementOpsDetail d(*this);
  const int n2 = poly_dim(k_ - 2);
  const int nk1 = poly_dim(k_ - 1);
  Matrix M = Matrix::Zero(2 * n2, ndof());
  const Matrix& gp = stokes_gperp();

  Matrix grads(2 * n2, nk1 - 1);
  for (int b = 1; b < nk1; ++b) {
    grads.col(b - 1).head(n2) = basis().cx().row(b).head(n2).transpose();
    grads.col(b - 1).tail(n2) = basis().cy().row(b).head(n2).transpose();
  }
  // Decompose each unit target u = grads * xi + gperp * beta.
  Eigen::ColPivHouseholderQR<Matrix> qr(grads);
  const Matrix Xi = qr.solve(Matrix::Identity(2 * n2, 2 * n2));  // (nk1-1) x 2n2
  const Matrix Beta = gp.transpose();                            // nperp x 2n2

  for (int t = 0; t < 2 * n2; ++t)
    for (int j = 0; j < layout_.n_perp; ++j)
      M(t, layout_.perp_dof(j)) += area() * Beta(j, t);

  // (v, grad p) = -(div v, p) + int p v.n with p = sum_b xi_b q_b, b >= 1.
  for (int t = 0; t < 2 * n2; ++t)
    for (int b = 1; b < nk1; ++b) M(t, layout_.div_dof(b - 1)) -= area() * Xi(b - 1, t);

  Matrix XiFull = Matrix::Zero(2 * n2, nk1);
  XiFull.rightCols(nk1 - 1) = Xi.transpose();
  for (int c = 0; c < 2; ++c) {
    M += d.boundary(c, 2 * n2, k_ - 1, [&](int, const EdgeQuad& q) {
      const Matrix P = basis().eval(q.points).topRows(nk1);
      Matrix vals = XiFull * P;
      for (int i = 0; i < q.t.size(); ++i) vals.col(i) *= q.w_nds(c, i);
      return vals;
    });
  }
  return moment_cache_.emplace(key, std::move(M)).first->second;
}

const Matrix& ElementOps::moment_matrix(int comp, int target_degree) const {
  const int n = poly_dim(target_degree);
  const auto key = std::make_pair(comp, n);
  auto it = moment_cache_.find(key);
  if (it != moment_cache_.end()) return it->second;

  Matrix M = Matrix::Zero(n, ndof());
  const int nk = poly_dim(k_);

  if (problem_ != Problem::Stokes) {
    const int n_direct = std::min(layout_.n_mom, n);
    for (int m = 0; m < n_direct; ++m) M(m, layout_.moment_dof(comp, m)) = area();
    if (n > layout_.n_mom) {
      if (layout_.kind == SpaceKind::Standard && n > nk)
        throw std::logic_error("moment_matrix: moments beyond degree k unavailable");
      if (layout_.kind == SpaceKind::Augmented && n > std::max(layout_.n_mom, nk))
        throw std::logic_error("moment_matrix: augmented moments exhausted");
      const ProjectorSet& pp = primary_projector();
      const int npp = static_cast<int>(pp.pi_star.rows()) / layout_.ncomp;
      for (int m = layout_.n_mom; m < std::min(n, nk); ++m)
        M.row(m) = pp.pi_star.row(comp * npp + m);
      // Enlarged spaces: moments above degree k equal those of the degree-k
      // projection, which vanish in the graded orthonormal basis.
    }
  } else {
    const int n2 = poly_dim(k_ - 2);
    const Matrix& dec = stokes_decomposed_moments();
    for (int m = 0; m < std::min(n2, n); ++m) M.row(m) = dec.row(comp * n2 + m);
    if (n > n2) {
      const int n_direct_hi = n2 + layout_.n_extra;
      for (int m = n2; m < std::min(n, n_direct_hi); ++m)
        M(m, layout_.extra_dof(comp, m - n2)) = area();
      if (layout_.kind == SpaceKind::Standard && n > nk)
        throw std::logic_error("moment_matrix: stokes moments beyond degree k unavailable");
      if (layout_.kind == SpaceKind::Augmented && n > std::max(n_direct_hi, nk))
        throw std::logic_error("moment_matrix: stokes augmented moments exhausted");
      if (n > n_direct_hi) {
        const ProjectorSet& pp = primary_projector();
        const int npp = static_cast<int>(pp.pi_star.rows()) / 2;
        for (int m = std::max(n2, n_direct_hi); m < std::min(n, nk); ++m)
          M.row(m) = pp.pi_star.row(comp * npp + m);
      }
    }
  }
  return moment_cache_.emplace(key, std::move(M)).first->second;
}

const ProjectorSet& ElementOps::primary_projector() const {
  if (primary_) return *primary_;
  ProjectorSet ps;
  if (problem_ == Problem::Laplace) {
    ps = elliptic_projector();
  } else if (problem_ == Problem::Elasticity) {
    ElementOpsDetail d(*this);
    ps.tag = "pi-e";
    ps.k_star = k_;
    elasticity_energy(k_, /*variable=*/false, ps.G, ps.B, ps.pi_star);
    ps.D = dof_matrix(k_);
    ps.pi_dof = ps.D * ps.pi_star;
  } else {
    ps = stokes_velocity_projector();
  }
  primary_ = std::make_unique<ProjectorSet>(std::move(ps));
  return *primary_;
}

ProjectorSet ElementOps::elliptic_projector() const {
  ElementOpsDetail d(*this);
  ProjectorSet ps;
  ps.tag = "pi-nabla";
  ps.k_star = k_;
  d.elliptic_scalar(k_, 0, ps.G, ps.B, ps.pi_star);
  ps.D = dof_matrix(k_);
  ps.pi_dof = ps.D * ps.pi_star;
  return ps;
}

ProjectorSet ElementOps::stokes_velocity_projector() const {
  ElementOpsDetail d(*this);
  const int nk = poly_dim(k_);
  ProjectorSet ps;
  ps.tag = "pi-nabla-vec";
  ps.k_star = k_;
  ps.G = Matrix::Zero(2 * nk, 2 * nk);
  ps.B = Matrix::Zero(2 * nk, ndof());
  ps.pi_star = Matrix::Zero(2 * nk, ndof());
  for (int c = 0; c < 2; ++c) {
    Matrix G, B, pi;
    d.elliptic_scalar(k_, c, G, B, pi);
    ps.G.block(c * nk, c * nk, nk, nk) = G;
    ps.B.middleRows(c * nk, nk) = B;
    ps.pi_star.middleRows(c * nk, nk) = pi;
  }
  ps.D = dof_matrix(k_);
  ps.pi_dof = ps.D * ps.pi_star;
  return ps;
}

Matrix3 ElementOps::element_constant_law() const {
  if (!coeffs_.c) throw std::logic_error("elasticity requires a constitutive law");
  if (coeffs_.c->constant) return coeffs_.c->value(elem().centroid);
  return piecewise_constant_approx(*coeffs_.c, area_rule(2 * (k_ + l_) + quad_.vc_surplus));
}

Matrix ElementOps::rigid_body_dofs() const {
  ElementOpsDetail d(*this);
  const int n = poly_dim(k_);
  Matrix rm = Matrix::Zero(2 * n, 3);
  rm(0, 0) = 1.0 / basis().R(0, 0);
  rm(n, 1) = 1.0 / basis().R(0, 0);
  rm.col(2) = d.rigid_rotation_coeffs();
  return dof_matrix(k_) * rm;
}

void ElementOps::elasticity_energy(int target_degree, bool variable, Matrix& G, Matrix& B,
                                   Matrix& pi) const {
  ElementOpsDetail d(*this);
  if (!coeffs_.c) throw std::logic_error("elasticity requires a constitutive law");
  const int n = poly_dim(target_degree);

  // Strain columns of the component-blocked vector basis at target_degree.
  VecTarget strain;
  strain.ncomp = 3;
  strain.n = poly_dim(basis().degree());
  strain.cols = Matrix::Zero(3 * strain.n, 2 * n);
  const Matrix& cx = basis().cx();
  const Matrix& cy = basis().cy();
  for (int b = 0; b < n; ++b) {
    strain.cols.col(b).head(strain.n) = cx.row(b).head(strain.n).transpose();
    strain.cols.col(b).segment(2 * strain.n, strain.n) = cy.row(b).head(strain.n).transpose();
    strain.cols.col(n + b).segment(strain.n, strain.n) = cy.row(b).head(strain.n).transpose();
    strain.cols.col(n + b).segment(2 * strain.n, strain.n) = cx.row(b).head(strain.n).transpose();
  }
  strain.vol_deg = target_degree - 2;
  strain.boundary_only.assign(2 * n, false);

  if (!variable) {
    const Matrix3 cbar = element_constant_law();
    G = d.voigt_energy_gram(strain, cbar);
    // B rows pair eps(phi) with C eps(p): fold C into the columns.
    VecTarget cstrain = strain;
    const int ns = strain.n;
    for (int col = 0; col < cstrain.count(); ++col) {
      Vector s0 = strain.cols.col(col).head(ns);
      Vector s1 = strain.cols.col(col).segment(ns, ns);
      Vector s2 = strain.cols.col(col).segment(2 * ns, ns);
      cstrain.cols.col(col).head(ns) = cbar(0, 0) * s0 + cbar(0, 1) * s1 + cbar(0, 2) * s2;
      cstrain.cols.col(col).segment(ns, ns) =
          cbar(1, 0) * s0 + cbar(1, 1) * s1 + cbar(1, 2) * s2;
      cstrain.cols.col(col).segment(2 * ns, ns) =
          cbar(2, 0) * s0 + cbar(2, 1) * s1 + cbar(2, 2) * s2;
    }
    B = d.voigt_rhs(cstrain);
  } else {
    G = d.voigt_gram_weighted(strain);
    B = d.voigt_rhs_weighted(strain);
  }

  // Rigid-body mean conditions: transform the test basis so three rows carry
  // the rigid motions (vanishing rows of G), then overwrite them.
  const int nk = poly_dim(k_);
  Matrix W = Matrix::Identity(2 * n, 2 * n);
  Vector rot_k = d.rigid_rotation_coeffs();  // over degree-k vector basis
  Vector rot = Vector::Zero(2 * n);
  rot.head(std::min(nk, n)) = rot_k.head(std::min(nk, n));
  rot.segment(n, std::min(nk, n)) = rot_k.segment(nk, std::min(nk, n));
  int jrot = 1;
  double best = 0;
  for (int cand : {1, 2, n + 1, n + 2})
    if (cand < 2 * n && std::abs(rot[cand]) > best) {
      best = std::abs(rot[cand]);
      jrot = cand;
    }
  const double inv_c0 = 1.0 / basis().R(0, 0);
  W.row(0).setZero();
  W(0, 0) = inv_c0;
  W.row(n).setZero();
  W(n, n) = inv_c0;
  W.row(jrot) = rot.transpose();

  Matrix Gt = W * G;
  Matrix Bt = W * B;
  Matrix rmdof = rigid_body_dofs();  // ndof x 3
  const Matrix D = dof_matrix(target_degree);
  const int rows[3] = {0, n, jrot};
  for (int m = 0; m < 3; ++m) {
    Vector grow = Vector::Zero(2 * n);
    Vector brow = Vector::Zero(ndof());
    for (int c = 0; c < 2; ++c)
      for (int v = 0; v < layout_.nv; ++v) {
        const int dof = layout_.vertex_dof(c, v);
        grow += D.row(dof).transpose() * (rmdof(dof, m) / layout_.nv);
        brow[dof] = rmdof(dof, m) / layout_.nv;
      }
    Gt.row(rows[m]) = grow.transpose();
    Bt.row(rows[m]) = brow.transpose();
  }
  pi = Gt.partialPivLu().solve(Bt);
}

ProjectorSet ElementOps::elasticity_projector() const {
  const bool variable = spec_.vc && coeffs_.c && !coeffs_.c->constant;
  ProjectorSet ps;
  ps.tag = variable ? "pi-e-vc" : "pi-e";
  ps.k_star = k_;
  elasticity_energy(k_, variable, ps.G, ps.B, ps.pi_star);
  ps.D = dof_matrix(k_);
  ps.pi_dof = ps.D * ps.pi_star;
  return ps;
}

Matrix ElementOps::pi0_star(int target_degree) const {
  const int n = poly_dim(target_degree);
  const int ncomp = layout_.ncomp;
  Matrix P(ncomp * n, ndof());
  for (int c = 0; c < ncomp; ++c)
    P.middleRows(c * n, n) = moment_matrix(c, target_degree).topRows(n);
  return P;
}

std::array<Matrix, 2> ElementOps::pi0_grad_star(int comp, int target_degree) const {
  ElementOpsDetail d(*this);
  const int n = poly_dim(target_degree);
  const int m = poly_dim(target_degree - 1);
  const Matrix cx = basis().cx().topLeftCorner(n, m);
  const Matrix cy = basis().cy().topLeftCorner(n, m);
  const Matrix& M = moment_matrix(comp, target_degree - 1);
  Matrix Bx = m > 0 ? Matrix(-cx * M) : Matrix::Zero(n, ndof());
  Matrix By = m > 0 ? Matrix(-cy * M) : Matrix::Zero(n, ndof());
  Bx += d.boundary(comp, n, target_degree, [&](int, const EdgeQuad& q) {
    Matrix vals = basis().eval(q.points).topRows(n);
    for (int i = 0; i < q.t.size(); ++i) vals.col(i) *= q.w_nds(0, i);
    return vals;
  });
  By += d.boundary(comp, n, target_degree, [&](int, const EdgeQuad& q) {
    Matrix vals = basis().eval(q.points).topRows(n);
    for (int i = 0; i < q.t.size(); ++i) vals.col(i) *= q.w_nds(1, i);
    return vals;
  });
  return {Bx, By};
}

ProjectorSet ElementOps::l2_projector() const {
  ProjectorSet ps;
  ps.tag = "pi0";
  ps.k_star = k_;
  ps.pi_star = pi0_star(k_);
  ps.G = Matrix::Identity(ps.pi_star.rows(), ps.pi_star.rows());
  ps.B = ps.pi_star;
  ps.D = dof_matrix(k_);
  ps.pi_dof = ps.D * ps.pi_star;
  return ps;
}

ProjectorSet ElementOps::vc_elliptic(int target_degree) const {
  ElementOpsDetail d(*this);
  if (!coeffs_.a) throw std::logic_error("vc_elliptic requires a diffusion coefficient");
  const int n = poly_dim(target_degree);
  const int nk = poly_dim(k_);
  const QuadRule2D& rule = area_rule(2 * (k_ + l_) + quad_.vc_surplus);
  const int nq = rule.size();
  const Matrix Qf = basis().eval(rule.points);
  const Matrix gx = basis().cx().topRows(n) * Qf;  // n x nq
  const Matrix gy = basis().cy().topRows(n) * Qf;

  Vector a11(nq), a12(nq), a22(nq);
  for (int q = 0; q < nq; ++q) {
    const Matrix2 A = coeffs_.a->value(rule.points.col(q));
    a11[q] = A(0, 0) * rule.weights[q];
    a12[q] = A(0, 1) * rule.weights[q];
    a22[q] = A(1, 1) * rule.weights[q];
  }
  ProjectorSet ps;
  ps.tag = "pi-nabla-A";
  ps.k_star = target_degree;
  ps.G = gx * a11.asDiagonal() * gx.transpose();
  ps.G.noalias() += gx * a12.asDiagonal() * gy.transpose();
  ps.G.noalias() += gy * a12.asDiagonal() * gx.transpose();
  ps.G.noalias() += gy * a22.asDiagonal() * gy.transpose();

  // Volume: -(Pi0_k phi, div(A grad q_beta)).
  const Matrix hxx = (basis().cx() * basis().cx()).topRows(n) * Qf;
  const Matrix hxy = (basis().cx() * basis().cy()).topRows(n) * Qf;
  const Matrix hyy = (basis().cy() * basis().cy()).topRows(n) * Qf;
  Matrix divv(nq, n);
  for (int q = 0; q < nq; ++q) {
    const Vector2 x = rule.points.col(q);
    const Matrix2 A = coeffs_.a->value(x);
    const Matrix2 Ax = coeffs_.a->dx(x);
    const Matrix2 Ay = coeffs_.a->dy(x);
    divv.row(q) = (Ax(0, 0) + Ay(1, 0)) * gx.col(q).transpose() +
                  (Ax(0, 1) + Ay(1, 1)) * gy.col(q).transpose() +
                  A(0, 0) * hxx.col(q).transpose() + 2.0 * A(0, 1) * hxy.col(q).transpose() +
                  A(1, 1) * hyy.col(q).transpose();
  }
  const Matrix Qk = Qf.topRows(nk);
  ps.B = -(Qk * rule.weights.asDiagonal() * divv).transpose() * pi0_star(k_);
  ps.B += d.boundary(0, n, 2 * (k_ + l_) + quad_.vc_surplus, [&](int, const EdgeQuad& q) {
    const Matrix Qb = basis().eval(q.points);
    const Matrix bx = basis().cx().topRows(n) * Qb;
    const Matrix by = basis().cy().topRows(n) * Qb;
    Matrix out(n, q.t.size());
    for (int i = 0; i < q.t.size(); ++i) {
      const Matrix2 A = coeffs_.a->value(q.points.col(i));
      const double nx = q.w_nds(0, i), ny = q.w_nds(1, i);
      out.col(i) = bx.col(i) * (A(0, 0) * nx + A(1, 0) * ny) +
                   by.col(i) * (A(0, 1) * nx + A(1, 1) * ny);
    }
    return out;
  });

  Matrix Gt = ps.G;
  Matrix Bt = ps.B;
  const Matrix vn = basis().eval(d.nodal_points()).topRows(n);
  Gt.row(0) = vn.leftCols(nv()).rowwise().sum().transpose() / nv();
  Bt.row(0).setZero();
  for (int v = 0; v < nv(); ++v) Bt(0, layout_.vertex_dof(0, v)) = 1.0 / nv();
  ps.pi_star = Gt.partialPivLu().solve(Bt);
  ps.D = dof_matrix(target_degree);
  ps.pi_dof = ps.D * ps.pi_star;
  return ps;
}

ProjectorSet ElementOps::vc_projector() const { return vc_elliptic(k_); }

ProjectorSet ElementOps::selfstab_projector(int comp) const {
  ElementOpsDetail d(*this);
  if (!spec_.self_stabilized()) throw std::logic_error("selfstab_projector: not a V-form");
  const int Kt = k_ + l_;
  ProjectorSet ps;
  ps.k_star = Kt;
  ps.tag = spec_.name();

  const bool vc = spec_.vc;
  switch (spec_.form) {
    case Formulation::V1:
    case Formulation::V2: {
      if (problem_ == Problem::Elasticity) {
        VecTarget t = d.full_voigt_target(Kt - 1);
        ps.target = t.cols;
        ps.target_ncomp = 3;
        ps.target_n = t.n;
        if (vc) {
          ps.G = d.voigt_gram_weighted(t);
          ps.B = d.voigt_rhs_weighted(t);
          ps.pi_star = ps.G.ldlt().solve(ps.B);
        } else {
          // Slot rows from the per-component gradient projections.
          const auto g0 = pi0_grad_star(0, Kt - 1);
          const auto g1 = pi0_grad_star(1, Kt - 1);
          const int m = poly_dim(Kt - 1);
          ps.B = Matrix(3 * m, ndof());
          ps.B.topRows(m) = g0[0];
          ps.B.middleRows(m, m) = g1[1];
          ps.B.bottomRows(m) = g0[1] + g1[0];
          ps.G = Matrix::Identity(3 * m, 3 * m);
          ps.pi_star = ps.B;
        }
      } else {
        // Scalar / one Stokes component: gradient projection onto [P_{K-1}]^2.
        if (vc) {
          VecTarget t = d.full_vec_target(Kt - 1);
          ps.target = t.cols;
          ps.target_ncomp = 2;
          ps.target_n = t.n;
          ps.G = d.target_gram_weighted(t);
          ps.B = d.scalar_vec_rhs_weighted(comp, t);
          ps.pi_star = ps.G.ldlt().solve(ps.B);
        } else {
          const auto g = pi0_grad_star(comp, Kt - 1);
          const int m = poly_dim(Kt - 1);
          ps.B = Matrix(2 * m, ndof());
          ps.B.topRows(m) = g[0];
          ps.B.bottomRows(m) = g[1];
          ps.G = Matrix::Identity(2 * m, 2 * m);
          ps.pi_star = ps.B;
          VecTarget t = d.full_vec_target(Kt - 1);
          ps.target = t.cols;
          ps.target_ncomp = 2;
          ps.target_n = t.n;
        }
      }
      break;
    }
    case Formulation::V3:
    case Formulation::V6: {
      const bool v6 = spec_.form == Formulation::V6;
      if (problem_ == Problem::Elasticity) {
        if (vc)
          throw std::invalid_argument("VC-VEM for elasticity is defined for V1 only");
        VecTarget t = v6 ? d.mixed_voigt_target_v6() : d.mixed_voigt_target_v3();
        ps.target = t.cols;
        ps.target_ncomp = 3;
        ps.target_n = t.n;
        ps.G = d.voigt_gram(t);
        ps.B = d.voigt_rhs(t);
        ps.pi_star = ps.G.ldlt().solve(ps.B);
      } else {
        VecTarget t = d.mixed_scalar_target(v6);
        ps.target = t.cols;
        ps.target_ncomp = 2;
        ps.target_n = t.n;
        if (vc) {
          ps.G = d.target_gram_weighted(t);
          ps.B = d.scalar_vec_rhs_weighted(comp, t);
        } else {
          ps.G = d.target_gram(t);
          ps.B = d.scalar_vec_rhs(comp, t);
        }
        ps.pi_star = ps.G.ldlt().solve(ps.B);
      }
      break;
    }
    case Formulation::V4:
    case Formulation::V5: {
      if (problem_ == Problem::Elasticity) {
        elasticity_energy(Kt, vc && coeffs_.c && !coeffs_.c->constant, ps.G, ps.B, ps.pi_star);
        ps.D = dof_matrix(Kt);
        ps.pi_dof = ps.D * ps.pi_star;
      } else if (vc) {
        ps = vc_elliptic(Kt);
        ps.tag = spec_.name();
      } else {
        Matrix G, B, pi;
        d.elliptic_scalar(Kt, comp, G, B, pi);
        ps.G = G;
        ps.B = B;
        ps.pi_star = pi;
        ps.D = dof_matrix(Kt);
        ps.pi_dof = ps.D * ps.pi_star;
      }
      break;
    }
    default:
      throw std::logic_error("selfstab_projector: unexpected formulation");
  }
  return ps;
}

Matrix ElementOps::consistency_matrix() const {
  ElementOpsDetail d(*this);
  const double nu = coeffs_.viscosity;

  if (spec_.stabilized()) {
    if (problem_ == Problem::Laplace) {
      const bool has_coeff = coeffs_.a && !coeffs_.a->constant;
      if (spec_.form == Formulation::StdPiZeroGrad) {
        // (Pi0_{k-1} grad phi_i, A Pi0_{k-1} grad phi_j).
        const auto g = pi0_grad_star(0, k_ - 1);
        const int m = poly_dim(k_ - 1);
        if (!has_coeff) return g[0].transpose() * g[0] + g[1].transpose() * g[1];
        VecTarget t = d.full_vec_target(k_ - 1);
        const Matrix GA = d.target_gram_weighted(t);
        Matrix P(2 * m, ndof());
        P.topRows(m) = g[0];
        P.bottomRows(m) = g[1];
        return P.transpose() * GA * P;
      }
      if (spec_.vc && has_coeff) {
        const ProjectorSet ps = vc_elliptic(k_);
        return ps.pi_star.transpose() * ps.G * ps.pi_star;
      }
      const ProjectorSet& pp = primary_projector();
      if (!has_coeff) return pp.pi_star.transpose() * pp.G * pp.pi_star;
      // Standard projector paired with the variable coefficient.
      VecTarget t = d.full_vec_target(k_);
      (void)t;
      const int n = poly_dim(k_);
      const QuadRule2D& rule = area_rule(2 * k_ + quad_.vc_surplus);
      const Matrix Qf = basis().eval(rule.points);
      const Matrix gx = basis().cx().topRows(n) * Qf;
      const Matrix gy = basis().cy().topRows(n) * Qf;
      Vector a11(rule.size()), a12(rule.size()), a22(rule.size());
      for (int q = 0; q < rule.size(); ++q) {
        const Matrix2 A = coeffs_.a->value(rule.points.col(q));
        a11[q] = A(0, 0) * rule.weights[q];
        a12[q] = A(0, 1) * rule.weights[q];
        a22[q] = A(1, 1) * rule.weights[q];
      }
      Matrix GA = gx * a11.asDiagonal() * gx.transpose();
      GA.noalias() += gx * a12.asDiagonal() * gy.transpose();
      GA.noalias() += gy * a12.asDiagonal() * gx.transpose();
      GA.noalias() += gy * a22.asDiagonal() * gy.transpose();
      return pp.pi_star.transpose() * GA * pp.pi_star;
    }
    if (problem_ == Problem::Elasticity) {
      const bool has_var = coeffs_.c && !coeffs_.c->constant;
      if (spec_.form == Formulation::StdPiZeroGrad) {
        // L2 strain projection onto [P_{k-1}]^3 paired with C(x).
        const auto g0 = pi0_grad_star(0, k_ - 1);
        const auto g1 = pi0_grad_star(1, k_ - 1);
        const int m = poly_dim(k_ - 1);
        Matrix T(3 * m, ndof());
        T.topRows(m) = g0[0];
        T.middleRows(m, m) = g1[1];
        T.bottomRows(m) = g0[1] + g1[0];
        if (!has_var) {
          const Matrix3 c = element_constant_law();
          Matrix Kc = Matrix::Zero(ndof(), ndof());
          for (int s = 0; s < 3; ++s)
            for (int r = 0; r < 3; ++r)
              Kc.noalias() += c(s, r) * T.middleRows(s * m, m).transpose() * T.middleRows(r * m, m);
          return Kc;
        }
        VecTarget t = d.full_voigt_target(k_ - 1);
        const Matrix GC = d.voigt_gram_weighted(t);
        return T.transpose() * GC * T;
      }
      if (spec_.vc && has_var) {
        const ProjectorSet ps = elasticity_projector();
        return ps.pi_star.transpose() * ps.G * ps.pi_star;
      }
      const ProjectorSet& pp = primary_projector();  // averaged or constant law
      return pp.pi_star.transpose() * pp.G * pp.pi_star;
    }
    // Stokes.
    const ProjectorSet& pp = primary_projector();
    return nu * (pp.pi_star.transpose() * pp.G * pp.pi_star).eval();
  }

  // Self-stabilized formulations.
  if (problem_ == Problem::Laplace) {
    const ProjectorSet ps = selfstab_projector();
    return ps.pi_star.transpose() * ps.G * ps.pi_star;
  }
  if (problem_ == Problem::Stokes) {
    Matrix Kc = Matrix::Zero(ndof(), ndof());
    for (int c = 0; c < 2; ++c) {
      const ProjectorSet ps = selfstab_projector(c);
      Kc.noalias() += ps.pi_star.transpose() * ps.G * ps.pi_star;
    }
    return nu * Kc;
  }
  // Elasticity.
  const ProjectorSet ps = selfstab_projector();
  const bool variable_energy = spec_.vc && coeffs_.c && !coeffs_.c->constant;
  if (spec_.form == Formulation::V4 || spec_.form == Formulation::V5 || variable_energy)
    return ps.pi_star.transpose() * ps.G * ps.pi_star;
  // Gradient-type constant-law versions: energy Gram over the Voigt target.
  VecTarget t;
  t.ncomp = 3;
  t.n = ps.target_n;
  t.cols = ps.target;
  const Matrix E = d.voigt_energy_gram(t, element_constant_law());
  return ps.pi_star.transpose() * E * ps.pi_star;
}

Matrix ElementOps::boundary_mass() const {
  Matrix M = Matrix::Zero(ndof(), ndof());
  for (int e = 0; e < elem().num_edges(); ++e) {
    const bool curved = elem().edges[e].curved();
    const EdgeQuad& q = edge_quad(e, curved ? 3 * (2 * k_ + 2) : 2 * k_ + 2);
    const Matrix lag = edge_trace_lagrange(q.t);
    const Matrix block = lag * q.w_ds.asDiagonal() * lag.transpose();
    for (int c = 0; c < layout_.ncomp; ++c) {
      const std::vector<int> dofs = layout_.edge_nodal_dofs(c, e);
      for (int i = 0; i <= k_; ++i)
        for (int j = 0; j <= k_; ++j) M(dofs[i], dofs[j]) += block(i, j);
    }
  }
  return M;
}

Matrix ElementOps::stokes_divergence_matrix() const {
  ElementOpsDetail d(*this);
  const int np = poly_dim(k_ - 1);
  Matrix Bm = Matrix::Zero(np, ndof());
  for (int m = 1; m < np; ++m) Bm(m, layout_.div_dof(m - 1)) = area();
  const double c0 = basis().R(0, 0);
  for (int c = 0; c < 2; ++c) {
    Bm += d.boundary(c, np, 0, [&](int, const EdgeQuad& q) {
      Matrix vals = Matrix::Zero(np, q.t.size());
      for (int i = 0; i < q.t.size(); ++i) vals(0, i) = c0 * q.w_nds(c, i);
      return vals;
    });
  }
  return Bm;
}

int ElementOps::initial_augmentation(Problem problem, Formulation form, int k, int nv) {
  const int kernel = problem == Problem::Laplace ? 1 : (problem == Problem::Elasticity ? 3 : 2);
  const int ncomp = problem == Problem::Laplace ? 1 : 2;
  for (int l = 1;; ++l) {
    const LocalLayout lay = local_layout(problem, form, k, l, nv);
    if (ncomp * poly_dim(k + l) >= lay.total - kernel) return l;
    if (l > 64) throw std::runtime_error("initial_augmentation: runaway dimension search");
  }
}

}  // namespace vem
