#include "polyvem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace vem {

QuadRule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  // Golub-Welsch: eigenvalues of the Jacobi matrix.
  Matrix J = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  QuadRule1D rule;
  rule.points = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).array().square();
  return rule;
}

QuadRule1D gauss_legendre_01(int n) {
  QuadRule1D r = gauss_legendre(n);
  r.points = (r.points.array() + 1.0) * 0.5;
  r.weights *= 0.5;
  return r;
}

QuadRule1D gauss_lobatto(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto: n >= 2 required");
  QuadRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.points[0] = -1.0;
  rule.points[n - 1] = 1.0;
  if (n > 2) {
    // Interior nodes are the roots of P'_{n-1}: eigenvalues of the Jacobi(1,1)
    // recurrence matrix.
    const int m = n - 2;
    Matrix J = Matrix::Zero(m, m);
    for (int i = 1; i < m; ++i) {
      const double b = std::sqrt(i * (i + 2.0) / ((2.0 * i + 1.0) * (2.0 * i + 3.0)));
      J(i, i - 1) = J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    rule.points.segment(1, m) = es.eigenvalues();
  }
  // w_i = 2 / (n(n-1) P_{n-1}(x_i)^2), endpoints included.
  auto legendre = [](int deg, double x) {
    double p0 = 1.0, p1 = x;
    if (deg == 0) return p0;
    for (int k = 2; k <= deg; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return p1;
  };
  for (int i = 0; i < n; ++i) {
    const double p = legendre(n - 1, rule.points[i]);
    rule.weights[i] = 2.0 / (n * (n - 1.0) * p * p);
  }
  return rule;
}

EdgeQuad edge_rule(const EdgeCurve& edge, int param_exactness) {
  const int n = std::max(1, (param_exactness + 2) / 2);
  const QuadRule1D g = gauss_legendre_01(n);
  EdgeQuad q;
  q.t = g.points;
  q.points.resize(2, n);
  q.w_ds.resize(n);
  q.w_nds.resize(2, n);
  for (int i = 0; i < n; ++i) {
    const Vector2 p = edge.eval(g.points[i]);
    const Vector2 d = edge.derivative(g.points[i]);
    q.points.col(i) = p;
    q.w_ds[i] = g.weights[i] * d.norm();
    q.w_nds(0, i) = g.weights[i] * d.y();
    q.w_nds(1, i) = -g.weights[i] * d.x();
  }
  return q;
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<Vector2>& poly) {
  const int n = static_cast<int>(poly.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<std::array<int, 3>> tris;
  auto cross = [](const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); };
  auto inside = [&](const Vector2& p, const Vector2& a, const Vector2& b, const Vector2& c) {
    const double d1 = cross(b - a, p - a), d2 = cross(c - b, p - b), d3 = cross(a - c, p - c);
    return d1 >= 0 && d2 >= 0 && d3 >= 0;
  };
  int guard = 0;
  while (idx.size() > 3) {
    if (++guard > 10000) throw std::runtime_error("ear_clip: not a simple polygon?");
    bool clipped = false;
    const int m = static_cast<int>(idx.size());
    for (int i = 0; i < m; ++i) {
      const int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      const Vector2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (cross(b - a, c - b) <= 0) continue;  // reflex corner
      bool ear = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (inside(poly[j], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) throw std::runtime_error("ear_clip: no ear found");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

namespace {

// Tensor rule on the blended region between an apex c and a curve s -> g(s):
// X(s,t) = c + t (g(s) - c), absolute Jacobian |t cross(g'(s), g(s) - c)|.
void append_blended(const Vector2& apex, const EdgeCurve& edge, int ns, int nt, Matrix& pts,
                    Vector& wts, int& at) {
  const QuadRule1D gs = gauss_legendre_01(ns);
  const QuadRule1D gt = gauss_legendre_01(nt);
  for (int i = 0; i < ns; ++i) {
    const Vector2 g = edge.eval(gs.points[i]);
    const Vector2 gd = edge.derivative(gs.points[i]);
    const double j_s = gd.x() * (g - apex).y() - gd.y() * (g - apex).x();
    for (int j = 0; j < nt; ++j) {
      const double t = gt.points[j];
      pts.col(at) = apex + t * (g - apex);
      wts[at] = gs.weights[i] * gt.weights[j] * std::abs(t * j_s);
      ++at;
    }
  }
}

}  // namespace

QuadRule2D element_rule(const Mesh& mesh, int element, int exactness) {
  const Element& el = mesh.elements[element];
  const int d = std::max(exactness, 0);
  // Degrees in the blended coordinates: for straight edges the map is
  // bilinear, so f o X has degree <= d in s and in t and the Jacobian adds one
  // to each; cubic edges triple the s-degree and add the curve factors.
  const int nt = (d + 3) / 2;
  const int ns_straight = (d + 3) / 2;
  const int ns_curved = (3 * d + 7) / 2;

  QuadRule2D rule;
  if (!el.has_curved_edge() && !el.star_shaped) {
    std::vector<Vector2> poly;
    for (int e = 0; e < el.num_edges(); ++e) poly.push_back(mesh.vertices[el.edges[e].v0]);
    const auto tris = ear_clip(poly);
    const int per_tri = ns_straight * nt;
    rule.points.resize(2, per_tri * tris.size());
    rule.weights.resize(per_tri * tris.size());
    int at = 0;
    for (const auto& tri : tris) {
      // Apex at the first vertex, blended over the opposite edge.
      EdgeCurve opposite(poly[tri[1]], poly[tri[2]]);
      append_blended(poly[tri[0]], opposite, ns_straight, nt, rule.points, rule.weights, at);
    }
    return rule;
  }

  int total = 0;
  for (int e = 0; e < el.num_edges(); ++e)
    total += (el.edges[e].curved() ? ns_curved : ns_straight) * nt;
  rule.points.resize(2, total);
  rule.weights.resize(total);
  int at = 0;
  for (int e = 0; e < el.num_edges(); ++e) {
    const int ns = el.edges[e].curved() ? ns_curved : ns_straight;
    append_blended(el.centroid, mesh.edge_curve(element, e), ns, nt, rule.points, rule.weights,
                   at);
  }
  return rule;
}

}  // namespace vem
