#pragma once

#include "polyvem/geometry.hpp"
#include "polyvem/types.hpp"

namespace vem {

// One-dimensional rule; domain is stated by the producing function.
struct QuadRule1D {
  Vector points;
  Vector weights;
};

// Two-dimensional rule in physical coordinates.
struct QuadRule2D {
  Matrix points;   // 2 x n
  Vector weights;  // n

  int size() const { return static_cast<int>(weights.size()); }
};

// Gauss-Legendre on [-1,1], exact to degree 2n-1.
QuadRule1D gauss_legendre(int n);
// Gauss-Legendre mapped to [0,1].
QuadRule1D gauss_legendre_01(int n);
// Gauss-Lobatto on [-1,1] (endpoints included), exact to degree 2n-3; n >= 2.
QuadRule1D gauss_lobatto(int n);

// Quadrature along one edge, t in [0,1]. w_ds carries the arc-length measure
// ||gamma'|| dt; w_nds carries the outward-normal measure n ds = (y', -x') dt
// (interior on the left of traversal).
struct EdgeQuad {
  Vector t;       // parameters in [0,1]
  Matrix points;  // 2 x n physical
  Vector w_ds;    // n
  Matrix w_nds;   // 2 x n
};

// Rule integrating parametric polynomials up to `param_exactness` exactly.
EdgeQuad edge_rule(const EdgeCurve& edge, int param_exactness);

// Area rule on one element, exact for 2-D polynomials up to `exactness` on
// straight star-shaped polygons (fan from the centroid with a blended map per
// edge; curved edges get the transfinite map between chord and curve). A
// non-star-shaped straight polygon falls back to ear clipping.
QuadRule2D element_rule(const Mesh& mesh, int element, int exactness);

// Ear-clipping triangulation of a simple straight polygon given by vertex
// coordinates, counterclockwise. Returns index triples.
std::vector<std::array<int, 3>> ear_clip(const std::vector<Vector2>& poly);

}  // namespace vem
