#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyvem/types.hpp"

namespace vem {

// Bezier curve of degree n = #control_points - 1, parametrized on [0,1].
struct BezierCurve {
  std::vector<Vector2> control_points;

  int degree() const { return static_cast<int>(control_points.size()) - 1; }
};

Vector2 bezier_eval(const BezierCurve& curve, double t);
Vector2 bezier_derivative(const BezierCurve& curve, double t);

// De Casteljau split at parameter t into two curves of the same degree.
std::pair<BezierCurve, BezierCurve> bezier_split(const BezierCurve& curve, double t);
BezierCurve bezier_reversed(const BezierCurve& curve);

// Element edge. Vertex indices refer to Mesh::vertices; a curved edge carries
// its Bezier parametrization, whose endpoints must coincide with the vertices.
struct Edge {
  int v0 = -1;
  int v1 = -1;
  std::optional<BezierCurve> curve;

  bool curved() const { return curve.has_value(); }
};

// Evaluation view of one edge in physical coordinates, t in [0,1].
// Straight edges are the degree-1 case.
class EdgeCurve {
 public:
  EdgeCurve(const Vector2& p0, const Vector2& p1, const BezierCurve* curve = nullptr)
      : p0_(p0), p1_(p1), curve_(curve) {}

  Vector2 eval(double t) const {
    return curve_ ? bezier_eval(*curve_, t) : Vector2(p0_ + t * (p1_ - p0_));
  }
  Vector2 derivative(double t) const {
    return curve_ ? bezier_derivative(*curve_, t) : Vector2(p1_ - p0_);
  }
  bool curved() const { return curve_ != nullptr; }
  const Vector2& p0() const { return p0_; }
  const Vector2& p1() const { return p1_; }

 private:
  Vector2 p0_, p1_;
  const BezierCurve* curve_;
};

struct Element {
  std::vector<Edge> edges;  // counterclockwise; edge e runs vertex e -> vertex e+1

  // Derived quantities, filled by Mesh::finalize().
  double area = 0.0;
  double diameter = 0.0;
  Vector2 centroid = Vector2::Zero();
  bool star_shaped = true;  // w.r.t. centroid; checked for straight polygons only

  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_vertices() const { return static_cast<int>(edges.size()); }
  bool has_curved_edge() const;
};

struct ValidationIssue {
  int element = -1;  // -1 for mesh-level issues
  bool fatal = true;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const {
    for (const auto& i : issues)
      if (i.fatal) return false;
    return true;
  }
};

struct Mesh {
  std::vector<Vector2> vertices;
  std::vector<Element> elements;

  // Derived connectivity, filled by finalize().
  std::vector<bool> boundary_vertex;
  std::vector<std::array<int, 2>> edge_list;        // unique edges, (min,max) vertex pair
  std::vector<bool> boundary_edge;                  // per unique edge
  std::vector<std::vector<int>> element_edge_ids;   // per element, per local edge
  Vector2 bbox_min = Vector2::Zero();
  Vector2 bbox_max = Vector2::Zero();

  EdgeCurve edge_curve(int element, int local_edge) const;
  Vector2 vertex_of(int element, int local_vertex) const;
  double h_max() const;

  // Computes per-element geometry and mesh connectivity. Throws on
  // nonpositive area.
  void finalize();
};

// Geometry of one element by the divergence theorem; curved edges are
// integrated through their parametrization.
void compute_element_geometry(const Mesh& mesh, Element& elem);

Mesh builtin_mesh(const std::string& name);  // quad | voronoi5 | octagon | bezier4

Mesh load_mesh(const std::string& path, ValidationReport* report = nullptr);
void save_mesh(const Mesh& mesh, const std::string& path);
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text, ValidationReport* report = nullptr);

ValidationReport validate_mesh(const Mesh& mesh);

}  // namespace vem
