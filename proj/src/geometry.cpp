#include "polyvem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "polyvem/quadrature.hpp"

namespace vem {

namespace {

double cross2(const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

Vector2 bezier_eval(const BezierCurve& curve, double t) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("bezier_eval: t outside [0,1]");
  // De Casteljau
  std::vector<Vector2> pts = curve.control_points;
  for (int level = static_cast<int>(pts.size()) - 1; level > 0; --level)
    for (int i = 0; i < level; ++i) pts[i] = (1.0 - t) * pts[i] + t * pts[i + 1];
  return pts[0];
}

Vector2 bezier_derivative(const BezierCurve& curve, double t) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("bezier_derivative: t outside [0,1]");
  const int n = curve.degree();
  if (n == 0) return Vector2::Zero();
  BezierCurve hodo;
  hodo.control_points.resize(n);
  for (int i = 0; i < n; ++i)
    hodo.control_points[i] = double(n) * (curve.control_points[i + 1] - curve.control_points[i]);
  return bezier_eval(hodo, t);
}

std::pair<BezierCurve, BezierCurve> bezier_split(const BezierCurve& curve, double t) {
  std::vector<Vector2> pts = curve.control_points;
  const int n = curve.degree();
  BezierCurve left, right;
  left.control_points.resize(n + 1);
  right.control_points.resize(n + 1);
  left.control_points[0] = pts[0];
  right.control_points[n] = pts[n];
  for (int level = n; level > 0; --level) {
    for (int i = 0; i < level; ++i) pts[i] = (1.0 - t) * pts[i] + t * pts[i + 1];
    left.control_points[n - level + 1] = pts[0];
    right.control_points[level - 1] = pts[level - 1];
  }
  return {left, right};
}

BezierCurve bezier_reversed(const BezierCurve& curve) {
  BezierCurve rev = curve;
  std::reverse(rev.control_points.begin(), rev.control_points.end());
  return rev;
}

bool Element::has_curved_edge() const {
  return std::any_of(edges.begin(), edges.end(), [](const Edge& e) { return e.curved(); });
}

EdgeCurve Mesh::edge_curve(int element, int local_edge) const {
  const Edge& e = elements[element].edges[local_edge];
  return EdgeCurve(vertices[e.v0], vertices[e.v1], e.curve ? &*e.curve : nullptr);
}

Vector2 Mesh::vertex_of(int element, int local_vertex) const {
  return vertices[elements[element].edges[local_vertex].v0];
}

double Mesh::h_max() const {
  double h = 0;
  for (const auto& e : elements) h = std::max(h, e.diameter);
  return h;
}

void compute_element_geometry(const Mesh& mesh, Element& elem) {
  // Boundary integrals with enough Gauss points for cubic edges: the area
  // integrand x*y' has parametric degree <= 5 for cubics, the centroid ones
  // degree <= 8. Eight points are exact to degree 15.
  const QuadRule1D gauss = gauss_legendre_01(8);
  double area = 0.0, cx = 0.0, cy = 0.0;
  const int idx = static_cast<int>(&elem - mesh.elements.data());
  for (int e = 0; e < elem.num_edges(); ++e) {
    EdgeCurve c = mesh.edge_curve(idx, e);
    for (int q = 0; q < gauss.points.size(); ++q) {
      const double t = gauss.points[q], w = gauss.weights[q];
      const Vector2 p = c.eval(t), d = c.derivative(t);
      area += w * p.x() * d.y();
      cx += w * 0.5 * p.x() * p.x() * d.y();
      cy -= w * 0.5 * p.y() * p.y() * d.x();
    }
  }
  if (!(area > 0.0))
    throw std::runtime_error("element " + std::to_string(idx) +
                             ": nonpositive area (check counterclockwise ordering)");
  elem.area = area;
  elem.centroid = Vector2(cx / area, cy / area);

  // Diameter over vertices plus 32 samples per curved edge.
  std::vector<Vector2> pts;
  for (int e = 0; e < elem.num_edges(); ++e) {
    pts.push_back(mesh.vertices[elem.edges[e].v0]);
    if (elem.edges[e].curved()) {
      EdgeCurve c = mesh.edge_curve(idx, e);
      for (int s = 1; s < 32; ++s) pts.push_back(c.eval(s / 32.0));
    }
  }
  double diam = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) diam = std::max(diam, (pts[i] - pts[j]).norm());
  elem.diameter = diam;

  // Star-shapedness w.r.t. the centroid, straight polygons only: every fan
  // triangle (centroid, v_e, v_{e+1}) must have positive signed area.
  if (!elem.has_curved_edge()) {
    elem.star_shaped = true;
    for (int e = 0; e < elem.num_edges(); ++e) {
      const Vector2 a = mesh.vertices[elem.edges[e].v0];
      const Vector2 b = mesh.vertices[elem.edges[e].v1];
      if (cross2(a - elem.centroid, b - elem.centroid) <= 0) {
        elem.star_shaped = false;
        break;
      }
    }
  }
}

void Mesh::finalize() {
  if (vertices.empty() || elements.empty()) throw std::runtime_error("empty mesh");
  bbox_min = bbox_max = vertices[0];
  for (const auto& v : vertices) {
    bbox_min = bbox_min.cwiseMin(v);
    bbox_max = bbox_max.cwiseMax(v);
  }
  for (auto& el : elements) {
    for (size_t e = 0; e < el.edges.size(); ++e) {
      const Edge& cur = el.edges[e];
      const Edge& nxt = el.edges[(e + 1) % el.edges.size()];
      if (cur.v1 != nxt.v0) throw std::runtime_error("element edges do not chain");
    }
    compute_element_geometry(*this, el);
  }

  // Unique edge table and boundary flags.
  std::map<std::pair<int, int>, int> table;
  edge_list.clear();
  element_edge_ids.assign(elements.size(), {});
  std::vector<int> incidence;
  for (size_t ei = 0; ei < elements.size(); ++ei) {
    for (const Edge& e : elements[ei].edges) {
      auto key = std::minmax(e.v0, e.v1);
      auto it = table.find(key);
      int id;
      if (it == table.end()) {
        id = static_cast<int>(edge_list.size());
        table.emplace(key, id);
        edge_list.push_back({key.first, key.second});
        incidence.push_back(0);
      } else {
        id = it->second;
      }
      incidence[id]++;
      element_edge_ids[ei].push_back(id);
    }
  }
  boundary_edge.resize(edge_list.size());
  boundary_vertex.assign(vertices.size(), false);
  for (size_t id = 0; id < edge_list.size(); ++id) {
    boundary_edge[id] = (incidence[id] == 1);
    if (boundary_edge[id]) {
      boundary_vertex[edge_list[id][0]] = true;
      boundary_vertex[edge_list[id][1]] = true;
    }
  }
}

ValidationReport validate_mesh(const Mesh& mesh) {
  ValidationReport rep;
  const double tol = 1e-12;
  for (size_t ei = 0; ei < mesh.elements.size(); ++ei) {
    const Element& el = mesh.elements[ei];
    if (el.num_edges() < 3)
      rep.issues.push_back({int(ei), true, "fewer than three edges"});
    if (!(el.area > 0))
      rep.issues.push_back({int(ei), true, "nonpositive area (clockwise element?)"});
    for (int e = 0; e < el.num_edges(); ++e) {
      const Edge& ed = el.edges[e];
      if (ed.v0 < 0 || ed.v1 < 0 || ed.v0 >= int(mesh.vertices.size()) ||
          ed.v1 >= int(mesh.vertices.size())) {
        rep.issues.push_back({int(ei), true, "edge vertex index out of range"});
        continue;
      }
      if (ed.curved()) {
        const Vector2 a = bezier_eval(*ed.curve, 0.0), b = bezier_eval(*ed.curve, 1.0);
        if ((a - mesh.vertices[ed.v0]).norm() > tol || (b - mesh.vertices[ed.v1]).norm() > tol)
          rep.issues.push_back(
              {int(ei), true, "curved edge endpoints do not match vertices"});
      }
    }
    if (!el.has_curved_edge() && !el.star_shaped)
      rep.issues.push_back({int(ei), false, "straight element not star-shaped w.r.t. centroid"});
  }
  // Shared straight edges must be geometrically identical: guaranteed by the
  // indexed representation; shared curved edges must carry mirrored control
  // points.
  std::map<std::pair<int, int>, std::vector<std::pair<int, const Edge*>>> by_key;
  for (size_t ei = 0; ei < mesh.elements.size(); ++ei)
    for (const Edge& e : mesh.elements[ei].edges)
      by_key[std::minmax(e.v0, e.v1)].push_back({int(ei), &e});
  for (auto& [key, owners] : by_key) {
    if (owners.size() > 2)
      rep.issues.push_back({owners[0].first, true, "edge shared by more than two elements"});
    if (owners.size() == 2) {
      const Edge *a = owners[0].second, *b = owners[1].second;
      if (a->curved() != b->curved()) {
        rep.issues.push_back({owners[0].first, true, "shared edge curved on one side only"});
      } else if (a->curved()) {
        const auto& pa = a->curve->control_points;
        const auto& pb = b->curve->control_points;
        bool match = pa.size() == pb.size();
        if (match)
          for (size_t i = 0; i < pa.size(); ++i)
            match = match && (pa[i] - pb[pb.size() - 1 - i]).norm() < tol;
        if (!match)
          rep.issues.push_back(
              {owners[0].first, true, "shared curved edge parametrizations do not mirror"});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Built-in meshes
// ---------------------------------------------------------------------------

namespace {

Mesh make_quad() {
  Mesh m;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) m.vertices.push_back(Vector2(0.5 * i, 0.5 * j));
  auto vid = [](int i, int j) { return 3 * j + i; };
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      Element el;
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      el.edges = {Edge{a, b, {}}, Edge{b, c, {}}, Edge{c, d, {}}, Edge{d, a, {}}};
      m.elements.push_back(el);
    }
  return m;
}

// Clip a convex polygon against the half-plane n.x <= c (kept side).
std::vector<Vector2> clip_halfplane(const std::vector<Vector2>& poly, const Vector2& n, double c) {
  std::vector<Vector2> out;
  const int np = static_cast<int>(poly.size());
  for (int i = 0; i < np; ++i) {
    const Vector2 &a = poly[i], &b = poly[(i + 1) % np];
    const double da = n.dot(a) - c, db = n.dot(b) - c;
    if (da <= 0) out.push_back(a);
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
      const double s = da / (da - db);
      out.push_back(a + s * (b - a));
    }
  }
  return out;
}

Mesh make_voronoi5() {
  // Fixed seeds; cells from half-plane clipping of the unit square. The seed
  // set is frozen so that the mesh is deterministic.
  const std::vector<Vector2> seeds = {
      {0.2, 0.3}, {0.8, 0.2}, {0.5, 0.55}, {0.15, 0.8}, {0.82, 0.78}};
  Mesh m;
  std::vector<std::vector<Vector2>> cells;
  for (size_t i = 0; i < seeds.size(); ++i) {
    std::vector<Vector2> poly = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (size_t j = 0; j < seeds.size(); ++j) {
      if (j == i) continue;
      // |x - si|^2 <= |x - sj|^2  <=>  (sj - si).x <= (|sj|^2 - |si|^2)/2
      const Vector2 n = seeds[j] - seeds[i];
      const double c = 0.5 * (seeds[j].squaredNorm() - seeds[i].squaredNorm());
      poly = clip_halfplane(poly, n, c);
    }
    cells.push_back(poly);
  }
  // Merge coincident vertices (clipping reproduces shared corners exactly up
  // to roundoff).
  const double tol = 1e-12;
  auto add_vertex = [&](const Vector2& p) {
    for (size_t i = 0; i < m.vertices.size(); ++i)
      if ((m.vertices[i] - p).norm() < tol) return int(i);
    m.vertices.push_back(p);
    return int(m.vertices.size()) - 1;
  };
  for (auto& poly : cells) {
    Element el;
    std::vector<int> ids;
    for (const auto& p : poly) ids.push_back(add_vertex(p));
    for (size_t e = 0; e < ids.size(); ++e)
      el.edges.push_back(Edge{ids[e], ids[(e + 1) % ids.size()], {}});
    m.elements.push_back(el);
  }
  return m;
}

Mesh make_octagon() {
  // Regular octagon of circumradius 0.35 centered at (0.5,0.5), edge midpoints
  // facing the square corners and edge midpoints. The complement is split by
  // rays from the octagon edge midpoints to those eight landmarks, giving
  // eight concave pentagons (reflex angle at the enclosed octagon vertex).
  const double R = 0.35;
  const Vector2 c(0.5, 0.5);
  Mesh m;
  std::vector<int> oct_vertex(8), mid_vertex(8), landmark(8);
  auto add = [&](const Vector2& p) {
    m.vertices.push_back(p);
    return int(m.vertices.size()) - 1;
  };
  const double pi = std::acos(-1.0);
  for (int j = 0; j < 8; ++j) {
    const double av = (22.5 + 45.0 * j) * pi / 180.0;
    oct_vertex[j] = add(c + R * Vector2(std::cos(av), std::sin(av)));
  }
  for (int j = 0; j < 8; ++j) {
    // Octagon edge between vertices j-1 and j has its midpoint at angle 45 j.
    const Vector2 a = m.vertices[oct_vertex[(j + 7) % 8]];
    const Vector2 b = m.vertices[oct_vertex[j]];
    mid_vertex[j] = add(0.5 * (a + b));
  }
  const Vector2 lm[8] = {{1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.5}, {0, 0}, {0.5, 0}, {1, 0}};
  for (int j = 0; j < 8; ++j) landmark[j] = add(lm[j]);

  // Central octagon, counterclockwise.
  {
    Element el;
    for (int j = 0; j < 8; ++j) {
      // Walk vertex j and the midpoint between j and j+1 to keep shared edges
      // identical with the outer cells: octagon boundary vertices in CCW order
      // are oct_vertex[0], mid[1], oct_vertex[1], mid[2], ...
      el.edges.push_back(Edge{oct_vertex[j], mid_vertex[(j + 1) % 8], {}});
      el.edges.push_back(Edge{mid_vertex[(j + 1) % 8], oct_vertex[(j + 1) % 8], {}});
    }
    m.elements.push_back(el);
  }
  // Outer concave pentagons: mid_j -> landmark_j -> landmark_{j+1} -> mid_{j+1}
  // -> oct_vertex_j -> back, counterclockwise seen from the cell interior.
  for (int j = 0; j < 8; ++j) {
    Element el;
    const int jn = (j + 1) % 8;
    el.edges.push_back(Edge{mid_vertex[j], landmark[j], {}});
    el.edges.push_back(Edge{landmark[j], landmark[jn], {}});
    el.edges.push_back(Edge{landmark[jn], mid_vertex[jn], {}});
    el.edges.push_back(Edge{mid_vertex[jn], oct_vertex[j], {}});
    el.edges.push_back(Edge{oct_vertex[j], mid_vertex[j], {}});
    m.elements.push_back(el);
  }
  return m;
}

Mesh make_bezier4() {
  // The cubic Bezier interface from Fig-style control points splits the unit
  // square into upper and lower regions; each is split by the segment x = 0.5
  // through the curve midpoint (0.5, 0.5).
  BezierCurve curve;
  curve.control_points = {{0.0, 0.5}, {0.25, 0.25}, {0.75, 0.75}, {1.0, 0.5}};
  auto [left_half, right_half] = bezier_split(curve, 0.5);

  Mesh m;
  auto add = [&](const Vector2& p) {
    m.vertices.push_back(p);
    return int(m.vertices.size()) - 1;
  };
  const int v00 = add({0, 0}), vm0 = add({0.5, 0}), v10 = add({1, 0});
  const int vl = add({0, 0.5}), vc = add({0.5, 0.5}), vr = add({1, 0.5});
  const int v01 = add({0, 1}), vm1 = add({0.5, 1}), v11 = add({1, 1});

  const BezierCurve left_rev = bezier_reversed(left_half);
  const BezierCurve right_rev = bezier_reversed(right_half);

  {  // lower left: (0,0) -> (0.5,0) -> (0.5,0.5) -> curve back to (0,0.5) -> (0,0)
    Element el;
    el.edges = {Edge{v00, vm0, {}}, Edge{vm0, vc, {}}, Edge{vc, vl, left_rev},
                Edge{vl, v00, {}}};
    m.elements.push_back(el);
  }
  {  // lower right
    Element el;
    el.edges = {Edge{vm0, v10, {}}, Edge{v10, vr, {}}, Edge{vr, vc, right_rev},
                Edge{vc, vm0, {}}};
    m.elements.push_back(el);
  }
  {  // upper left
    Element el;
    el.edges = {Edge{vl, vc, left_half}, Edge{vc, vm1, {}}, Edge{vm1, v01, {}},
                Edge{v01, vl, {}}};
    m.elements.push_back(el);
  }
  {  // upper right
    Element el;
    el.edges = {Edge{vc, vr, right_half}, Edge{vr, v11, {}}, Edge{v11, vm1, {}},
                Edge{vm1, vc, {}}};
    m.elements.push_back(el);
  }
  return m;
}

}  // namespace

Mesh builtin_mesh(const std::string& name) {
  Mesh m;
  if (name == "quad")
    m = make_quad();
  else if (name == "voronoi5")
    m = make_voronoi5();
  else if (name == "octagon")
    m = make_octagon();
  else if (name == "bezier4")
    m = make_bezier4();
  else
    throw std::invalid_argument("unknown builtin mesh: " + name);
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// Mesh file format  (version "vem-mesh-1")
// ---------------------------------------------------------------------------

std::string mesh_to_json(const Mesh& mesh) {
  nlohmann::json j;
  j["version"] = "vem-mesh-1";
  auto& jv = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) jv.push_back({v.x(), v.y()});
  auto& je = j["elements"] = nlohmann::json::array();
  for (const auto& el : mesh.elements) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : el.edges) {
      nlohmann::json ej;
      ej["v"] = {e.v0, e.v1};
      if (e.curved()) {
        nlohmann::json cps = nlohmann::json::array();
        for (const auto& p : e.curve->control_points) cps.push_back({p.x(), p.y()});
        ej["bezier"] = cps;
      }
      edges.push_back(ej);
    }
    je.push_back({{"edges", edges}});
  }
  return j.dump(2);
}

Mesh mesh_from_json(const std::string& text, ValidationReport* report) {
  ValidationReport local;
  ValidationReport& rep = report ? *report : local;
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"] != "vem-mesh-1")
    throw std::runtime_error("mesh file: missing or unsupported version field");
  Mesh m;
  for (const auto& v : j.at("vertices"))
    m.vertices.push_back(Vector2(v.at(0).get<double>(), v.at(1).get<double>()));

  // Duplicate-vertex merge at 1e-14 of the bounding-box diagonal.
  Vector2 lo = m.vertices.empty() ? Vector2::Zero() : m.vertices[0], hi = lo;
  for (const auto& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double merge_tol = 1e-14 * (hi - lo).norm();
  std::vector<int> remap(m.vertices.size());
  std::vector<Vector2> merged;
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    int found = -1;
    for (size_t k = 0; k < merged.size(); ++k)
      if ((merged[k] - m.vertices[i]).norm() <= merge_tol) {
        found = int(k);
        break;
      }
    if (found < 0) {
      merged.push_back(m.vertices[i]);
      found = int(merged.size()) - 1;
    } else {
      rep.issues.push_back({-1, false, "duplicate vertex " + std::to_string(i) +
                                           " merged into " + std::to_string(found)});
    }
    remap[i] = found;
  }
  m.vertices = merged;

  for (const auto& jel : j.at("elements")) {
    Element el;
    for (const auto& jeg : jel.at("edges")) {
      Edge e;
      e.v0 = remap.at(jeg.at("v").at(0).get<int>());
      e.v1 = remap.at(jeg.at("v").at(1).get<int>());
      if (jeg.contains("bezier")) {
        BezierCurve c;
        for (const auto& p : jeg["bezier"])
          c.control_points.push_back(Vector2(p.at(0).get<double>(), p.at(1).get<double>()));
        if (c.control_points.size() < 2)
          throw std::runtime_error("bezier edge needs at least two control points");
        e.curve = c;
      }
      el.edges.push_back(e);
    }
    m.elements.push_back(el);
  }
  m.finalize();
  ValidationReport check = validate_mesh(m);
  rep.issues.insert(rep.issues.end(), check.issues.begin(), check.issues.end());
  if (!rep.ok()) {
    std::ostringstream os;
    os << "mesh validation failed:";
    for (const auto& i : rep.issues)
      if (i.fatal) os << " [element " << i.element << "] " << i.message << ";";
    throw std::runtime_error(os.str());
  }
  return m;
}

Mesh load_mesh(const std::string& path, ValidationReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str(), report);
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  out << mesh_to_json(mesh) << "\n";
}

}  // namespace vem
