#include "polyvem/dofs.hpp"

#include <stdexcept>

namespace vem {

Problem parse_problem(const std::string& name) {
  if (name == "laplace") return Problem::Laplace;
  if (name == "elasticity") return Problem::Elasticity;
  if (name == "stokes") return Problem::Stokes;
  throw std::invalid_argument("unknown problem: " + name);
}

std::string problem_name(Problem p) {
  switch (p) {
    case Problem::Laplace: return "laplace";
    case Problem::Elasticity: return "elasticity";
    case Problem::Stokes: return "stokes";
  }
  return "?";
}

int FormulationSpec::stab_kind() const {
  switch (form) {
    case Formulation::S1: return 1;
    case Formulation::S2: return 2;
    case Formulation::S3: return 3;
    case Formulation::S4: return 4;
    case Formulation::S5: return 5;
    case Formulation::StdPiNabla:
    case Formulation::StdPiZeroGrad: return 3;
    default: return 0;
  }
}

std::string FormulationSpec::name() const {
  static const char* names[] = {"S1", "S2", "S3", "S4", "S5", "V1", "V2",
                                "V3", "V4", "V5", "V6", "STD-PiNabla", "STD-PiZeroGrad"};
  std::string base = names[static_cast<int>(form)];
  if (vc && form != Formulation::StdPiNabla && form != Formulation::StdPiZeroGrad)
    return "VC-" + base;
  return base;
}

FormulationSpec FormulationSpec::parse(const std::string& token) {
  FormulationSpec s;
  std::string t = token;
  if (t.rfind("VC-", 0) == 0) {
    s.vc = true;
    t = t.substr(3);
  }
  static const char* names[] = {"S1", "S2", "S3", "S4", "S5", "V1", "V2",
                                "V3", "V4", "V5", "V6", "STD-PiNabla", "STD-PiZeroGrad"};
  for (int i = 0; i < 13; ++i)
    if (t == names[i]) {
      s.form = static_cast<Formulation>(i);
      if (s.vc && (s.form == Formulation::V2 || s.form == Formulation::V5))
        throw std::invalid_argument("VC-VEM does not apply to V2/V5");
      return s;
    }
  throw std::invalid_argument("unknown formulation: " + token);
}

SpaceKind space_kind(Problem problem, Formulation form) {
  switch (form) {
    case Formulation::V1:
    case Formulation::V4:
      return SpaceKind::Enlarged;
    case Formulation::V2:
    case Formulation::V5:
      return SpaceKind::Augmented;
    case Formulation::V3:
    case Formulation::V6:
      // The scalar (and componentwise Stokes) projections only need standard
      // moments; the elasticity eps-perp block needs the enlarged moments.
      return problem == Problem::Elasticity ? SpaceKind::Enlarged : SpaceKind::Standard;
    default:
      return SpaceKind::Standard;
  }
}

std::vector<int> LocalLayout::edge_nodal_dofs(int comp, int e) const {
  std::vector<int> dofs;
  dofs.reserve(k + 1);
  dofs.push_back(vertex_dof(comp, e));
  for (int i = 0; i < k - 1; ++i) dofs.push_back(edge_dof(comp, e, i));
  dofs.push_back(vertex_dof(comp, (e + 1) % nv));
  return dofs;
}

std::vector<int> LocalLayout::boundary_dofs() const {
  std::vector<int> dofs;
  for (int c = 0; c < ncomp; ++c)
    for (int v = 0; v < nv; ++v) dofs.push_back(vertex_dof(c, v));
  for (int c = 0; c < ncomp; ++c)
    for (int e = 0; e < nv; ++e)
      for (int i = 0; i < k - 1; ++i) dofs.push_back(edge_dof(c, e, i));
  return dofs;
}

LocalLayout local_layout(Problem problem, Formulation form, int k, int l, int nv) {
  if (k < 1) throw std::invalid_argument("local_layout: k >= 1 required");
  if (problem == Problem::Stokes && k < 2)
    throw std::invalid_argument("the divergence-free Stokes element requires k >= 2");
  LocalLayout lay;
  lay.problem = problem;
  lay.kind = space_kind(problem, form);
  lay.k = k;
  lay.l = lay.kind == SpaceKind::Augmented ? l : 0;
  lay.nv = nv;
  lay.ncomp = problem == Problem::Laplace ? 1 : 2;
  lay.n_edge_nodes = nv * (k - 1);
  if (problem == Problem::Stokes) {
    lay.n_mom = 0;
    const int n_km2 = poly_dim(k - 2);
    lay.n_perp = 2 * n_km2 - (poly_dim(k - 1) - 1);
    lay.n_div = poly_dim(k - 1) - 1;
    lay.n_extra =
        lay.kind == SpaceKind::Augmented ? poly_dim(k + lay.l - 2) - n_km2 : 0;
    lay.total = lay.ncomp * (lay.nv + lay.n_edge_nodes) + lay.n_perp + lay.n_div +
                lay.ncomp * lay.n_extra;
  } else {
    lay.n_mom = lay.kind == SpaceKind::Augmented ? poly_dim(k + lay.l - 2)
                                                 : poly_dim(k - 2);
    lay.total = lay.ncomp * (lay.nv + lay.n_edge_nodes + lay.n_mom);
  }
  return lay;
}

DofMap build_dofmap(const Mesh& mesh, Problem problem, Formulation form, int k,
                    const std::vector<int>& l_per_element) {
  DofMap dm;
  dm.problem = problem;
  dm.k = k;
  const int ncomp = problem == Problem::Laplace ? 1 : 2;
  const int n_vert = static_cast<int>(mesh.vertices.size());
  const int n_edges = static_cast<int>(mesh.edge_list.size());
  const int nodal_scalar = n_vert + n_edges * (k - 1);

  dm.layouts.reserve(mesh.elements.size());
  for (size_t e = 0; e < mesh.elements.size(); ++e)
    dm.layouts.push_back(local_layout(problem, form, k,
                                      l_per_element.empty() ? 0 : l_per_element[e],
                                      mesh.elements[e].num_vertices()));

  int next_internal = ncomp * nodal_scalar;
  dm.local_to_global.resize(mesh.elements.size());
  dm.pressure_to_global.resize(mesh.elements.size());
  for (size_t ei = 0; ei < mesh.elements.size(); ++ei) {
    const Element& el = mesh.elements[ei];
    const LocalLayout& lay = dm.layouts[ei];
    std::vector<int> l2g(lay.total, -1);
    for (int c = 0; c < ncomp; ++c) {
      for (int v = 0; v < lay.nv; ++v)
        l2g[lay.vertex_dof(c, v)] = c * nodal_scalar + el.edges[v].v0;
      for (int e = 0; e < lay.nv; ++e) {
        const int edge_id = mesh.element_edge_ids[ei][e];
        const bool canonical = el.edges[e].v0 == mesh.edge_list[edge_id][0];
        for (int i = 0; i < k - 1; ++i) {
          const int slot = canonical ? i : (k - 2 - i);
          l2g[lay.edge_dof(c, e, i)] =
              c * nodal_scalar + n_vert + edge_id * (k - 1) + slot;
        }
      }
    }
    const int n_internal = lay.total - ncomp * lay.nodal_per_comp();
    for (int m = 0; m < n_internal; ++m)
      l2g[ncomp * lay.nodal_per_comp() + m] = next_internal + m;
    next_internal += n_internal;
    dm.local_to_global[ei] = std::move(l2g);
  }
  dm.n_total = next_internal;

  if (problem == Problem::Stokes) {
    const int np = poly_dim(k - 1);
    for (size_t ei = 0; ei < mesh.elements.size(); ++ei) {
      std::vector<int> p2g(np);
      for (int m = 0; m < np; ++m) p2g[m] = dm.n_total + int(ei) * np + m;
      dm.pressure_to_global[ei] = std::move(p2g);
    }
    dm.n_pressure = int(mesh.elements.size()) * np;
  }

  dm.is_boundary.assign(dm.n_total, false);
  for (int c = 0; c < ncomp; ++c) {
    for (int v = 0; v < n_vert; ++v)
      if (mesh.boundary_vertex[v]) dm.is_boundary[c * nodal_scalar + v] = true;
    for (int e = 0; e < n_edges; ++e)
      if (mesh.boundary_edge[e])
        for (int i = 0; i < k - 1; ++i)
          dm.is_boundary[c * nodal_scalar + n_vert + e * (k - 1) + i] = true;
  }
  return dm;
}

}  // namespace vem
