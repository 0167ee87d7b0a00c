#pragma once

#include <string>
#include <vector>

#include "polyvem/geometry.hpp"
#include "polyvem/types.hpp"

namespace vem {

enum class Problem { Laplace, Elasticity, Stokes };

Problem parse_problem(const std::string& name);
std::string problem_name(Problem p);

// S1..S5: stabilized; V1..V6: self-stabilized; the two Std* entries are the
// standard variable-coefficient baselines (projector computed without the
// coefficient, paired with it afterwards) stabilized by S3.
enum class Formulation {
  S1, S2, S3, S4, S5,
  V1, V2, V3, V4, V5, V6,
  StdPiNabla, StdPiZeroGrad,
};

struct FormulationSpec {
  Formulation form = Formulation::S1;
  bool vc = false;  // coefficient-aware projectors (VC-VEM)

  bool self_stabilized() const {
    return form >= Formulation::V1 && form <= Formulation::V6;
  }
  bool stabilized() const { return !self_stabilized(); }
  int stab_kind() const;  // 1..5 for S1..S5; 3 for the Std* baselines
  std::string name() const;
  static FormulationSpec parse(const std::string& token);
};

enum class SpaceKind { Standard, Enlarged, Augmented };

SpaceKind space_kind(Problem problem, Formulation form);

// Per-element dof layout. Vector problems are component-blocked per group:
// [vertex x | vertex y | edge x | edge y | moments x | moments y]; the Stokes
// velocity replaces the component moments by G-perp moments, divergence
// moments and (augmented spaces) extra component moments.
struct LocalLayout {
  Problem problem = Problem::Laplace;
  SpaceKind kind = SpaceKind::Standard;
  int k = 1, l = 0;
  int nv = 0;     // vertices == edges
  int ncomp = 1;  // 1 scalar, 2 vector

  int n_edge_nodes = 0;  // per component: nv * (k-1)
  int n_mom = 0;         // scalar/elasticity moments per component
  int n_perp = 0;        // stokes G-perp moments
  int n_div = 0;         // stokes divergence moments (degree 1..k-1)
  int n_extra = 0;       // stokes augmented component moments, per component
  int total = 0;

  int nodal_per_comp() const { return nv + n_edge_nodes; }
  int vertex_dof(int comp, int v) const { return comp * nv + v; }
  int edge_dof(int comp, int e, int i) const {
    return ncomp * nv + comp * n_edge_nodes + e * (k - 1) + i;
  }
  int moment_dof(int comp, int m) const {
    return ncomp * (nv + n_edge_nodes) + comp * n_mom + m;
  }
  int perp_dof(int m) const { return ncomp * (nv + n_edge_nodes) + m; }
  int div_dof(int m) const { return ncomp * (nv + n_edge_nodes) + n_perp + m; }
  int extra_dof(int comp, int m) const {
    return ncomp * (nv + n_edge_nodes) + n_perp + n_div + comp * n_extra + m;
  }
  // The k+1 dofs of component `comp` along edge e, in traversal order.
  std::vector<int> edge_nodal_dofs(int comp, int e) const;
  std::vector<int> boundary_dofs() const;  // all nodal dofs, all components
};

LocalLayout local_layout(Problem problem, Formulation form, int k, int l, int nv);

struct DofMap {
  Problem problem = Problem::Laplace;
  int k = 1;
  int n_total = 0;     // scalar/velocity dofs
  int n_pressure = 0;  // stokes
  std::vector<LocalLayout> layouts;                // per element
  std::vector<std::vector<int>> local_to_global;   // per element, velocity/scalar part
  std::vector<std::vector<int>> pressure_to_global;
  std::vector<bool> is_boundary;                   // per global scalar/velocity dof

  int n_system() const { return n_total + n_pressure; }
};

DofMap build_dofmap(const Mesh& mesh, Problem problem, Formulation form, int k,
                    const std::vector<int>& l_per_element);

}  // namespace vem
