#pragma once

#include <map>
#include <memory>
#include <string>

#include "polyvem/coefficients.hpp"
#include "polyvem/dofs.hpp"
#include "polyvem/polynomials.hpp"
#include "polyvem/quadrature.hpp"

namespace vem {

struct QuadConfig {
  int poly_surplus = 2;  // consistency integrands: exactness 2(k+l) + poly_surplus
  int vc_surplus = 8;    // variable-coefficient integrands: 2(k+l) + vc_surplus
};

// Dense matrices realizing one projector on one element. Function-valued
// projectors map local dofs to coefficients over the orthonormal basis
// (component-blocked for vector problems): pi_dof = D * pi_star. Gradient and
// strain valued projectors map to coefficients over the target basis stored in
// `target` (per-component coefficient stacks of length target_n, target_ncomp
// components); D and pi_dof stay empty for those. G is the pure pairing Gram
// and B the pure right-hand side: G * pi_star = B up to roundoff.
struct ProjectorSet {
  Matrix D;
  Matrix G;
  Matrix B;
  Matrix pi_star;
  Matrix pi_dof;
  Matrix target;       // (target_ncomp * target_n) x n_targets, gradient/strain type
  int target_ncomp = 0;
  int target_n = 0;
  int k_star = 0;
  std::string tag;
};

struct ProblemCoefficients {
  const Coefficient2x2* a = nullptr;         // Laplace diffusion; nullptr = identity
  const ElasticityCoefficient* c = nullptr;  // plane-stress law
  double viscosity = 1.0;                    // Stokes
};

// Per-element workspace: orthonormal basis, moment operators, edge trace
// machinery, and every projector the formulation needs. The basis degree is
// k for stabilized formulations and k + l for self-stabilized ones.
class ElementOps {
 public:
  ElementOps(const Mesh& mesh, int element, Problem problem, FormulationSpec spec, int k,
             int l = 0, ProblemCoefficients coeffs = {}, QuadConfig quad = {});

  const Mesh& mesh() const { return *mesh_; }
  int element() const { return element_; }
  Problem problem() const { return problem_; }
  const FormulationSpec& spec() const { return spec_; }
  int k() const { return k_; }
  int l() const { return l_; }
  const Element& elem() const { return mesh_->elements[element_]; }
  const LocalLayout& layout() const { return layout_; }
  const OrthoBasis& basis() const { return basis_; }
  int ndof() const { return layout_.total; }
  double area() const { return elem().area; }
  double diameter() const { return elem().diameter; }
  int nv() const { return elem().num_vertices(); }
  const ProblemCoefficients& coeffs() const { return coeffs_; }
  const QuadConfig& quad_config() const { return quad_; }

  const QuadRule2D& area_rule(int exactness) const;
  const EdgeQuad& edge_quad(int e, int param_exactness) const;

  // Gauss-Lobatto trace nodes (k+1 of them on [0,1]) and the Lagrange basis.
  const Vector& edge_node_params() const { return node_params_; }
  Matrix edge_trace_lagrange(const Vector& t) const;

  // dof-of-polynomial matrix: ndof x m (scalar) or ndof x 2m component-blocked.
  Matrix dof_matrix(int target_degree) const;

  // Rows (v_c, q_beta) for beta < dim(target_degree) as functionals on the
  // local dofs; enhanced/enlarged rows resolved per the space kind.
  const Matrix& moment_matrix(int comp, int target_degree) const;

  // Standard function-valued projector at degree k: scalar elliptic (Laplace),
  // energy projector with rigid-body conditions and the element-constant or
  // averaged law (elasticity), vector elliptic (Stokes).
  const ProjectorSet& primary_projector() const;

  // L2 projector coefficients up to target_degree <= k, component-blocked.
  Matrix pi0_star(int target_degree) const;
  // L2 projection of one component's gradient onto [P_deg]^2 (x and y rows).
  std::array<Matrix, 2> pi0_grad_star(int comp, int target_degree) const;

  ProjectorSet elliptic_projector() const;          // scalar Pi-nabla at k
  ProjectorSet l2_projector() const;                // Pi0_k
  ProjectorSet selfstab_projector(int comp = 0) const;  // V1..V6 (Stokes: per comp)
  ProjectorSet elasticity_projector() const;        // Pi-e / Pi-e-C per spec
  ProjectorSet vc_projector() const;                // Pi^{nabla,A} at degree k
  ProjectorSet stokes_velocity_projector() const;   // vector Pi-nabla
  Matrix stokes_divergence_matrix() const;          // dim P_{k-1} x ndof

  // Consistency (projected-energy) block of the local stiffness for this
  // element's formulation, self-stabilized and VC variants included.
  Matrix consistency_matrix() const;

  Matrix boundary_mass() const;     // nodal-trace mass (S4)
  Matrix rigid_body_dofs() const;   // dofs of (1,0), (0,1), (-y,x)
  Matrix3 element_constant_law() const;  // constant C or its quadrature average

  static int initial_augmentation(Problem problem, Formulation form, int k, int nv);

 private:
  const Matrix& stokes_gperp() const;
  const Matrix& stokes_decomposed_moments() const;
  void elasticity_energy(int target_degree, bool variable, Matrix& G, Matrix& B,
                         Matrix& pi) const;
  ProjectorSet vc_elliptic(int target_degree) const;

  const Mesh* mesh_;
  int element_;
  Problem problem_;
  FormulationSpec spec_;
  int k_, l_;
  ProblemCoefficients coeffs_;
  QuadConfig quad_;
  LocalLayout layout_;
  OrthoBasis basis_;
  Vector node_params_;
  mutable std::map<int, QuadRule2D> area_rules_;
  mutable std::map<std::pair<int, int>, EdgeQuad> edge_quads_;
  mutable std::map<std::pair<int, int>, Matrix> moment_cache_;
  mutable std::unique_ptr<ProjectorSet> primary_;
  mutable std::unique_ptr<Matrix> gperp_;

  friend struct ElementOpsDetail;
};

}  // namespace vem
