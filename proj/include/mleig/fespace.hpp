// SPDX-License-Identifier: Apache-2.0
//
// Lagrange P1/P2 spaces on a triangulation: dof numbering, assembly of the
// stiffness form (A grad u, grad v) and the weighted mass form (phi u, v),
// prolongation between nested levels, Rayleigh quotients and error norms.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mleig/mesh.hpp"
#include "mleig/sparse.hpp"

namespace mleig {

// Symmetric triangle quadrature rule in barycentric coordinates; weights sum
// to one and are scaled by the element area at assembly time.
struct QuadRule {
  int degree = 0;  // exact for polynomials up to this total degree
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

const QuadRule& quad_degree2();
const QuadRule& quad_degree6();
// Tensor Gauss rule mapped to the triangle (Duffy transform); n points per
// axis, polynomial-exact to degree 2n-2 at least. Used for error integration
// and quadrature-consistency checks.
QuadRule quad_gauss_duffy(int n);

// Matrix-valued diffusion coefficient and scalar mass weight, evaluable at
// arbitrary points. `diffusion` returns (a11, a12, a22) of the symmetric
// 2x2 matrix; `weight` must be positive.
struct CoefficientField {
  std::string name;
  bool constant_coeffs = false;
  std::function<std::array<double, 3>(double, double)> diffusion;
  std::function<double(double, double)> weight;

  static CoefficientField laplace();   // A = I, phi = 1
  static CoefficientField variable();  // A = [[e^{1+x^2}, e^{xy}], [e^{xy}, e^{1+y^2}]],
                                       // phi = (1+x^2)(1+y^2)
};

// Lagrange space of degree k in {1,2}. Dofs are numbered lexicographically by
// (y, x); dof lattice coordinates are in half-units of the mesh cell size, so
// vertex dofs sit at even coordinates and edge dofs at odd ones.
struct FeSpace {
  std::shared_ptr<const Mesh> mesh;
  int degree = 1;
  int ndofs = 0;
  std::vector<Point> dof_coords;
  std::vector<std::array<int, 2>> dof_lattice;
  std::vector<int> boundary_dofs;  // ascending
  std::vector<int> interior_dofs;  // ascending
  std::vector<int> interior_index;  // dof -> position in interior_dofs, or -1
  std::vector<std::array<int, 6>> connectivity;  // per element; last 3 unused for P1

  int dofs_per_elem() const { return degree == 1 ? 3 : 6; }
  int level() const { return mesh->level; }
};

FeSpace build_space(std::shared_ptr<const Mesh> mesh, int degree);

enum class FormKind { Stiffness, Mass };

// Assembles the full-space (boundary included) symmetric form. The default
// rule is degree-2 for P1 with constant coefficients and degree-6 otherwise;
// `elems` restricts assembly to an element subset (empty = all).
SparseSymMatrix assemble_form(const FeSpace& space, const CoefficientField& field, FormKind kind,
                              const QuadRule* rule = nullptr, std::span<const int> elems = {});

inline SparseSymMatrix assemble_stiffness(const FeSpace& space, const CoefficientField& field,
                                          const QuadRule* rule = nullptr) {
  return assemble_form(space, field, FormKind::Stiffness, rule);
}
inline SparseSymMatrix assemble_mass(const FeSpace& space, const CoefficientField& field,
                                     const QuadRule* rule = nullptr) {
  return assemble_form(space, field, FormKind::Mass, rule);
}

// Single element matrix (dofs_per_elem square), mainly for tests.
Eigen::MatrixXd element_matrix(const FeSpace& space, const CoefficientField& field, FormKind kind,
                               int elem, const QuadRule* rule = nullptr);

// Nodal interpolation operator from a space to the next refinement of the
// same degree, as a full-space sparse matrix. Exact for nested Lagrange
// spaces.
SparseMatrix prolongation_matrix(const FeSpace& from, const FeSpace& to);

Vector prolongate(const Vector& coeffs_full, const FeSpace& from, const FeSpace& to);

Vector expand_interior(const FeSpace& space, const Vector& interior_coeffs);
Vector restrict_interior(const FeSpace& space, const Vector& full_coeffs);

// psi'A psi / psi'B psi; rejects psi = 0.
double rayleigh_quotient(const Vector& psi, const SparseSymMatrix& a, const SparseSymMatrix& b);

struct ExactFunction {
  std::function<double(double, double)> value;
  std::function<std::array<double, 2>(double, double)> gradient;
};

struct ErrorReport {
  double h1_err = 0.0;
  double l2_err = 0.0;
  double eig_err = 0.0;
};

// Errors of a discrete eigenpair against a reference eigenvalue and (when
// available) a closed-form eigenfunction. The discrete sign is aligned to
// maximize the weighted b-inner product with the reference before the norms
// are taken.
ErrorReport compute_errors(const FeSpace& space, const CoefficientField& field,
                           const Vector& coeffs_full, double lambda_h, double lambda_ref,
                           const ExactFunction* reference);

// Galerkin projection of a fine-space function onto `coarse` w.r.t. the
// stiffness form; `p` is the coarse->fine prolongation. Test oracle only.
Vector galerkin_project(const Vector& u_fine_full, const FeSpace& coarse,
                        const SparseSymMatrix& a_coarse, const SparseSymMatrix& a_fine,
                        const SparseMatrix& p);

inline std::vector<EigenPair> coarse_eigensolve(const FeSpace& space, const SparseSymMatrix& a,
                                                const SparseSymMatrix& b, int nev,
                                                int dense_limit = 5000) {
  return solve_interior_eigenproblem(space.interior_dofs, a, b, nev, space.level(), dense_limit);
}

}  // namespace mleig
