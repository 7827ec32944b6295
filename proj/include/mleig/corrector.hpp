// SPDX-License-Identifier: Apache-2.0
//
// The correction scheme itself: one correction step (concurrent subdomain
// residual solves, a strip solve that glues the local candidates into one
// conforming function, and a small augmented eigenproblem over the coarse
// space plus the glued candidates), iterated over a nested mesh hierarchy.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mleig/decomp.hpp"
#include "mleig/fespace.hpp"
#include "mleig/mesh.hpp"
#include "mleig/sparse.hpp"

namespace mleig {

struct RunConfig {
  DomainRect domain{-1.0, 1.0, -1.0, 1.0};
  double H = 0.25;        // coarse mesh size
  double delta = 0.1;     // requested overlap width (rounded up to the coarse lattice)
  int m = 4;              // subdomain count (perfect square)
  int n_levels = 5;       // refinement levels h_1..h_n
  int degree = 1;         // element degree, 1 or 2
  int nev = 5;            // tracked eigenpairs
  std::string example = "laplace";  // coefficient field id: "laplace" | "variable"
  double cg_tol = 1e-10;
  int workers = 1;
  bool deterministic = true;  // zero the timing columns in reports
};

void validate_config(const RunConfig& config);
CoefficientField field_for_example(const std::string& example);

// Restricted SPD system of one region: dof set, global->local map and the
// extracted stiffness block.
struct RegionSystem {
  std::vector<int> dofs;
  std::vector<int> local_of;  // size ndofs, -1 outside the region
  SparseSymMatrix a_sub;
};

// Mesh, space, assembled operators and cached region systems of one level.
struct LevelSystem {
  std::shared_ptr<const Mesh> mesh;
  FeSpace space;
  SparseSymMatrix stiffness;
  SparseSymMatrix mass;
  SparseMatrix prolongation;  // from the previous level; empty at level 0

  std::vector<RegionSystem> subdomain_systems;  // interior dofs of Omega_j
  RegionSystem strip_system;                    // interior dofs of the strip
  std::vector<std::vector<int>> glue_dofs;      // dofs of the closed G_j, per j
  bool systems_ready = false;

  void build_region_systems(const Partition& partition);
};

// Owns the coarse level, the partition and every refinement built so far.
class Hierarchy {
 public:
  explicit Hierarchy(const RunConfig& config);

  const RunConfig& config() const { return config_; }
  const CoefficientField& field() const { return field_; }
  const Partition& partition() const { return partition_; }
  Partition& partition() { return partition_; }
  int max_level() const { return static_cast<int>(levels_.size()) - 1; }

  void extend_to(int level);
  LevelSystem& level(int k);
  const LevelSystem& level(int k) const;

  Vector prolong(const Vector& full, int from_level, int to_level) const;
  Vector restrict_transpose(const Vector& full, int from_level, int to_level) const;

  // Dense interior blocks of the coarse space, cached for the augmented
  // eigenproblem.
  const Eigen::MatrixXd& coarse_stiffness_dense();
  const Eigen::MatrixXd& coarse_mass_dense();
  const Eigen::LLT<Eigen::MatrixXd>& coarse_mass_llt();

 private:
  RunConfig config_;
  CoefficientField field_;
  std::vector<std::unique_ptr<LevelSystem>> levels_;
  Partition partition_;
  Eigen::MatrixXd coarse_a_, coarse_b_;
  Eigen::LLT<Eigen::MatrixXd> coarse_b_llt_;
  bool coarse_dense_ready_ = false;
  void ensure_coarse_dense();
};

struct StepTimings {
  double local_seconds = 0.0;
  double iface_seconds = 0.0;
  double aug_seconds = 0.0;
};

struct CorrectionState {
  int level = 0;
  std::vector<EigenPair> pairs;   // ascending
  bool matched_previous = true;   // diagnostic of the last correction step
};

// Step 1 of the correction: solve the residual problem
// a(e, v) = lambda b(u, v) - a(u, v) on the zero-trace space of Omega_j.
// `u_full` must already live on the fine level. Returns e extended by zero.
Vector local_bvp_solve(const LevelSystem& fine, int j, double lambda, const Vector& u_full,
                       double cg_tol, SolveReport* report = nullptr);

// Step 2: glue the subdomain candidates u + e_j on the closed G_j and solve
// the strip problem a(t, v) = lambda b(u, v) with Dirichlet data from the
// glued candidates on the inner-region boundaries. Returns the glued vector.
Vector interface_solve(const LevelSystem& fine, const Partition& partition, double lambda,
                       const Vector& u_full, const std::vector<Vector>& corrections,
                       double cg_tol, SolveReport* report = nullptr);

// Step 3: eigenproblem on the coarse space augmented with the glued
// candidates; eigenvectors come back expanded to the fine level,
// b-normalized and sign-fixed, ascending. A candidate that is numerically
// dependent on the coarse space (B-orthogonalized residual below 1e-10) is
// dropped before the solve.
std::vector<EigenPair> augmented_eigensolve(Hierarchy& hierarchy, int fine_level,
                                            const std::vector<Vector>& glued, int nev);

// One full correction step from state.level to to_level (= state.level + 1;
// equal levels are accepted so exact fine-level pairs can be passed through,
// which must reproduce them). Subdomain solves run as independent tasks on
// config().workers threads; results are bitwise independent of the worker
// count because every task writes only its own buffer.
CorrectionState one_correction_step(Hierarchy& hierarchy, const CorrectionState& state,
                                    int to_level, StepTimings* timings = nullptr);

struct ExactFunctionRef {
  int index = 0;
  ExactFunction fn;
};

struct ReferenceSet {
  std::vector<double> lambdas;               // per eigen index, may exceed nev
  std::map<int, ExactFunction> eigenfunctions;  // index -> closed form
};

struct LevelTrace {
  int level = 0;
  double h = 0.0;
  int interior_dofs = 0;
  std::vector<double> lambdas;
  std::vector<double> eig_errors;  // NaN without a reference
  std::vector<double> h1_errors;   // NaN where not computed
  StepTimings timings;             // zeros at level 1 (direct solve)
  bool matched_previous = true;
  std::vector<EigenPair> pairs;
};

struct MultilevelResult {
  std::vector<LevelTrace> levels;
};

// The full scheme: direct dense eigensolve on level 1, then one correction
// step per refinement up to n_levels. Errors are filled when a reference is
// given.
MultilevelResult multilevel_correction(Hierarchy& hierarchy,
                                       const ReferenceSet* refs = nullptr);

}  // namespace mleig
