// SPDX-License-Identifier: Apache-2.0
//
// Linear-algebra kernels: symmetric CSR storage, preconditioned conjugate
// gradients for the SPD subdomain/interface systems, and a dense symmetric
// generalized eigensolver for the coarse and augmented eigenproblems.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mleig/errors.hpp"

namespace mleig {

using Vector = Eigen::VectorXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Compressed-row symmetric sparse matrix. Built from upper-triangle triplets
// which are accumulated in a fixed order and mirrored, so (i,j) and (j,i)
// hold bitwise-identical values.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  // `upper` must only contain entries with row <= col; duplicates are summed.
  static SparseSymMatrix from_upper_triplets(int n, std::vector<Triplet> upper);

  int rows() const { return n_; }
  std::int64_t nonzeros() const { return static_cast<std::int64_t>(values_.size()); }

  // Entry accessor; returns 0 for positions outside the sparsity pattern.
  double coeff(int row, int col) const;

  void multiply(const Vector& x, Vector& y) const;
  Vector apply(const Vector& x) const;
  Vector diagonal() const;

  std::span<const int> row_cols(int row) const;
  std::span<const double> row_values(int row) const;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_ = {0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

// General CSR matrix; used for the prolongation operators between nested
// finite element spaces.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 && cols_ == 0; }

  void multiply(const Vector& x, Vector& y) const;
  Vector apply(const Vector& x) const;
  void multiply_transpose(const Vector& x, Vector& y) const;
  Vector apply_transpose(const Vector& x) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_ = {0};
  std::vector<int> cols_idx_;
  std::vector<double> values_;
};

// Restriction of a symmetric matrix to the given (ascending) dof subset.
SparseSymMatrix extract_submatrix(const SparseSymMatrix& a, std::span<const int> dofs);

Eigen::MatrixXd to_dense(const SparseSymMatrix& a);

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // ||b - Ax||_2 / ||b||_2
  bool converged = false;
};

struct Preconditioner {
  virtual ~Preconditioner() = default;
  virtual void apply(const Vector& r, Vector& z) const = 0;
};

// Diagonal (Jacobi) preconditioner, the cg_solve default. The abstract base
// is the hook for plugging in a hierarchical preconditioner later.
class JacobiPreconditioner : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const SparseSymMatrix& m);
  void apply(const Vector& r, Vector& z) const override;

 private:
  Vector inv_diag_;
};

// Preconditioned CG on an SPD system. maxit <= 0 selects 10*dim; prec ==
// nullptr selects Jacobi. Convergence is relative to ||rhs|| and confirmed
// against the true residual before reporting success. Throws SolverError if
// an indefinite direction (p'Mp <= 0) is encountered; non-convergence within
// maxit is reported through SolveReport, not thrown.
std::pair<Vector, SolveReport> cg_solve(const SparseSymMatrix& m, const Vector& rhs,
                                        double tol = 1e-10, int maxit = 0,
                                        const Preconditioner* prec = nullptr);

struct DensePair {
  double lambda = 0.0;
  Vector vec;
};

// The nev smallest eigenpairs of A x = lambda B x for dense symmetric A and
// SPD B, via Cholesky reduction to a standard symmetric problem. Eigenvectors
// are B-orthonormal, sign-fixed (largest-magnitude entry positive), ascending;
// ties are ordered by the first differing coefficient. Throws SolverError if
// B is not SPD.
std::vector<DensePair> dense_gen_eigensolve(const Eigen::MatrixXd& ad,
                                            const Eigen::MatrixXd& bd, int nev);

// Eigenpair with coefficients over the interior dofs of the owning space,
// b-normalized (coeffs' B coeffs = 1).
struct EigenPair {
  double lambda = 0.0;
  Vector coeffs;
  int level = 0;
};

// Dense generalized eigensolve of the full-space pair (a,b) restricted to
// `interior_dofs`. Guarded by `dense_limit` on the interior dimension.
std::vector<EigenPair> solve_interior_eigenproblem(std::span<const int> interior_dofs,
                                                   const SparseSymMatrix& a_full,
                                                   const SparseSymMatrix& b_full, int nev,
                                                   int level, int dense_limit = 5000);

// Flips v so that its largest-magnitude entry (first such entry on ties) is
// positive.
void fix_sign(Vector& v);

}  // namespace mleig
