// SPDX-License-Identifier: Apache-2.0

#include "mleig/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mleig {

namespace {

// Stable (row, col) sort so duplicate entries are accumulated in insertion
// order; keeps assembly bit-reproducible.
void sort_entries(std::vector<Triplet>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_upper_triplets(int n, std::vector<Triplet> upper) {
  if (n < 0) throw ConfigError("matrix dimension must be nonnegative");
  for (const Triplet& t : upper) {
    if (t.row < 0 || t.col >= n || t.row > t.col)
      throw ConfigError("upper triplet outside the upper triangle");
  }
  sort_entries(upper);

  // Accumulate duplicates, then mirror below the diagonal.
  std::vector<Triplet> full;
  full.reserve(2 * upper.size());
  std::size_t i = 0;
  while (i < upper.size()) {
    const int r = upper[i].row;
    const int c = upper[i].col;
    double v = 0.0;
    while (i < upper.size() && upper[i].row == r && upper[i].col == c) {
      v += upper[i].value;
      ++i;
    }
    full.push_back({r, c, v});
    if (r != c) full.push_back({c, r, v});
  }
  sort_entries(full);

  SparseSymMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  m.cols_.resize(full.size());
  m.values_.resize(full.size());
  for (std::size_t k = 0; k < full.size(); ++k) {
    m.row_ptr_[static_cast<std::size_t>(full[k].row) + 1]++;
    m.cols_[k] = full[k].col;
    m.values_[k] = full[k].value;
  }
  for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

double SparseSymMatrix::coeff(int row, int col) const {
  for (int k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
    if (cols_[k] == col) return values_[k];
  return 0.0;
}

void SparseSymMatrix::multiply(const Vector& x, Vector& y) const {
  y.resize(n_);
  for (int r = 0; r < n_; ++r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[cols_[k]];
    y[r] = s;
  }
}

Vector SparseSymMatrix::apply(const Vector& x) const {
  Vector y;
  multiply(x, y);
  return y;
}

Vector SparseSymMatrix::diagonal() const {
  Vector d = Vector::Zero(n_);
  for (int r = 0; r < n_; ++r) d[r] = coeff(r, r);
  return d;
}

std::span<const int> SparseSymMatrix::row_cols(int row) const {
  return {cols_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::span<const double> SparseSymMatrix::row_values(int row) const {
  return {values_.data() + row_ptr_[row],
          static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw ConfigError("triplet outside matrix bounds");
  }
  sort_entries(entries);

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  m.cols_idx_.reserve(entries.size());
  m.values_.reserve(entries.size());
  std::size_t i = 0;
  while (i < entries.size()) {
    const int r = entries[i].row;
    const int c = entries[i].col;
    double v = 0.0;
    while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
      v += entries[i].value;
      ++i;
    }
    m.row_ptr_[static_cast<std::size_t>(r) + 1]++;
    m.cols_idx_.push_back(c);
    m.values_.push_back(v);
  }
  for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

void SparseMatrix::multiply(const Vector& x, Vector& y) const {
  y.resize(rows_);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[cols_idx_[k]];
    y[r] = s;
  }
}

Vector SparseMatrix::apply(const Vector& x) const {
  Vector y;
  multiply(x, y);
  return y;
}

void SparseMatrix::multiply_transpose(const Vector& x, Vector& y) const {
  y = Vector::Zero(cols_);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[cols_idx_[k]] += values_[k] * x[r];
}

Vector SparseMatrix::apply_transpose(const Vector& x) const {
  Vector y;
  multiply_transpose(x, y);
  return y;
}

SparseSymMatrix extract_submatrix(const SparseSymMatrix& a, std::span<const int> dofs) {
  std::vector<int> local(a.rows(), -1);
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i] < 0 || dofs[i] >= a.rows()) throw ConfigError("submatrix dof out of range");
    if (i > 0 && dofs[i] <= dofs[i - 1]) throw ConfigError("submatrix dofs must be ascending");
    local[dofs[i]] = static_cast<int>(i);
  }
  std::vector<Triplet> upper;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const int g = dofs[i];
    auto cols = a.row_cols(g);
    auto vals = a.row_values(g);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const int lc = local[cols[k]];
      if (lc >= static_cast<int>(i)) upper.push_back({static_cast<int>(i), lc, vals[k]});
    }
  }
  return SparseSymMatrix::from_upper_triplets(static_cast<int>(dofs.size()), std::move(upper));
}

Eigen::MatrixXd to_dense(const SparseSymMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) d(r, cols[k]) = vals[k];
  }
  return d;
}

JacobiPreconditioner::JacobiPreconditioner(const SparseSymMatrix& m) {
  inv_diag_ = m.diagonal();
  for (int i = 0; i < inv_diag_.size(); ++i) {
    if (inv_diag_[i] <= 0.0)
      throw SolverError("Jacobi preconditioner requires a positive diagonal");
    inv_diag_[i] = 1.0 / inv_diag_[i];
  }
}

void JacobiPreconditioner::apply(const Vector& r, Vector& z) const {
  z = inv_diag_.cwiseProduct(r);
}

std::pair<Vector, SolveReport> cg_solve(const SparseSymMatrix& m, const Vector& rhs, double tol,
                                        int maxit, const Preconditioner* prec) {
  const int n = m.rows();
  if (rhs.size() != n) throw ConfigError("cg_solve: rhs size mismatch");
  if (tol <= 0.0) throw ConfigError("cg_solve: tolerance must be positive");
  if (maxit <= 0) maxit = 10 * std::max(n, 1);

  SolveReport report;
  Vector x = Vector::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    report.converged = true;
    return {x, report};
  }

  JacobiPreconditioner jacobi_default = JacobiPreconditioner(m);
  const Preconditioner& pc = prec ? *prec : static_cast<const Preconditioner&>(jacobi_default);

  Vector r = rhs;
  Vector z(n), q(n);
  pc.apply(r, z);
  Vector p = z;
  double rho = r.dot(z);

  for (int it = 1; it <= maxit; ++it) {
    m.multiply(p, q);
    const double pq = p.dot(q);
    if (pq <= 0.0) throw SolverError("cg_solve: matrix is not positive definite (p'Mp <= 0)");
    const double alpha = rho / pq;
    x += alpha * p;
    r -= alpha * q;
    report.iterations = it;

    if (r.norm() <= tol * bnorm) {
      // Recurrence can drift; confirm against the true residual and restart
      // from it if the check fails.
      Vector rt = rhs - m.apply(x);
      const double true_rel = rt.norm() / bnorm;
      if (true_rel <= tol) {
        report.final_residual = true_rel;
        report.converged = true;
        return {x, report};
      }
      r = rt;
      pc.apply(r, z);
      p = z;
      rho = r.dot(z);
      continue;
    }

    pc.apply(r, z);
    const double rho_next = r.dot(z);
    p = z + (rho_next / rho) * p;
    rho = rho_next;
  }

  report.final_residual = (rhs - m.apply(x)).norm() / bnorm;
  report.converged = report.final_residual <= tol;
  return {x, report};
}

void fix_sign(Vector& v) {
  int idx = 0;
  double best = -1.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      idx = i;
    }
  }
  if (v.size() > 0 && v[idx] < 0.0) v = -v;
}

namespace {

// Reorders equal-eigenvalue groups by the first differing coefficient so
// multiplicities come out in a deterministic order.
void order_ties(std::vector<DensePair>& pairs) {
  auto lex_less = [](const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  };
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i + 1;
    const double tol = 1e-12 * std::max(1.0, std::abs(pairs[i].lambda));
    while (j < pairs.size() && std::abs(pairs[j].lambda - pairs[i].lambda) <= tol) ++j;
    std::sort(pairs.begin() + i, pairs.begin() + j,
              [&](const DensePair& a, const DensePair& b) { return lex_less(a.vec, b.vec); });
    i = j;
  }
}

}  // namespace

std::vector<DensePair> dense_gen_eigensolve(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& bd,
                                            int nev) {
  const int n = static_cast<int>(ad.rows());
  if (ad.cols() != n || bd.rows() != n || bd.cols() != n)
    throw ConfigError("dense_gen_eigensolve: dimension mismatch");
  if (nev < 1 || nev > n) throw ConfigError("dense_gen_eigensolve: invalid nev");

  Eigen::LLT<Eigen::MatrixXd> llt(bd);
  if (llt.info() != Eigen::Success)
    throw SolverError("dense_gen_eigensolve: mass block is not SPD");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      ad, bd, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw SolverError("dense_gen_eigensolve: eigensolver did not converge");

  std::vector<DensePair> pairs;
  pairs.reserve(nev);
  for (int i = 0; i < nev; ++i) {
    DensePair p;
    p.lambda = solver.eigenvalues()[i];
    p.vec = solver.eigenvectors().col(i);
    fix_sign(p.vec);
    pairs.push_back(std::move(p));
  }
  order_ties(pairs);
  return pairs;
}

std::vector<EigenPair> solve_interior_eigenproblem(std::span<const int> interior_dofs,
                                                   const SparseSymMatrix& a_full,
                                                   const SparseSymMatrix& b_full, int nev,
                                                   int level, int dense_limit) {
  const int dim = static_cast<int>(interior_dofs.size());
  if (dim > dense_limit)
    throw ConfigError("interior dimension " + std::to_string(dim) +
                      " exceeds the dense eigensolver threshold " + std::to_string(dense_limit));
  if (nev < 1 || nev > dim) throw ConfigError("nev out of range for the interior dimension");

  const SparseSymMatrix a_sub = extract_submatrix(a_full, interior_dofs);
  const SparseSymMatrix b_sub = extract_submatrix(b_full, interior_dofs);
  const auto dense = dense_gen_eigensolve(to_dense(a_sub), to_dense(b_sub), nev);

  std::vector<EigenPair> pairs;
  pairs.reserve(dense.size());
  for (const DensePair& d : dense) {
    EigenPair p;
    p.lambda = d.lambda;
    p.coeffs = d.vec;
    // The dense solver already B-normalizes; renormalize to pin the invariant.
    const double q = p.coeffs.dot(b_sub.apply(p.coeffs));
    if (q <= 0.0) throw SolverError("eigenvector with nonpositive mass norm");
    p.coeffs /= std::sqrt(q);
    fix_sign(p.coeffs);
    p.level = level;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace mleig
