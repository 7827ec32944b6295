// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mleig/sparse.hpp"
#include "oracles.hpp"

using namespace mleig;

namespace {

// Dirichlet 5-point stencil on an s x s interior grid.
SparseSymMatrix five_point_matrix(int s) {
  std::vector<Triplet> upper;
  auto id = [s](int i, int j) { return j * s + i; };
  for (int j = 0; j < s; ++j) {
    for (int i = 0; i < s; ++i) {
      upper.push_back({id(i, j), id(i, j), 4.0});
      if (i + 1 < s) upper.push_back({id(i, j), id(i + 1, j), -1.0});
      if (j + 1 < s) upper.push_back({id(i, j), id(i, j + 1), -1.0});
    }
  }
  return SparseSymMatrix::from_upper_triplets(s * s, std::move(upper));
}

}  // namespace

TEST_CASE("triplet assembly accumulates duplicates and mirrors exactly") {
  std::vector<Triplet> upper = {{0, 1, 0.25}, {0, 0, 2.0}, {0, 1, 0.5}, {1, 1, 3.0}};
  const auto m = SparseSymMatrix::from_upper_triplets(2, upper);
  CHECK(m.coeff(0, 0) == 2.0);
  CHECK(m.coeff(1, 1) == 3.0);
  CHECK(m.coeff(0, 1) == 0.75);
  CHECK(m.coeff(0, 1) == m.coeff(1, 0));  // bitwise
  CHECK(m.nonzeros() == 4);

  CHECK_THROWS_AS(SparseSymMatrix::from_upper_triplets(2, {{1, 0, 1.0}}), ConfigError);
}

TEST_CASE("structural symmetry is exact on random patterns") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, 19);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<Triplet> upper;
  for (int k = 0; k < 200; ++k) {
    int i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    upper.push_back({i, j, val(rng)});
  }
  const auto m = SparseSymMatrix::from_upper_triplets(20, upper);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) CHECK(m.coeff(i, j) == m.coeff(j, i));
}

TEST_CASE("submatrix extraction matches the dense restriction") {
  const auto m = five_point_matrix(4);
  const std::vector<int> dofs = {0, 3, 5, 10, 15};
  const auto sub = extract_submatrix(m, dofs);
  const Eigen::MatrixXd dense = to_dense(m);
  for (std::size_t i = 0; i < dofs.size(); ++i)
    for (std::size_t j = 0; j < dofs.size(); ++j)
      CHECK(sub.coeff(static_cast<int>(i), static_cast<int>(j)) ==
            dense(dofs[i], dofs[j]));
}

TEST_CASE("cg on the identity converges in one iteration") {
  const auto eye = SparseSymMatrix::from_upper_triplets(
      5, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0}, {4, 4, 1.0}});
  Vector rhs(5);
  rhs << 1.0, -2.0, 3.0, 0.5, -0.25;
  const auto [x, rep] = cg_solve(eye, rhs, 1e-12);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK((x - rhs).norm() == 0.0);
}

TEST_CASE("cg matches a dense factorization on the 9x9 five-point system") {
  const auto m = five_point_matrix(3);
  Vector rhs = Vector::Zero(9);
  rhs[0] = 1.0;
  const auto [x, rep] = cg_solve(m, rhs, 1e-12);
  CHECK(rep.converged);
  CHECK(rep.final_residual <= 1e-12);

  const Eigen::VectorXd dense_x = to_dense(m).ldlt().solve(rhs);
  CHECK((x - dense_x).norm() <= 1e-10);
}

TEST_CASE("cg terminates within the finite-termination safety bound") {
  std::mt19937 rng(11);
  const Eigen::MatrixXd dense = oracles::random_spd(30, rng);
  std::vector<Triplet> upper;
  for (int i = 0; i < 30; ++i)
    for (int j = i; j < 30; ++j) upper.push_back({i, j, dense(i, j)});
  const auto m = SparseSymMatrix::from_upper_triplets(30, std::move(upper));
  Vector rhs(30);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int i = 0; i < 30; ++i) rhs[i] = val(rng);

  const auto [x, rep] = cg_solve(m, rhs, 1e-10);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 3 * 30);
}

TEST_CASE("cg reports non-convergence instead of lying") {
  const auto m = five_point_matrix(5);
  Vector rhs = Vector::Constant(25, 1.0);
  const auto [x, rep] = cg_solve(m, rhs, 1e-14, 2);
  CHECK_FALSE(rep.converged);
  CHECK(rep.final_residual > 1e-14);
  CHECK(rep.iterations == 2);
}

TEST_CASE("cg flags an indefinite operator") {
  const auto m = SparseSymMatrix::from_upper_triplets(2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}});
  Vector rhs(2);
  rhs << 1.0, 0.0;
  CHECK_THROWS_AS(cg_solve(m, rhs, 1e-10), SolverError);
}

TEST_CASE("cg with a zero right-hand side returns zero") {
  const auto m = five_point_matrix(3);
  const auto [x, rep] = cg_solve(m, Vector::Zero(9), 1e-12);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("dense generalized eigensolve on hand-checked 2x2 problems") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);

  Eigen::MatrixXd d(2, 2);
  d << 1.0, 0.0, 0.0, 2.0;
  auto pairs = dense_gen_eigensolve(d, eye, 2);
  CHECK(pairs[0].lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pairs[1].lambda == doctest::Approx(2.0).epsilon(1e-14));

  Eigen::MatrixXd a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  pairs = dense_gen_eigensolve(a, eye, 2);
  CHECK(pairs[0].lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pairs[1].lambda == doctest::Approx(3.0).epsilon(1e-14));
  // eigenvectors proportional to (1,-1) and (1,1)
  CHECK(std::abs(pairs[0].vec[0] + pairs[0].vec[1]) < 1e-12);
  CHECK(std::abs(pairs[1].vec[0] - pairs[1].vec[1]) < 1e-12);
}

TEST_CASE("scaling B scales the spectrum and keeps directions") {
  std::mt19937 rng(3);
  const Eigen::MatrixXd a = oracles::random_spd(6, rng);
  const Eigen::MatrixXd b = oracles::random_spd(6, rng);
  const auto base = dense_gen_eigensolve(a, b, 6);
  const auto scaled = dense_gen_eigensolve(a, 4.0 * b, 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(scaled[i].lambda == doctest::Approx(base[i].lambda / 4.0).epsilon(1e-12));
    const Eigen::VectorXd u = base[i].vec.normalized();
    const Eigen::VectorXd v = scaled[i].vec.normalized();
    CHECK(std::abs(std::abs(u.dot(v)) - 1.0) < 1e-10);
  }
}

TEST_CASE("eigenvectors come back B-orthonormal") {
  std::mt19937 rng(5);
  const Eigen::MatrixXd a = oracles::random_spd(10, rng);
  const Eigen::MatrixXd b = oracles::random_spd(10, rng);
  const auto pairs = dense_gen_eigensolve(a, b, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      CHECK(std::abs(pairs[i].vec.dot(b * pairs[j].vec) - want) <= 1e-10);
    }
}

TEST_CASE("dense eigensolve agrees with the inverse-power oracle") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd a = oracles::random_spd(10, rng);
    const Eigen::MatrixXd b = oracles::random_spd(10, rng);
    const auto pairs = dense_gen_eigensolve(a, b, 4);
    const auto reference = oracles::power_gen_eigensolve(a, b, 4);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(pairs[i].lambda - reference[i].first) <=
            1e-8 * std::max(1.0, std::abs(reference[i].first)));
  }
}

TEST_CASE("a non-SPD mass matrix is rejected") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd b(2, 2);
  b << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(dense_gen_eigensolve(a, b, 1), SolverError);
}

TEST_CASE("interior eigenproblem honors the dense threshold") {
  const auto m = five_point_matrix(3);
  const std::vector<int> interior = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  CHECK_THROWS_AS(solve_interior_eigenproblem(interior, m, m, 1, 0, 4), ConfigError);
  CHECK_THROWS_AS(solve_interior_eigenproblem(interior, m, m, 10, 0), ConfigError);
  const auto pairs = solve_interior_eigenproblem(interior, m, m, 2, 0);
  CHECK(pairs.size() == 2);
  CHECK(pairs[0].lambda == doctest::Approx(1.0).epsilon(1e-12));  // A == B here
}

TEST_CASE("sign convention: the largest-magnitude entry is positive") {
  Vector v(3);
  v << 0.5, -2.0, 1.0;
  fix_sign(v);
  CHECK(v[1] == 2.0);
  v << -1.0, 1.0, -0.5;  // tie: first extreme wins
  fix_sign(v);
  CHECK(v[0] == 1.0);
}
