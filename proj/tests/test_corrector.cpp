// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mleig/corrector.hpp"
#include "oracles.hpp"

using namespace mleig;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.H = 0.25;
  cfg.delta = 0.25;
  cfg.m = 4;
  cfg.degree = 1;
  cfg.nev = 3;
  cfg.n_levels = 2;
  cfg.example = "laplace";
  return cfg;
}

RunConfig whole_domain_config() {
  RunConfig cfg;
  cfg.H = 0.5;
  cfg.delta = 0.5;
  cfg.m = 1;
  cfg.degree = 1;
  cfg.nev = 3;
  cfg.n_levels = 2;
  cfg.example = "laplace";
  return cfg;
}

// Reproduces the first two correction sub-steps for one eigenpair.
struct StepPieces {
  Vector u_fine;
  std::vector<Vector> corrections;
  Vector glued;
};

StepPieces run_pieces(Hierarchy& hy, const EigenPair& pair, int from_level, int to_level) {
  hy.extend_to(to_level);
  LevelSystem& fine = hy.level(to_level);
  fine.build_region_systems(hy.partition());
  StepPieces out;
  const Vector full = expand_interior(hy.level(from_level).space, pair.coeffs);
  out.u_fine = (from_level == to_level) ? full : hy.prolong(full, from_level, to_level);
  for (int j = 0; j < hy.partition().num_subdomains(); ++j)
    out.corrections.push_back(
        local_bvp_solve(fine, j, pair.lambda, out.u_fine, hy.config().cg_tol));
  out.glued = interface_solve(fine, hy.partition(), pair.lambda, out.u_fine, out.corrections,
                              hy.config().cg_tol);
  return out;
}

}  // namespace

TEST_CASE("config validation rejects the broken knobs") {
  RunConfig cfg = small_config();
  cfg.degree = 3;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = small_config();
  cfg.example = "helmholtz";
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = small_config();
  cfg.nev = 0;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = small_config();
  cfg.workers = 0;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("the requested overlap is rounded up to the coarse lattice") {
  RunConfig cfg = small_config();
  cfg.delta = 0.1;  // not representable on the H=0.25 lattice
  Hierarchy hy(cfg);
  CHECK(hy.partition().overlap_cells() == 1);
  CHECK(hy.partition().overlap_width() == 0.25);
}

TEST_CASE("an exact fine-level eigenpair has vanishing local corrections") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& fine = hy.level(2);
  const auto exact =
      coarse_eigensolve(fine.space, fine.stiffness, fine.mass, 1);
  const auto pieces = run_pieces(hy, exact[0], 2, 2);
  for (const Vector& e : pieces.corrections)
    CHECK(e.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("local solve matches a dense factorization of the restricted system") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);

  LevelSystem& fine = hy.level(2);
  fine.build_region_systems(hy.partition());
  const Vector u_fine =
      hy.prolong(expand_interior(level1.space, pairs[0].coeffs), 1, 2);
  const Vector e = local_bvp_solve(fine, 0, pairs[0].lambda, u_fine, 1e-12);

  const RegionSystem& sys = fine.subdomain_systems[0];
  const Vector residual = pairs[0].lambda * fine.mass.apply(u_fine) - fine.stiffness.apply(u_fine);
  Vector rhs(sys.dofs.size());
  for (std::size_t i = 0; i < sys.dofs.size(); ++i) rhs[i] = residual[sys.dofs[i]];
  const Eigen::VectorXd dense = to_dense(sys.a_sub).ldlt().solve(rhs);
  for (std::size_t i = 0; i < sys.dofs.size(); ++i)
    CHECK(std::abs(e[sys.dofs[i]] - dense[i]) <= 1e-10);

  // e vanishes outside the interior dofs of Omega_1.
  for (int d = 0; d < fine.space.ndofs; ++d) {
    if (sys.local_of[d] < 0) CHECK(e[d] == 0.0);
  }

  // The solved system is the Galerkin statement on the subdomain test space:
  // a(u + e, v) = lambda b(u, v) for all v there.
  const Vector after = pairs[0].lambda * fine.mass.apply(u_fine) -
                       fine.stiffness.apply(u_fine + e);
  for (const int d : sys.dofs) CHECK(std::abs(after[d]) <= 1e-9);
}

TEST_CASE("cg failure inside a subdomain names the subdomain") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);
  LevelSystem& fine = hy.level(2);
  fine.build_region_systems(hy.partition());
  const Vector u_fine = hy.prolong(expand_interior(level1.space, pairs[0].coeffs), 1, 2);
  CHECK_THROWS_WITH_AS(local_bvp_solve(fine, 1, pairs[0].lambda, u_fine, 1e-30),
                       doctest::Contains("subdomain 2"), SolverError);
}

TEST_CASE("glued vector carries the subdomain candidates bitwise") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);
  const auto pieces = run_pieces(hy, pairs[0], 1, 2);

  const LevelSystem& fine = hy.level(2);
  for (int j = 0; j < 4; ++j) {
    for (const int d : fine.glue_dofs[j])
      CHECK(pieces.glued[d] == pieces.u_fine[d] + pieces.corrections[j][d]);
  }
}

TEST_CASE("strip values match a dense solve of the lifted Dirichlet system") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);
  const auto pieces = run_pieces(hy, pairs[0], 1, 2);

  const LevelSystem& fine = hy.level(2);
  const RegionSystem& strip = fine.strip_system;
  REQUIRE(!strip.dofs.empty());

  Vector boundary_data = pieces.glued;
  for (const int d : strip.dofs) boundary_data[d] = 0.0;
  const Vector load = pairs[0].lambda * fine.mass.apply(pieces.u_fine) -
                      fine.stiffness.apply(boundary_data);
  Vector rhs(strip.dofs.size());
  for (std::size_t i = 0; i < strip.dofs.size(); ++i) rhs[i] = load[strip.dofs[i]];
  const Eigen::VectorXd dense = to_dense(strip.a_sub).ldlt().solve(rhs);
  for (std::size_t i = 0; i < strip.dofs.size(); ++i)
    CHECK(std::abs(pieces.glued[strip.dofs[i]] - dense[i]) <= 1e-10);
}

TEST_CASE("with one subdomain the strip is empty and gluing is the identity") {
  Hierarchy hy(whole_domain_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);
  const auto pieces = run_pieces(hy, pairs[0], 1, 2);
  CHECK(hy.level(2).strip_system.dofs.empty());
  const Vector expected = pieces.u_fine + pieces.corrections[0];
  for (const int d : hy.level(2).space.interior_dofs) CHECK(pieces.glued[d] == expected[d]);
}

TEST_CASE("augmented solve equals the coarse solve when the candidate adds nothing") {
  Hierarchy hy(small_config());
  hy.extend_to(1);
  LevelSystem& coarse = hy.level(0);
  const auto coarse_pairs =
      coarse_eigensolve(coarse.space, coarse.stiffness, coarse.mass, 2);

  // A candidate that lies exactly in the coarse space gets dropped by the
  // dependence check, so the solve reduces to the coarse problem.
  const Vector in_coarse =
      hy.prolong(expand_interior(coarse.space, coarse_pairs[0].coeffs), 0, 1);
  const auto aug = augmented_eigensolve(hy, 1, {in_coarse}, 2);
  for (int i = 0; i < 2; ++i)
    CHECK(aug[i].lambda ==
          doctest::Approx(coarse_pairs[i].lambda).epsilon(1e-12));
}

TEST_CASE("augmented eigenvalues obey the two-sided subspace bounds") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 3);
  std::vector<Vector> glued;
  for (const auto& p : pairs) glued.push_back(run_pieces(hy, p, 1, 2).glued);
  const auto aug = augmented_eigensolve(hy, 2, glued, 3);

  LevelSystem& fine = hy.level(2);
  const auto direct = coarse_eigensolve(fine.space, fine.stiffness, fine.mass, 3);
  const auto exact = oracles::laplace_square_eigenvalues(3);
  for (int i = 0; i < 3; ++i) {
    CHECK(aug[i].lambda >= direct[i].lambda - 1e-11 * direct[i].lambda);  // min-max
    CHECK(aug[i].lambda > exact[i]);
    CHECK(std::abs(aug[i].coeffs.dot(
                       extract_submatrix(fine.mass, fine.space.interior_dofs)
                           .apply(aug[i].coeffs)) -
                   1.0) <= 1e-12);
  }
}

TEST_CASE("augmented solve matches an explicit-basis dense oracle") {
  Hierarchy hy(whole_domain_config());
  hy.extend_to(2);
  LevelSystem& level1 = hy.level(1);
  const auto pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 1);
  const auto pieces = run_pieces(hy, pairs[0], 1, 2);
  const auto aug = augmented_eigensolve(hy, 2, {pieces.glued}, 1);

  // Explicit basis: every prolonged coarse interior basis function plus the
  // glued candidate, with Gram matrices assembled on the fine level.
  const LevelSystem& coarse = hy.level(0);
  const LevelSystem& fine = hy.level(2);
  const int mc = static_cast<int>(coarse.space.interior_dofs.size());
  Eigen::MatrixXd w(fine.space.ndofs, mc + 1);
  for (int i = 0; i < mc; ++i) {
    Vector e = Vector::Zero(mc);
    e[i] = 1.0;
    w.col(i) = hy.prolong(expand_interior(coarse.space, e), 0, 2);
  }
  w.col(mc) = pieces.glued;

  Eigen::MatrixXd aw(fine.space.ndofs, mc + 1), bw(fine.space.ndofs, mc + 1);
  for (int i = 0; i <= mc; ++i) {
    aw.col(i) = fine.stiffness.apply(w.col(i));
    bw.col(i) = fine.mass.apply(w.col(i));
  }
  const Eigen::MatrixXd a_g = w.transpose() * aw;
  const Eigen::MatrixXd b_g = w.transpose() * bw;
  const auto oracle = dense_gen_eigensolve(a_g, b_g, 1);
  CHECK(std::abs(aug[0].lambda - oracle[0].lambda) <= 1e-10 * oracle[0].lambda);
}

TEST_CASE("one correction step is idempotent on exact fine eigenpairs") {
  Hierarchy hy(small_config());
  hy.extend_to(2);
  LevelSystem& fine = hy.level(2);
  const auto exact = coarse_eigensolve(fine.space, fine.stiffness, fine.mass, 3);

  CorrectionState state;
  state.level = 2;
  state.pairs = exact;
  const CorrectionState out = one_correction_step(hy, state, 2);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(out.pairs[i].lambda - exact[i].lambda) <=
          1e-9 * std::abs(exact[i].lambda));
}

TEST_CASE("one correction step output is ascending and above the exact values") {
  Hierarchy hy(small_config());
  hy.extend_to(1);
  LevelSystem& level1 = hy.level(1);
  CorrectionState state;
  state.level = 1;
  state.pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 3);
  const CorrectionState out = one_correction_step(hy, state, 2);

  const auto exact = oracles::laplace_square_eigenvalues(3);
  CHECK(out.matched_previous);
  for (int i = 0; i < 3; ++i) {
    if (i > 0) CHECK(out.pairs[i].lambda >= out.pairs[i - 1].lambda);
    CHECK(out.pairs[i].lambda > exact[i]);
  }
}

TEST_CASE("results are bitwise identical for one and four workers") {
  auto run = [](int workers) {
    RunConfig cfg = small_config();
    cfg.nev = 3;
    cfg.workers = workers;
    Hierarchy hy(cfg);
    hy.extend_to(1);
    LevelSystem& level1 = hy.level(1);
    CorrectionState state;
    state.level = 1;
    state.pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, 3);
    return one_correction_step(hy, state, 2);
  };
  const CorrectionState a = run(1);
  const CorrectionState b = run(4);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.pairs[i].lambda == b.pairs[i].lambda);
    CHECK(a.pairs[i].coeffs.size() == b.pairs[i].coeffs.size());
    for (int k = 0; k < a.pairs[i].coeffs.size(); ++k)
      CHECK(a.pairs[i].coeffs[k] == b.pairs[i].coeffs[k]);
  }
}

TEST_CASE("a single-level run is exactly the level-1 eigensolve") {
  RunConfig cfg = small_config();
  cfg.n_levels = 1;
  Hierarchy hy(cfg);
  const MultilevelResult result = multilevel_correction(hy);
  REQUIRE(result.levels.size() == 1);

  LevelSystem& level1 = hy.level(1);
  const auto direct = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, cfg.nev);
  for (int i = 0; i < cfg.nev; ++i)
    CHECK(result.levels[0].lambdas[i] == direct[i].lambda);
}

TEST_CASE("upper-bound chain: exact <= direct <= corrected, per level") {
  RunConfig cfg = whole_domain_config();
  cfg.n_levels = 3;
  Hierarchy hy(cfg);
  const MultilevelResult result = multilevel_correction(hy);
  const auto exact = oracles::laplace_square_eigenvalues(cfg.nev);

  for (const LevelTrace& trace : result.levels) {
    LevelSystem& sys = hy.level(trace.level);
    const auto direct = coarse_eigensolve(sys.space, sys.stiffness, sys.mass, cfg.nev);
    for (int i = 0; i < cfg.nev; ++i) {
      CHECK(exact[i] < direct[i].lambda);
      CHECK(direct[i].lambda <= trace.lambdas[i] * (1.0 + 1e-11));
    }
  }
}

TEST_CASE("eigenvalue errors contract by roughly four per level") {
  RunConfig cfg;
  cfg.H = 0.25;
  cfg.delta = 0.25;
  cfg.m = 4;
  cfg.degree = 1;
  cfg.nev = 5;
  cfg.n_levels = 4;
  cfg.example = "laplace";
  cfg.workers = 2;
  Hierarchy hy(cfg);

  ReferenceSet refs;
  refs.lambdas = oracles::laplace_square_eigenvalues(5);
  const MultilevelResult result = multilevel_correction(hy, &refs);

  REQUIRE(result.levels.size() == 4);
  for (int i = 0; i < 5; ++i) {
    for (std::size_t k = 2; k < result.levels.size(); ++k) {
      const double ratio =
          result.levels[k - 1].eig_errors[i] / result.levels[k].eig_errors[i];
      CHECK(ratio >= 3.4);
      CHECK(ratio <= 4.6);
    }
  }
  for (const LevelTrace& trace : result.levels) CHECK(trace.matched_previous);
}
