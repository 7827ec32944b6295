// SPDX-License-Identifier: Apache-2.0

#include "mleig/corrector.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

namespace mleig {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs fn(0..n_tasks) on up to `workers` threads. Tasks must write to
// disjoint state; the task index assignment has no effect on the results, so
// outputs are bitwise independent of the worker count.
void parallel_tasks(int n_tasks, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n_tasks <= 1) {
    for (int t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= n_tasks) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(workers, n_tasks);
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

RegionSystem make_region_system(const FeSpace& space, const SparseSymMatrix& a,
                                std::vector<int> dofs) {
  RegionSystem sys;
  sys.dofs = std::move(dofs);
  sys.local_of.assign(space.ndofs, -1);
  for (std::size_t i = 0; i < sys.dofs.size(); ++i)
    sys.local_of[sys.dofs[i]] = static_cast<int>(i);
  sys.a_sub = extract_submatrix(a, sys.dofs);
  return sys;
}

Vector gather(const std::vector<int>& dofs, const Vector& full) {
  Vector out(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) out[static_cast<int>(i)] = full[dofs[i]];
  return out;
}

}  // namespace

void validate_config(const RunConfig& config) {
  if (!(config.domain.x_min < config.domain.x_max) ||
      !(config.domain.y_min < config.domain.y_max))
    throw ConfigError("domain rectangle must have positive side lengths");
  if (!(config.H > 0.0)) throw ConfigError("H must be positive");
  if (!(config.delta > 0.0)) throw ConfigError("delta must be positive");
  if (config.n_levels < 1) throw ConfigError("n_levels must be at least 1");
  if (config.degree != 1 && config.degree != 2) throw ConfigError("degree must be 1 or 2");
  if (config.nev < 1) throw ConfigError("nev must be at least 1");
  if (!(config.cg_tol > 0.0)) throw ConfigError("cg_tol must be positive");
  if (config.workers < 1) throw ConfigError("workers must be at least 1");
  field_for_example(config.example);
}

CoefficientField field_for_example(const std::string& example) {
  if (example == "laplace") return CoefficientField::laplace();
  if (example == "variable") return CoefficientField::variable();
  throw ConfigError("unknown example id \"" + example + "\" (expected laplace or variable)");
}

void LevelSystem::build_region_systems(const Partition& partition) {
  if (systems_ready) return;
  const int m = partition.num_subdomains();
  subdomain_systems.reserve(m);
  glue_dofs.reserve(m);
  for (int j = 0; j < m; ++j) {
    subdomain_systems.push_back(make_region_system(
        space, stiffness, restrict_space(space, partition, Region::overlap(j), true).dofs));
    glue_dofs.push_back(restrict_space(space, partition, Region::inner(j), false).dofs);
  }
  strip_system = make_region_system(
      space, stiffness, restrict_space(space, partition, Region::strip(), true).dofs);
  systems_ready = true;
}

Hierarchy::Hierarchy(const RunConfig& config)
    : config_(config), field_(field_for_example(config.example)) {
  validate_config(config_);

  auto coarse_mesh = std::make_shared<Mesh>(build_structured_mesh(config_.domain, config_.H));

  // The overlap is rounded up to the coarse lattice so the requested width is
  // a lower bound; build_partition itself insists on exact alignment.
  const double cell = coarse_mesh->cell_dx();
  const int delta_cells = std::max(1, static_cast<int>(std::ceil(config_.delta / cell - 1e-9)));
  partition_ = build_partition(*coarse_mesh, config_.m, delta_cells * cell);

  auto level0 = std::make_unique<LevelSystem>();
  level0->mesh = coarse_mesh;
  level0->space = build_space(coarse_mesh, config_.degree);
  level0->stiffness = assemble_form(level0->space, field_, FormKind::Stiffness);
  level0->mass = assemble_form(level0->space, field_, FormKind::Mass);
  levels_.push_back(std::move(level0));
}

void Hierarchy::extend_to(int level) {
  if (level < 0) throw ConfigError("level must be nonnegative");
  while (max_level() < level) {
    const LevelSystem& prev = *levels_.back();
    auto mesh = std::make_shared<Mesh>(refine_regular(*prev.mesh));
    partition_.register_level(*mesh);

    auto next = std::make_unique<LevelSystem>();
    next->mesh = mesh;
    next->space = build_space(mesh, config_.degree);
    next->stiffness = assemble_form(next->space, field_, FormKind::Stiffness);
    next->mass = assemble_form(next->space, field_, FormKind::Mass);
    next->prolongation = prolongation_matrix(prev.space, next->space);
    levels_.push_back(std::move(next));
  }
}

LevelSystem& Hierarchy::level(int k) {
  if (k < 0 || k > max_level()) throw ConfigError("level " + std::to_string(k) + " not built");
  return *levels_[k];
}

const LevelSystem& Hierarchy::level(int k) const {
  if (k < 0 || k > max_level()) throw ConfigError("level " + std::to_string(k) + " not built");
  return *levels_[k];
}

Vector Hierarchy::prolong(const Vector& full, int from_level, int to_level) const {
  if (from_level > to_level) throw ConfigError("prolong goes from coarse to fine");
  Vector v = full;
  for (int k = from_level + 1; k <= to_level; ++k) v = levels_[k]->prolongation.apply(v);
  return v;
}

Vector Hierarchy::restrict_transpose(const Vector& full, int from_level, int to_level) const {
  if (from_level < to_level) throw ConfigError("restrict_transpose goes from fine to coarse");
  Vector v = full;
  for (int k = from_level; k > to_level; --k) v = levels_[k]->prolongation.apply_transpose(v);
  return v;
}

void Hierarchy::ensure_coarse_dense() {
  if (coarse_dense_ready_) return;
  const LevelSystem& coarse = *levels_[0];
  coarse_a_ = to_dense(extract_submatrix(coarse.stiffness, coarse.space.interior_dofs));
  coarse_b_ = to_dense(extract_submatrix(coarse.mass, coarse.space.interior_dofs));
  coarse_b_llt_.compute(coarse_b_);
  if (coarse_b_llt_.info() != Eigen::Success)
    throw SolverError("coarse mass block is not SPD");
  coarse_dense_ready_ = true;
}

const Eigen::MatrixXd& Hierarchy::coarse_stiffness_dense() {
  ensure_coarse_dense();
  return coarse_a_;
}

const Eigen::MatrixXd& Hierarchy::coarse_mass_dense() {
  ensure_coarse_dense();
  return coarse_b_;
}

const Eigen::LLT<Eigen::MatrixXd>& Hierarchy::coarse_mass_llt() {
  ensure_coarse_dense();
  return coarse_b_llt_;
}

Vector local_bvp_solve(const LevelSystem& fine, int j, double lambda, const Vector& u_full,
                       double cg_tol, SolveReport* report) {
  const RegionSystem& sys = fine.subdomain_systems.at(j);
  const Vector residual = lambda * fine.mass.apply(u_full) - fine.stiffness.apply(u_full);
  const Vector rhs = gather(sys.dofs, residual);

  auto [x, rep] = cg_solve(sys.a_sub, rhs, cg_tol);
  if (report) *report = rep;
  if (!rep.converged)
    throw SolverError("subdomain " + std::to_string(j + 1) + " solve did not converge (" +
                      std::to_string(rep.iterations) +
                      " iterations, residual " + std::to_string(rep.final_residual) + ")");

  Vector e = Vector::Zero(fine.space.ndofs);
  for (std::size_t i = 0; i < sys.dofs.size(); ++i) e[sys.dofs[i]] = x[static_cast<int>(i)];
  return e;
}

Vector interface_solve(const LevelSystem& fine, const Partition& partition, double lambda,
                       const Vector& u_full, const std::vector<Vector>& corrections,
                       double cg_tol, SolveReport* report) {
  const int m = partition.num_subdomains();
  if (static_cast<int>(corrections.size()) != m)
    throw ConfigError("interface_solve expects one correction per subdomain");

  Vector glued = Vector::Zero(fine.space.ndofs);
  std::vector<char> owned(fine.space.ndofs, 0);
  for (int j = 0; j < m; ++j) {
    for (const int d : fine.glue_dofs[j]) {
      if (owned[d]) throw SolverError("interface dof claimed by two inner regions");
      owned[d] = 1;
      glued[d] = u_full[d] + corrections[j][d];
    }
  }

  const RegionSystem& strip = fine.strip_system;
  if (!strip.dofs.empty()) {
    // Lifted Dirichlet system: the glued values enter through the stiffness
    // couplings; the right side keeps the total-function form lambda*b(u, v).
    const Vector load = lambda * fine.mass.apply(u_full) - fine.stiffness.apply(glued);
    const Vector rhs = gather(strip.dofs, load);
    auto [x, rep] = cg_solve(strip.a_sub, rhs, cg_tol);
    if (report) *report = rep;
    if (!rep.converged)
      throw SolverError("strip solve did not converge (" + std::to_string(rep.iterations) +
                        " iterations, residual " + std::to_string(rep.final_residual) + ")");
    for (std::size_t i = 0; i < strip.dofs.size(); ++i) {
      owned[strip.dofs[i]] = 1;
      glued[strip.dofs[i]] = x[static_cast<int>(i)];
    }
  }

  for (const int d : fine.space.interior_dofs) {
    if (!owned[d]) throw SolverError("interior dof not covered by the glue/strip partition");
  }
  return glued;
}

std::vector<EigenPair> augmented_eigensolve(Hierarchy& hierarchy, int fine_level,
                                            const std::vector<Vector>& glued, int nev) {
  LevelSystem& fine = hierarchy.level(fine_level);
  const LevelSystem& coarse = hierarchy.level(0);
  const int mc = static_cast<int>(coarse.space.interior_dofs.size());

  const Eigen::MatrixXd& a_cc = hierarchy.coarse_stiffness_dense();
  const Eigen::MatrixXd& b_cc = hierarchy.coarse_mass_dense();

  // Candidate blocks on the fine level, restricted down the hierarchy with
  // transposed prolongations.
  const int k_in = static_cast<int>(glued.size());
  Eigen::MatrixXd a_cu(mc, k_in), b_cu(mc, k_in);
  Eigen::MatrixXd a_uu(k_in, k_in), b_uu(k_in, k_in);
  std::vector<Vector> au(k_in), bu(k_in);
  for (int l = 0; l < k_in; ++l) {
    au[l] = fine.stiffness.apply(glued[l]);
    bu[l] = fine.mass.apply(glued[l]);
    a_cu.col(l) = restrict_interior(
        coarse.space, hierarchy.restrict_transpose(au[l], fine_level, 0));
    b_cu.col(l) = restrict_interior(
        coarse.space, hierarchy.restrict_transpose(bu[l], fine_level, 0));
  }
  for (int l = 0; l < k_in; ++l)
    for (int l2 = 0; l2 < k_in; ++l2) {
      a_uu(l, l2) = glued[l].dot(au[l2]);
      b_uu(l, l2) = glued[l].dot(bu[l2]);
    }

  // Drop candidates that are numerically dependent on the coarse space,
  // otherwise the augmented mass block loses positivity.
  std::vector<int> keep;
  for (int l = 0; l < k_in; ++l) {
    const Eigen::VectorXd c = hierarchy.coarse_mass_llt().solve(b_cu.col(l));
    const double res2 = b_uu(l, l) - b_cu.col(l).dot(c);
    if (std::sqrt(std::max(res2, 0.0)) >= 1e-10) keep.push_back(l);
  }

  const int k = static_cast<int>(keep.size());
  const int dim = mc + k;
  if (nev < 1 || nev > dim)
    throw ConfigError("augmented eigenproblem smaller than the requested nev");

  Eigen::MatrixXd a_aug(dim, dim), b_aug(dim, dim);
  a_aug.topLeftCorner(mc, mc) = a_cc;
  b_aug.topLeftCorner(mc, mc) = b_cc;
  for (int l = 0; l < k; ++l) {
    a_aug.block(0, mc + l, mc, 1) = a_cu.col(keep[l]);
    a_aug.block(mc + l, 0, 1, mc) = a_cu.col(keep[l]).transpose();
    b_aug.block(0, mc + l, mc, 1) = b_cu.col(keep[l]);
    b_aug.block(mc + l, 0, 1, mc) = b_cu.col(keep[l]).transpose();
    for (int l2 = 0; l2 < k; ++l2) {
      a_aug(mc + l, mc + l2) = a_uu(keep[l], keep[l2]);
      b_aug(mc + l, mc + l2) = b_uu(keep[l], keep[l2]);
    }
  }

  const auto dense = dense_gen_eigensolve(a_aug, b_aug, nev);

  std::vector<EigenPair> pairs;
  pairs.reserve(dense.size());
  for (const DensePair& d : dense) {
    Vector full = hierarchy.prolong(
        expand_interior(coarse.space, d.vec.head(mc)), 0, fine_level);
    for (int l = 0; l < k; ++l) full += d.vec[mc + l] * glued[keep[l]];

    EigenPair p;
    p.level = fine_level;
    p.lambda = d.lambda;
    const double q = full.dot(fine.mass.apply(full));
    if (q <= 0.0) throw SolverError("augmented eigenvector with nonpositive mass norm");
    p.coeffs = restrict_interior(fine.space, full) / std::sqrt(q);
    fix_sign(p.coeffs);
    pairs.push_back(std::move(p));
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
  return pairs;
}

CorrectionState one_correction_step(Hierarchy& hierarchy, const CorrectionState& state,
                                    int to_level, StepTimings* timings) {
  if (state.pairs.empty()) throw ConfigError("correction step needs at least one eigenpair");
  if (to_level != state.level + 1 && to_level != state.level)
    throw ConfigError("correction step targets the next level (or the same level)");
  hierarchy.extend_to(to_level);

  LevelSystem& fine = hierarchy.level(to_level);
  const Partition& partition = hierarchy.partition();
  fine.build_region_systems(partition);

  const int nev = static_cast<int>(state.pairs.size());
  const int m = partition.num_subdomains();
  const double cg_tol = hierarchy.config().cg_tol;
  const int workers = hierarchy.config().workers;

  std::vector<Vector> u_fine(nev);
  for (int i = 0; i < nev; ++i) {
    const Vector full = expand_interior(hierarchy.level(state.level).space,
                                        state.pairs[i].coeffs);
    u_fine[i] = (to_level == state.level)
                    ? full
                    : hierarchy.prolong(full, state.level, to_level);
  }

  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<Vector>> corrections(nev, std::vector<Vector>(m));
  parallel_tasks(nev * m, workers, [&](int task) {
    const int i = task / m;
    const int j = task % m;
    corrections[i][j] =
        local_bvp_solve(fine, j, state.pairs[i].lambda, u_fine[i], cg_tol);
  });
  const double t_local = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<Vector> glued(nev);
  parallel_tasks(nev, workers, [&](int i) {
    glued[i] = interface_solve(fine, partition, state.pairs[i].lambda, u_fine[i],
                               corrections[i], cg_tol);
  });
  const double t_iface = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<EigenPair> next = augmented_eigensolve(hierarchy, to_level, glued, nev);
  const double t_aug = seconds_since(t0);

  // Match against the previous pairs by the largest |b-inner product|; the
  // output stays sorted ascending, the match is a tracking diagnostic.
  bool identity = true;
  for (int i2 = 0; i2 < nev; ++i2) {
    const Vector full = expand_interior(fine.space, next[i2].coeffs);
    const Vector bfull = fine.mass.apply(full);
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < nev; ++i) {
      const double v = std::abs(u_fine[i].dot(bfull));
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    if (best != i2) identity = false;
  }

  if (timings) {
    timings->local_seconds = t_local;
    timings->iface_seconds = t_iface;
    timings->aug_seconds = t_aug;
  }

  CorrectionState out;
  out.level = to_level;
  out.pairs = std::move(next);
  out.matched_previous = identity;
  return out;
}

MultilevelResult multilevel_correction(Hierarchy& hierarchy, const ReferenceSet* refs) {
  const RunConfig& config = hierarchy.config();
  MultilevelResult result;

  auto record = [&](const CorrectionState& state, const StepTimings& timings) {
    const LevelSystem& sys = hierarchy.level(state.level);
    LevelTrace trace;
    trace.level = state.level;
    trace.h = sys.mesh->h_max;
    trace.interior_dofs = static_cast<int>(sys.space.interior_dofs.size());
    trace.timings = timings;
    trace.matched_previous = state.matched_previous;
    for (std::size_t i = 0; i < state.pairs.size(); ++i) {
      const EigenPair& p = state.pairs[i];
      trace.lambdas.push_back(p.lambda);
      double eig_err = std::numeric_limits<double>::quiet_NaN();
      double h1_err = std::numeric_limits<double>::quiet_NaN();
      if (refs && i < refs->lambdas.size()) {
        const ExactFunction* fn = nullptr;
        if (auto it = refs->eigenfunctions.find(static_cast<int>(i));
            it != refs->eigenfunctions.end())
          fn = &it->second;
        const ErrorReport err =
            compute_errors(sys.space, hierarchy.field(), expand_interior(sys.space, p.coeffs),
                           p.lambda, refs->lambdas[i], fn);
        eig_err = err.eig_err;
        if (fn) h1_err = err.h1_err;
      }
      trace.eig_errors.push_back(eig_err);
      trace.h1_errors.push_back(h1_err);
    }
    trace.pairs = state.pairs;
    result.levels.push_back(std::move(trace));
  };

  hierarchy.extend_to(1);
  LevelSystem& level1 = hierarchy.level(1);
  CorrectionState state;
  state.level = 1;
  state.pairs = coarse_eigensolve(level1.space, level1.stiffness, level1.mass, config.nev);
  record(state, StepTimings{});

  for (int k = 1; k < config.n_levels; ++k) {
    StepTimings timings;
    state = one_correction_step(hierarchy, state, k + 1, &timings);
    record(state, timings);
  }
  return result;
}

}  // namespace mleig
