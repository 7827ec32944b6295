// SPDX-License-Identifier: Apache-2.0

#include "mleig/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace mleig {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p1 = x, p0 = 1.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    out[i] = {0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp)};
  }
  std::sort(out.begin(), out.end());
  return out;
}

QuadRule make_degree2() {
  QuadRule r;
  r.degree = 2;
  r.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return r;
}

QuadRule make_degree6() {
  QuadRule r;
  r.degree = 6;
  const double a1 = 0.501426509658179, b1 = 0.249286745170910, w1 = 0.116786275726379;
  const double a2 = 0.873821971016996, b2 = 0.063089014491502, w2 = 0.050844906370207;
  const double a3 = 0.053145049844816, b3 = 0.310352451033785, c3 = 0.636502499121399,
               w3 = 0.082851075618374;
  auto push3 = [&](double a, double b, double w) {
    r.points.push_back({a, b, b});
    r.points.push_back({b, a, b});
    r.points.push_back({b, b, a});
    r.weights.insert(r.weights.end(), 3, w);
  };
  push3(a1, b1, w1);
  push3(a2, b2, w2);
  const std::array<std::array<double, 3>, 6> perm6 = {{{a3, b3, c3},
                                                       {a3, c3, b3},
                                                       {b3, a3, c3},
                                                       {b3, c3, a3},
                                                       {c3, a3, b3},
                                                       {c3, b3, a3}}};
  for (const auto& p : perm6) {
    r.points.push_back(p);
    r.weights.push_back(w3);
  }
  return r;
}

}  // namespace

const QuadRule& quad_degree2() {
  static const QuadRule r = make_degree2();
  return r;
}

const QuadRule& quad_degree6() {
  static const QuadRule r = make_degree6();
  return r;
}

QuadRule quad_gauss_duffy(int n) {
  if (n < 1) throw ConfigError("quad_gauss_duffy: need at least one point per axis");
  const auto gl = gauss_legendre_01(n);
  QuadRule r;
  r.degree = 2 * n - 2;
  for (const auto& [u, wu] : gl) {
    for (const auto& [v, wv] : gl) {
      const double xi = u;
      const double eta = v * (1.0 - u);
      r.points.push_back({1.0 - xi - eta, xi, eta});
      r.weights.push_back(2.0 * wu * wv * (1.0 - u));
    }
  }
  return r;
}

CoefficientField CoefficientField::laplace() {
  CoefficientField f;
  f.name = "laplace";
  f.constant_coeffs = true;
  f.diffusion = [](double, double) { return std::array<double, 3>{1.0, 0.0, 1.0}; };
  f.weight = [](double, double) { return 1.0; };
  return f;
}

CoefficientField CoefficientField::variable() {
  CoefficientField f;
  f.name = "variable";
  f.constant_coeffs = false;
  f.diffusion = [](double x, double y) {
    return std::array<double, 3>{std::exp(1.0 + x * x), std::exp(x * y), std::exp(1.0 + y * y)};
  };
  f.weight = [](double x, double y) { return (1.0 + x * x) * (1.0 + y * y); };
  return f;
}

namespace {

// Values of the reference shape functions at a barycentric point.
void shape_values(int degree, const std::array<double, 3>& l, double out[6]) {
  if (degree == 1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
  out[3] = 4.0 * l[0] * l[1];
  out[4] = 4.0 * l[1] * l[2];
  out[5] = 4.0 * l[2] * l[0];
}

// Physical gradients given the barycentric gradients gl[i] of the element.
void shape_gradients(int degree, const std::array<double, 3>& l, const double gl[3][2],
                     double out[6][2]) {
  if (degree == 1) {
    for (int i = 0; i < 3; ++i) {
      out[i][0] = gl[i][0];
      out[i][1] = gl[i][1];
    }
    return;
  }
  for (int i = 0; i < 3; ++i) {
    out[i][0] = (4.0 * l[i] - 1.0) * gl[i][0];
    out[i][1] = (4.0 * l[i] - 1.0) * gl[i][1];
  }
  const int ea[3] = {0, 1, 2};
  const int eb[3] = {1, 2, 0};
  for (int e = 0; e < 3; ++e) {
    out[3 + e][0] = 4.0 * (l[ea[e]] * gl[eb[e]][0] + l[eb[e]] * gl[ea[e]][0]);
    out[3 + e][1] = 4.0 * (l[ea[e]] * gl[eb[e]][1] + l[eb[e]] * gl[ea[e]][1]);
  }
}

struct ElemGeom {
  std::array<Point, 3> v;
  double area = 0.0;
  double gl[3][2] = {};  // barycentric gradients
};

ElemGeom element_geometry(const Mesh& mesh, int elem) {
  ElemGeom g;
  const auto& t = mesh.triangles[elem];
  for (int i = 0; i < 3; ++i) g.v[i] = mesh.vertices[t[i]];
  const double area2 = (g.v[1].x - g.v[0].x) * (g.v[2].y - g.v[0].y) -
                       (g.v[2].x - g.v[0].x) * (g.v[1].y - g.v[0].y);
  g.area = 0.5 * area2;
  g.gl[0][0] = (g.v[1].y - g.v[2].y) / area2;
  g.gl[0][1] = (g.v[2].x - g.v[1].x) / area2;
  g.gl[1][0] = (g.v[2].y - g.v[0].y) / area2;
  g.gl[1][1] = (g.v[0].x - g.v[2].x) / area2;
  g.gl[2][0] = (g.v[0].y - g.v[1].y) / area2;
  g.gl[2][1] = (g.v[1].x - g.v[0].x) / area2;
  return g;
}

void local_matrix(const FeSpace& space, const CoefficientField& field, FormKind kind,
                  const QuadRule& rule, int elem, double out[6][6]) {
  const int nd = space.dofs_per_elem();
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nd; ++j) out[i][j] = 0.0;

  const ElemGeom g = element_geometry(*space.mesh, elem);
  double vals[6];
  double grads[6][2];
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    const double w = rule.weights[q] * g.area;
    const double x = l[0] * g.v[0].x + l[1] * g.v[1].x + l[2] * g.v[2].x;
    const double y = l[0] * g.v[0].y + l[1] * g.v[1].y + l[2] * g.v[2].y;
    if (kind == FormKind::Stiffness) {
      const auto a = field.diffusion(x, y);
      shape_gradients(space.degree, l, g.gl, grads);
      for (int i = 0; i < nd; ++i) {
        const double agx = a[0] * grads[i][0] + a[1] * grads[i][1];
        const double agy = a[1] * grads[i][0] + a[2] * grads[i][1];
        for (int j = i; j < nd; ++j)
          out[i][j] += w * (agx * grads[j][0] + agy * grads[j][1]);
      }
    } else {
      const double phi = field.weight(x, y);
      shape_values(space.degree, l, vals);
      for (int i = 0; i < nd; ++i)
        for (int j = i; j < nd; ++j) out[i][j] += w * phi * vals[i] * vals[j];
    }
  }
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < i; ++j) out[i][j] = out[j][i];
}

const QuadRule& default_rule(const FeSpace& space, const CoefficientField& field) {
  if (field.constant_coeffs && space.degree == 1) return quad_degree2();
  return quad_degree6();
}

std::int64_t pack_lattice(int ix, int iy, int stride) {
  return static_cast<std::int64_t>(iy) * stride + ix;
}

}  // namespace

FeSpace build_space(std::shared_ptr<const Mesh> mesh, int degree) {
  if (degree != 1 && degree != 2) throw ConfigError("unsupported element degree (use 1 or 2)");

  FeSpace s;
  s.mesh = std::move(mesh);
  s.degree = degree;
  const Mesh& m = *s.mesh;
  const int stride = 2 * m.nx + 1;

  // Dof lattice points in half-units: vertices at even coordinates, edge
  // midpoints (P2) at odd ones.
  auto elem_dof_lattice = [&](int e) {
    std::array<std::array<int, 2>, 6> pts{};
    const auto& t = m.triangles[e];
    for (int i = 0; i < 3; ++i) {
      pts[i] = {2 * m.vertex_lattice[t[i]][0], 2 * m.vertex_lattice[t[i]][1]};
    }
    if (degree == 2) {
      const int ea[3] = {0, 1, 2};
      const int eb[3] = {1, 2, 0};
      for (int e2 = 0; e2 < 3; ++e2) {
        pts[3 + e2] = {(pts[ea[e2]][0] + pts[eb[e2]][0]) / 2,
                       (pts[ea[e2]][1] + pts[eb[e2]][1]) / 2};
      }
    }
    return pts;
  };

  std::vector<std::int64_t> keys;
  keys.reserve(m.triangles.size() * s.dofs_per_elem());
  for (std::size_t e = 0; e < m.triangles.size(); ++e) {
    const auto pts = elem_dof_lattice(static_cast<int>(e));
    for (int i = 0; i < s.dofs_per_elem(); ++i)
      keys.push_back(pack_lattice(pts[i][0], pts[i][1], stride));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  s.ndofs = static_cast<int>(keys.size());
  std::unordered_map<std::int64_t, int> dof_of;
  dof_of.reserve(keys.size() * 2);
  s.dof_coords.reserve(keys.size());
  s.dof_lattice.reserve(keys.size());
  const double hx = 0.5 * m.cell_dx();
  const double hy = 0.5 * m.cell_dy();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const int iy = static_cast<int>(keys[i] / stride);
    const int ix = static_cast<int>(keys[i] % stride);
    dof_of.emplace(keys[i], static_cast<int>(i));
    s.dof_lattice.push_back({ix, iy});
    s.dof_coords.push_back({m.domain.x_min + ix * hx, m.domain.y_min + iy * hy});
  }

  s.connectivity.resize(m.triangles.size());
  for (std::size_t e = 0; e < m.triangles.size(); ++e) {
    const auto pts = elem_dof_lattice(static_cast<int>(e));
    auto& conn = s.connectivity[e];
    conn.fill(-1);
    for (int i = 0; i < s.dofs_per_elem(); ++i)
      conn[i] = dof_of.at(pack_lattice(pts[i][0], pts[i][1], stride));
  }

  // Boundary dofs: endpoints (and P2 midpoints) of boundary edges.
  std::vector<char> on_boundary(s.ndofs, 0);
  for (const auto& be : m.boundary_edges) {
    const auto& la = m.vertex_lattice[be[0]];
    const auto& lb = m.vertex_lattice[be[1]];
    on_boundary[dof_of.at(pack_lattice(2 * la[0], 2 * la[1], stride))] = 1;
    on_boundary[dof_of.at(pack_lattice(2 * lb[0], 2 * lb[1], stride))] = 1;
    if (degree == 2)
      on_boundary[dof_of.at(pack_lattice(la[0] + lb[0], la[1] + lb[1], stride))] = 1;
  }
  s.interior_index.assign(s.ndofs, -1);
  for (int d = 0; d < s.ndofs; ++d) {
    if (on_boundary[d]) {
      s.boundary_dofs.push_back(d);
    } else {
      s.interior_index[d] = static_cast<int>(s.interior_dofs.size());
      s.interior_dofs.push_back(d);
    }
  }
  return s;
}

SparseSymMatrix assemble_form(const FeSpace& space, const CoefficientField& field, FormKind kind,
                              const QuadRule* rule, std::span<const int> elems) {
  const QuadRule& r = rule ? *rule : default_rule(space, field);
  const int nd = space.dofs_per_elem();

  std::vector<int> all;
  if (elems.empty()) {
    all.resize(space.mesh->triangles.size());
    for (std::size_t e = 0; e < all.size(); ++e) all[e] = static_cast<int>(e);
    elems = all;
  }

  std::vector<Triplet> upper;
  upper.reserve(elems.size() * nd * (nd + 1) / 2);
  double local[6][6];
  for (const int e : elems) {
    local_matrix(space, field, kind, r, e, local);
    const auto& conn = space.connectivity[e];
    for (int i = 0; i < nd; ++i) {
      for (int j = i; j < nd; ++j) {
        const int gi = conn[i];
        const int gj = conn[j];
        upper.push_back({std::min(gi, gj), std::max(gi, gj), local[i][j]});
      }
    }
  }
  return SparseSymMatrix::from_upper_triplets(space.ndofs, std::move(upper));
}

Eigen::MatrixXd element_matrix(const FeSpace& space, const CoefficientField& field, FormKind kind,
                               int elem, const QuadRule* rule) {
  const QuadRule& r = rule ? *rule : default_rule(space, field);
  const int nd = space.dofs_per_elem();
  double local[6][6];
  local_matrix(space, field, kind, r, elem, local);
  Eigen::MatrixXd out(nd, nd);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nd; ++j) out(i, j) = local[i][j];
  return out;
}

SparseMatrix prolongation_matrix(const FeSpace& from, const FeSpace& to) {
  const Mesh& cm = *from.mesh;
  const Mesh& fm = *to.mesh;
  if (from.degree != to.degree) throw ConfigError("prolongation requires equal degrees");
  if (fm.level != cm.level + 1 || fm.parent.size() != fm.triangles.size() ||
      fm.nx != 2 * cm.nx || fm.ny != 2 * cm.ny)
    throw ConfigError("prolongation requires one regular refinement between the spaces");

  const int nd = to.dofs_per_elem();
  std::vector<char> filled(to.ndofs, 0);
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(to.ndofs) * (from.degree == 1 ? 3 : 6));

  double vals[6];
  for (std::size_t fe = 0; fe < fm.triangles.size(); ++fe) {
    const int pe = fm.parent[fe];
    const auto& cconn = from.connectivity[pe];
    // Parent vertices in fine dof half-units (4x the coarse vertex lattice).
    const auto& pt = cm.triangles[pe];
    const std::int64_t x0 = 4LL * cm.vertex_lattice[pt[0]][0];
    const std::int64_t y0 = 4LL * cm.vertex_lattice[pt[0]][1];
    const std::int64_t x1 = 4LL * cm.vertex_lattice[pt[1]][0];
    const std::int64_t y1 = 4LL * cm.vertex_lattice[pt[1]][1];
    const std::int64_t x2 = 4LL * cm.vertex_lattice[pt[2]][0];
    const std::int64_t y2 = 4LL * cm.vertex_lattice[pt[2]][1];
    const double denom = static_cast<double>((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0));

    for (int i = 0; i < nd; ++i) {
      const int fdof = to.connectivity[fe][i];
      if (filled[fdof]) continue;
      filled[fdof] = 1;
      const std::int64_t px = to.dof_lattice[fdof][0];
      const std::int64_t py = to.dof_lattice[fdof][1];
      const double l1 =
          static_cast<double>((px - x0) * (y2 - y0) - (x2 - x0) * (py - y0)) / denom;
      const double l2 =
          static_cast<double>((x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)) / denom;
      const std::array<double, 3> l = {1.0 - l1 - l2, l1, l2};
      shape_values(from.degree, l, vals);
      for (int c = 0; c < nd; ++c) {
        if (vals[c] != 0.0) entries.push_back({fdof, cconn[c], vals[c]});
      }
    }
  }
  return SparseMatrix::from_triplets(to.ndofs, from.ndofs, std::move(entries));
}

Vector prolongate(const Vector& coeffs_full, const FeSpace& from, const FeSpace& to) {
  if (coeffs_full.size() != from.ndofs)
    throw ConfigError("prolongate: coefficient vector does not match the source space");
  return prolongation_matrix(from, to).apply(coeffs_full);
}

Vector expand_interior(const FeSpace& space, const Vector& interior_coeffs) {
  if (interior_coeffs.size() != static_cast<int>(space.interior_dofs.size()))
    throw ConfigError("expand_interior: size mismatch");
  Vector full = Vector::Zero(space.ndofs);
  for (std::size_t i = 0; i < space.interior_dofs.size(); ++i)
    full[space.interior_dofs[i]] = interior_coeffs[static_cast<int>(i)];
  return full;
}

Vector restrict_interior(const FeSpace& space, const Vector& full_coeffs) {
  if (full_coeffs.size() != space.ndofs) throw ConfigError("restrict_interior: size mismatch");
  Vector v(space.interior_dofs.size());
  for (std::size_t i = 0; i < space.interior_dofs.size(); ++i)
    v[static_cast<int>(i)] = full_coeffs[space.interior_dofs[i]];
  return v;
}

double rayleigh_quotient(const Vector& psi, const SparseSymMatrix& a, const SparseSymMatrix& b) {
  if (psi.size() != a.rows() || psi.size() != b.rows())
    throw ConfigError("rayleigh_quotient: size mismatch");
  if (psi.norm() == 0.0) throw ConfigError("rayleigh_quotient: psi must be nonzero");
  const double den = psi.dot(b.apply(psi));
  if (den == 0.0) throw ConfigError("rayleigh_quotient: zero denominator");
  return psi.dot(a.apply(psi)) / den;
}

ErrorReport compute_errors(const FeSpace& space, const CoefficientField& field,
                           const Vector& coeffs_full, double lambda_h, double lambda_ref,
                           const ExactFunction* reference) {
  ErrorReport rep;
  rep.eig_err = std::abs(lambda_h - lambda_ref);
  if (!reference) {
    rep.h1_err = std::numeric_limits<double>::quiet_NaN();
    rep.l2_err = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  if (coeffs_full.size() != space.ndofs) throw ConfigError("compute_errors: size mismatch");

  static const QuadRule rule = quad_gauss_duffy(7);
  const int nd = space.dofs_per_elem();
  double vals[6];
  double grads[6][2];

  // Accumulate the cross terms separately so the sign can be aligned after
  // the sweep (eigenvectors are defined up to sign).
  double s_hh = 0, s_hu = 0, s_uu = 0, g_hh = 0, g_hu = 0, g_uu = 0, w_hu = 0;
  for (std::size_t e = 0; e < space.mesh->triangles.size(); ++e) {
    const ElemGeom g = element_geometry(*space.mesh, static_cast<int>(e));
    const auto& conn = space.connectivity[e];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const double w = rule.weights[q] * g.area;
      const double x = l[0] * g.v[0].x + l[1] * g.v[1].x + l[2] * g.v[2].x;
      const double y = l[0] * g.v[0].y + l[1] * g.v[1].y + l[2] * g.v[2].y;
      shape_values(space.degree, l, vals);
      shape_gradients(space.degree, l, g.gl, grads);
      double uh = 0, uhx = 0, uhy = 0;
      for (int i = 0; i < nd; ++i) {
        const double c = coeffs_full[conn[i]];
        uh += c * vals[i];
        uhx += c * grads[i][0];
        uhy += c * grads[i][1];
      }
      const double u = reference->value(x, y);
      const auto gu = reference->gradient(x, y);
      s_hh += w * uh * uh;
      s_hu += w * uh * u;
      s_uu += w * u * u;
      g_hh += w * (uhx * uhx + uhy * uhy);
      g_hu += w * (uhx * gu[0] + uhy * gu[1]);
      g_uu += w * (gu[0] * gu[0] + gu[1] * gu[1]);
      w_hu += w * field.weight(x, y) * uh * u;
    }
  }
  const double sign = (w_hu >= 0.0) ? 1.0 : -1.0;
  const double l2sq = std::max(0.0, s_hh - 2.0 * sign * s_hu + s_uu);
  const double h1sq = l2sq + std::max(0.0, g_hh - 2.0 * sign * g_hu + g_uu);
  rep.l2_err = std::sqrt(l2sq);
  rep.h1_err = std::sqrt(h1sq);
  return rep;
}

Vector galerkin_project(const Vector& u_fine_full, const FeSpace& coarse,
                        const SparseSymMatrix& a_coarse, const SparseSymMatrix& a_fine,
                        const SparseMatrix& p) {
  if (u_fine_full.size() != a_fine.rows() || p.rows() != a_fine.rows() ||
      p.cols() != coarse.ndofs)
    throw ConfigError("galerkin_project: size mismatch");
  const int dim = static_cast<int>(coarse.interior_dofs.size());
  if (dim > 5000) throw ConfigError("galerkin_project: coarse space too large for a dense solve");

  const Vector rhs = restrict_interior(coarse, p.apply_transpose(a_fine.apply(u_fine_full)));
  const Eigen::MatrixXd acc = to_dense(extract_submatrix(a_coarse, coarse.interior_dofs));
  Eigen::LLT<Eigen::MatrixXd> llt(acc);
  if (llt.info() != Eigen::Success)
    throw SolverError("galerkin_project: coarse stiffness is not SPD");
  return expand_interior(coarse, llt.solve(rhs));
}

}  // namespace mleig
