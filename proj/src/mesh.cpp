// SPDX-License-Identifier: Apache-2.0

#include "mleig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>

namespace mleig {

namespace {

int checked_cell_count(double length, double H, const char* axis) {
  const double ratio = length / H;
  const int n = static_cast<int>(std::lround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError(std::string("mesh size H does not divide the ") + axis +
                      " side length into an integer number of cells");
  return n;
}

std::int64_t edge_key(int a, int b, int num_vertices) {
  if (a > b) std::swap(a, b);
  return static_cast<std::int64_t>(a) * num_vertices + b;
}

// Longest edge over all triangles, measured from lattice offsets so that
// h_max halves exactly under refinement.
double compute_h_max(const Mesh& m) {
  const double dx = m.cell_dx();
  const double dy = m.cell_dy();
  double h = 0.0;
  for (const auto& t : m.triangles) {
    for (int e = 0; e < 3; ++e) {
      const auto& a = m.vertex_lattice[t[e]];
      const auto& b = m.vertex_lattice[t[(e + 1) % 3]];
      const double ex = (b[0] - a[0]) * dx;
      const double ey = (b[1] - a[1]) * dy;
      h = std::max(h, std::sqrt(ex * ex + ey * ey));
    }
  }
  return h;
}

void compute_boundary_edges(Mesh& m) {
  const int nv = static_cast<int>(m.vertices.size());
  std::map<std::int64_t, int> count;
  for (const auto& t : m.triangles) {
    for (int e = 0; e < 3; ++e) count[edge_key(t[e], t[(e + 1) % 3], nv)]++;
  }
  m.boundary_edges.clear();
  for (const auto& [key, c] : count) {
    if (c == 1) {
      const int a = static_cast<int>(key / nv);
      const int b = static_cast<int>(key % nv);
      m.boundary_edges.push_back({a, b});
    }
  }
}

}  // namespace

Mesh build_structured_mesh(const DomainRect& domain, double H) {
  if (!(domain.x_min < domain.x_max) || !(domain.y_min < domain.y_max))
    throw ConfigError("domain rectangle must have positive side lengths");
  if (!(H > 0.0)) throw ConfigError("mesh size H must be positive");

  Mesh m;
  m.domain = domain;
  m.level = 0;
  m.nx = checked_cell_count(domain.x_max - domain.x_min, H, "x");
  m.ny = checked_cell_count(domain.y_max - domain.y_min, H, "y");

  // Vertices in lexicographic (y, x) order.
  m.vertices.reserve(static_cast<std::size_t>(m.nx + 1) * (m.ny + 1));
  for (int iy = 0; iy <= m.ny; ++iy) {
    for (int ix = 0; ix <= m.nx; ++ix) {
      m.vertices.push_back(m.lattice_point(ix, iy));
      m.vertex_lattice.push_back({ix, iy});
    }
  }

  const auto vid = [&](int ix, int iy) { return iy * (m.nx + 1) + ix; };
  m.triangles.reserve(static_cast<std::size_t>(2) * m.nx * m.ny);
  for (int iy = 0; iy < m.ny; ++iy) {
    for (int ix = 0; ix < m.nx; ++ix) {
      const int v00 = vid(ix, iy);
      const int v10 = vid(ix + 1, iy);
      const int v01 = vid(ix, iy + 1);
      const int v11 = vid(ix + 1, iy + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }

  compute_boundary_edges(m);
  m.h_max = compute_h_max(m);
  return m;
}

Mesh refine_regular(const Mesh& mesh) {
  Mesh fine;
  fine.domain = mesh.domain;
  fine.level = mesh.level + 1;
  fine.nx = 2 * mesh.nx;
  fine.ny = 2 * mesh.ny;

  // Parent vertices keep their indices; lattice coordinates double.
  fine.vertices.reserve(mesh.vertices.size());
  fine.vertex_lattice.reserve(mesh.vertices.size());
  for (const auto& l : mesh.vertex_lattice) {
    fine.vertex_lattice.push_back({2 * l[0], 2 * l[1]});
    fine.vertices.push_back(fine.lattice_point(2 * l[0], 2 * l[1]));
  }

  // One new vertex per parent edge, appended in sorted edge order.
  const int nv = static_cast<int>(mesh.vertices.size());
  std::map<std::int64_t, int> midpoint;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) midpoint[edge_key(t[e], t[(e + 1) % 3], nv)] = -1;
  }
  for (auto& [key, id] : midpoint) {
    const int a = static_cast<int>(key / nv);
    const int b = static_cast<int>(key % nv);
    const int ix = mesh.vertex_lattice[a][0] + mesh.vertex_lattice[b][0];
    const int iy = mesh.vertex_lattice[a][1] + mesh.vertex_lattice[b][1];
    id = static_cast<int>(fine.vertices.size());
    fine.vertex_lattice.push_back({ix, iy});
    fine.vertices.push_back(fine.lattice_point(ix, iy));
  }

  fine.triangles.reserve(4 * mesh.triangles.size());
  fine.parent.reserve(4 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int a = tri[0], b = tri[1], c = tri[2];
    const int mab = midpoint.at(edge_key(a, b, nv));
    const int mbc = midpoint.at(edge_key(b, c, nv));
    const int mca = midpoint.at(edge_key(c, a, nv));
    fine.triangles.push_back({a, mab, mca});
    fine.triangles.push_back({mab, b, mbc});
    fine.triangles.push_back({mca, mbc, c});
    fine.triangles.push_back({mab, mbc, mca});
    for (int k = 0; k < 4; ++k) fine.parent.push_back(static_cast<int>(t));
  }

  compute_boundary_edges(fine);
  fine.h_max = compute_h_max(fine);
  return fine;
}

std::size_t edge_count(const Mesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  std::map<std::int64_t, int> count;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) count[edge_key(t[e], t[(e + 1) % 3], nv)]++;
  }
  return count.size();
}

double min_signed_area(const Mesh& mesh) {
  double amin = std::numeric_limits<double>::max();
  for (const auto& t : mesh.triangles) {
    const Point& p0 = mesh.vertices[t[0]];
    const Point& p1 = mesh.vertices[t[1]];
    const Point& p2 = mesh.vertices[t[2]];
    const double a2 = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    amin = std::min(amin, 0.5 * a2);
  }
  return amin;
}

void write_off(const Mesh& mesh, std::ostream& os) {
  os << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const Point& p : mesh.vertices) os << p.x << ' ' << p.y << " 0\n";
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace mleig
