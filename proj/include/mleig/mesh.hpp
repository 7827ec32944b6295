// SPDX-License-Identifier: Apache-2.0
//
// Structured conforming triangulations of a rectangle and the nested
// regular-refinement hierarchy built on top of them.
#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include "mleig/errors.hpp"

namespace mleig {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct DomainRect {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
};

// Conforming triangulation of a rectangle. Vertices carry exact integer
// lattice coordinates (units of the current cell size), which makes
// refinement nesting, dof dedup and region membership tests exact.
struct Mesh {
  DomainRect domain;
  int level = 0;
  int nx = 0;  // cells per direction at this level
  int ny = 0;

  std::vector<Point> vertices;
  std::vector<std::array<int, 2>> vertex_lattice;  // (ix, iy) in 0..nx x 0..ny
  std::vector<std::array<int, 3>> triangles;       // counterclockwise
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<int> parent;  // triangle -> parent triangle at level-1; empty at level 0
  double h_max = 0.0;

  double cell_dx() const { return (domain.x_max - domain.x_min) / nx; }
  double cell_dy() const { return (domain.y_max - domain.y_min) / ny; }
  Point lattice_point(int ix, int iy) const {
    return {domain.x_min + ix * cell_dx(), domain.y_min + iy * cell_dy()};
  }
};

// Uniform triangulation with cell size H; every square cell is split along
// the lower-left/upper-right diagonal. H must divide both side lengths into
// an integer number of cells.
Mesh build_structured_mesh(const DomainRect& domain, double H);

// Splits every triangle into 4 congruent children through the edge
// midpoints; vertex indices of the input are preserved, midpoints appended.
Mesh refine_regular(const Mesh& mesh);

// Scan helpers used by the conformity/Euler checks.
std::size_t edge_count(const Mesh& mesh);
double min_signed_area(const Mesh& mesh);

// Plain-text "OFF"-style dump (vertex count, coordinates, triangle indices);
// debugging aid only.
void write_off(const Mesh& mesh, std::ostream& os);

}  // namespace mleig
