// SPDX-License-Identifier: Apache-2.0
//
// Overlapping subdomain system on top of the coarse triangulation: disjoint
// blocks D_j, enlarged overlaps Omega_j, shrunk inner regions G_j and the
// connecting strip, all as element/dof index sets usable at every level.
#pragma once

#include <vector>

#include "mleig/fespace.hpp"
#include "mleig/mesh.hpp"

namespace mleig {

struct Region {
  enum class Kind {
    Domain,   // all of Omega
    Block,    // D_j
    Overlap,  // Omega_j
    Inner,    // G_j
    Strip,    // Omega minus the closed G_j's
  };
  Kind kind = Kind::Domain;
  int j = 0;

  static Region domain() { return {Kind::Domain, 0}; }
  static Region block(int j) { return {Kind::Block, j}; }
  static Region overlap(int j) { return {Kind::Overlap, j}; }
  static Region inner(int j) { return {Kind::Inner, j}; }
  static Region strip() { return {Kind::Strip, 0}; }
};

// Closed axis-aligned rectangle in coarse-cell units.
struct IRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
};

// Dof index set of a region restriction; always a subset of the global
// interior dofs (functions vanish on the domain boundary). With zero_trace,
// only dofs strictly inside the region are kept, realizing the local spaces
// with zero trace on the region boundary.
struct SubSpace {
  Region region;
  int level = 0;
  bool zero_trace = false;
  std::vector<int> dofs;  // ascending global indices
};

class Partition {
 public:
  int num_subdomains() const { return m_; }
  int grid_side() const { return side_; }
  int overlap_cells() const { return delta_cells_; }
  double overlap_width() const;

  IRect block_rect(int j) const { return blocks_.at(j); }
  IRect overlap_rect(int j) const { return overlaps_.at(j); }
  IRect inner_rect(int j) const { return inners_.at(j); }
  int coarse_nx() const { return nx0_; }
  int coarse_ny() const { return ny0_; }
  const DomainRect& domain() const { return domain_; }

  // Caches the element index sets of every region at the mesh's level.
  // Level 0 is classified geometrically; finer levels inherit membership
  // through the parent map, so levels must be registered in order.
  void register_level(const Mesh& mesh);
  bool level_registered(int level) const;
  const std::vector<int>& region_elements(int level, Region region) const;

 private:
  friend Partition build_partition(const Mesh& coarse, int m, double delta);

  struct LevelCache {
    std::vector<std::vector<int>> block_elems;
    std::vector<std::vector<int>> overlap_elems;
    std::vector<std::vector<int>> inner_elems;
    std::vector<int> strip_elems;
    std::vector<int> domain_elems;
  };

  int m_ = 0;
  int side_ = 0;
  int delta_cells_ = 0;
  int nx0_ = 0;
  int ny0_ = 0;
  DomainRect domain_;
  double cell_h_ = 0.0;
  std::vector<IRect> blocks_, overlaps_, inners_;
  std::vector<LevelCache> levels_;
};

// Builds the subdomain system on a sqrt(m) x sqrt(m) block grid aligned with
// the coarse mesh. Subdomain 0 is the top-left block, numbering row-major.
// delta must be a positive multiple of the coarse cell size, with 2*delta
// strictly below the block side length.
Partition build_partition(const Mesh& coarse, int m, double delta);

// Dof index set of a region at the space's level (which must be registered
// in the partition).
SubSpace restrict_space(const FeSpace& space, const Partition& partition, Region region,
                        bool zero_trace);

}  // namespace mleig
