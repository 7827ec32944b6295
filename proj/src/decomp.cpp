// SPDX-License-Identifier: Apache-2.0

#include "mleig/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mleig {

namespace {

bool centroid_in_open_rect(const IRect& r, int cx3, int cy3, int scale) {
  // Element centroid times 3, in mesh lattice units; rect bounds are in
  // coarse cells, so scale them to the mesh level first.
  return cx3 > 3 * r.x0 * scale && cx3 < 3 * r.x1 * scale && cy3 > 3 * r.y0 * scale &&
         cy3 < 3 * r.y1 * scale;
}

}  // namespace

double Partition::overlap_width() const { return delta_cells_ * cell_h_; }

Partition build_partition(const Mesh& coarse, int m, double delta) {
  if (coarse.level != 0) throw ConfigError("partition must be built on the coarsest mesh");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  if (m < 1 || side * side != m) throw ConfigError("subdomain count m must be a perfect square");

  const double hx = coarse.cell_dx();
  const double hy = coarse.cell_dy();
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
    throw ConfigError("partition requires square coarse cells");
  if (coarse.nx % side != 0 || coarse.ny % side != 0)
    throw ConfigError("block grid does not align with the coarse mesh");

  if (!(delta > 0.0)) throw ConfigError("overlap width delta must be positive");
  const double ratio = delta / hx;
  const int dc = static_cast<int>(std::lround(ratio));
  if (dc < 1 || std::abs(ratio - dc) > 1e-9)
    throw ConfigError("overlap width delta must be a positive multiple of the coarse cell size");

  const int bw = coarse.nx / side;
  const int bh = coarse.ny / side;
  if (2 * dc >= bw || 2 * dc >= bh)
    throw ConfigError("overlap width leaves a degenerate inner region (2*delta >= block side)");

  Partition p;
  p.m_ = m;
  p.side_ = side;
  p.delta_cells_ = dc;
  p.nx0_ = coarse.nx;
  p.ny0_ = coarse.ny;
  p.domain_ = coarse.domain;
  p.cell_h_ = hx;

  // Blocks numbered row-major from the top-left corner.
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      IRect d;
      d.x0 = c * bw;
      d.x1 = (c + 1) * bw;
      d.y1 = coarse.ny - r * bh;
      d.y0 = d.y1 - bh;
      p.blocks_.push_back(d);

      IRect om;
      om.x0 = std::max(0, d.x0 - dc);
      om.x1 = std::min(coarse.nx, d.x1 + dc);
      om.y0 = std::max(0, d.y0 - dc);
      om.y1 = std::min(coarse.ny, d.y1 + dc);
      p.overlaps_.push_back(om);

      // Shrink away from interior interfaces only; sides on the domain
      // boundary stay put.
      IRect g;
      g.x0 = (d.x0 == 0) ? 0 : d.x0 + dc;
      g.x1 = (d.x1 == coarse.nx) ? coarse.nx : d.x1 - dc;
      g.y0 = (d.y0 == 0) ? 0 : d.y0 + dc;
      g.y1 = (d.y1 == coarse.ny) ? coarse.ny : d.y1 - dc;
      p.inners_.push_back(g);
    }
  }

  p.register_level(coarse);
  return p;
}

void Partition::register_level(const Mesh& mesh) {
  if (mesh.level < static_cast<int>(levels_.size())) return;  // already cached
  if (mesh.level != static_cast<int>(levels_.size()))
    throw ConfigError("partition levels must be registered in refinement order");

  LevelCache cache;
  cache.block_elems.resize(m_);
  cache.overlap_elems.resize(m_);
  cache.inner_elems.resize(m_);
  const int nelems = static_cast<int>(mesh.triangles.size());
  cache.domain_elems.resize(nelems);
  for (int e = 0; e < nelems; ++e) cache.domain_elems[e] = e;

  if (mesh.level == 0) {
    const int scale = 1;
    for (int e = 0; e < nelems; ++e) {
      const auto& t = mesh.triangles[e];
      int cx3 = 0, cy3 = 0;
      for (int i = 0; i < 3; ++i) {
        cx3 += mesh.vertex_lattice[t[i]][0];
        cy3 += mesh.vertex_lattice[t[i]][1];
      }
      bool in_some_inner = false;
      for (int j = 0; j < m_; ++j) {
        if (centroid_in_open_rect(blocks_[j], cx3, cy3, scale)) cache.block_elems[j].push_back(e);
        if (centroid_in_open_rect(overlaps_[j], cx3, cy3, scale))
          cache.overlap_elems[j].push_back(e);
        if (centroid_in_open_rect(inners_[j], cx3, cy3, scale)) {
          cache.inner_elems[j].push_back(e);
          in_some_inner = true;
        }
      }
      if (!in_some_inner) cache.strip_elems.push_back(e);
    }
  } else {
    // Children inherit region membership: every region is a union of coarse
    // cells, so a child of a member element stays inside the region.
    if (mesh.parent.size() != mesh.triangles.size())
      throw ConfigError("refined mesh is missing its parent map");
    const LevelCache& prev = levels_.back();
    auto propagate = [&](const std::vector<int>& parents, std::vector<int>& out) {
      out.reserve(parents.size() * 4);
      for (const int t : parents)
        for (int c = 0; c < 4; ++c) out.push_back(4 * t + c);
      std::sort(out.begin(), out.end());
    };
    for (int j = 0; j < m_; ++j) {
      propagate(prev.block_elems[j], cache.block_elems[j]);
      propagate(prev.overlap_elems[j], cache.overlap_elems[j]);
      propagate(prev.inner_elems[j], cache.inner_elems[j]);
    }
    propagate(prev.strip_elems, cache.strip_elems);
  }
  levels_.push_back(std::move(cache));
}

bool Partition::level_registered(int level) const {
  return level >= 0 && level < static_cast<int>(levels_.size());
}

const std::vector<int>& Partition::region_elements(int level, Region region) const {
  if (!level_registered(level))
    throw ConfigError("region element sets are not cached at level " + std::to_string(level));
  const LevelCache& cache = levels_[level];
  switch (region.kind) {
    case Region::Kind::Domain:
      return cache.domain_elems;
    case Region::Kind::Block:
      return cache.block_elems.at(region.j);
    case Region::Kind::Overlap:
      return cache.overlap_elems.at(region.j);
    case Region::Kind::Inner:
      return cache.inner_elems.at(region.j);
    case Region::Kind::Strip:
      return cache.strip_elems;
  }
  throw ConfigError("unknown region id");
}

SubSpace restrict_space(const FeSpace& space, const Partition& partition, Region region,
                        bool zero_trace) {
  const int level = space.level();
  if (!partition.level_registered(level))
    throw ConfigError("region element sets are not cached at level " + std::to_string(level));

  // Dof lattice coordinates are in half-units of the level's cell size; a
  // coarse-cell bound c maps to c * 2^(level+1).
  const int scale = 1 << (level + 1);
  auto in_rect = [&](const IRect& r, int px, int py, bool strict) {
    if (strict)
      return px > r.x0 * scale && px < r.x1 * scale && py > r.y0 * scale && py < r.y1 * scale;
    return px >= r.x0 * scale && px <= r.x1 * scale && py >= r.y0 * scale && py <= r.y1 * scale;
  };

  SubSpace sub;
  sub.region = region;
  sub.level = level;
  sub.zero_trace = zero_trace;

  for (const int d : space.interior_dofs) {
    const int px = space.dof_lattice[d][0];
    const int py = space.dof_lattice[d][1];
    bool keep = false;
    switch (region.kind) {
      case Region::Kind::Domain:
        keep = true;  // interior dofs already realize the zero-trace space on Omega
        break;
      case Region::Kind::Block:
        keep = in_rect(partition.block_rect(region.j), px, py, zero_trace);
        break;
      case Region::Kind::Overlap:
        keep = in_rect(partition.overlap_rect(region.j), px, py, zero_trace);
        break;
      case Region::Kind::Inner:
        keep = in_rect(partition.inner_rect(region.j), px, py, zero_trace);
        break;
      case Region::Kind::Strip: {
        // Inside the strip = not inside any inner region; zero trace
        // additionally excludes the inner-region boundaries.
        keep = true;
        for (int j = 0; j < partition.num_subdomains() && keep; ++j) {
          if (in_rect(partition.inner_rect(j), px, py, !zero_trace)) keep = false;
        }
        break;
      }
    }
    if (keep) sub.dofs.push_back(d);
  }
  return sub;
}

}  // namespace mleig
