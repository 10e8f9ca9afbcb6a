#pragma once

#include <cmath>

#include "starspec/mesh.hpp"

namespace starspec::testing {

/// Unit disk cut along [0, 1] x {0}, triangulated by hand as a fan of eight
/// triangles. Vertex 0 is the centre, 1..8 the rim at angles k*pi/4, and 9 is
/// the second copy of (1, 0), on the lower side of the cut.
inline CrackMesh hand_disk_mesh() {
  CrackMesh m;
  m.kind = MeshKind::custom;
  m.vertices.emplace_back(0.0, 0.0);
  for (int k = 0; k < 8; ++k)
    m.vertices.emplace_back(std::cos(k * M_PI / 4), std::sin(k * M_PI / 4));
  m.vertices.emplace_back(1.0, 0.0);
  for (int k = 1; k <= 8; ++k) {
    m.triangles.emplace_back(0, k, k == 8 ? 9 : k + 1);
    m.triangle_sector.push_back(0);
  }
  m.crack_pairs.push_back({1, 9, 0});
  m.origin_copies = {0};
  m.branch_plus_sector = {0};
  m.branch_minus_sector = {0};
  m.edge_groups["branch_0_plus"] = {{0, 1}};
  m.edge_groups["branch_0_minus"] = {{0, 9}};
  auto& outer = m.edge_groups["outer"];
  for (int k = 1; k <= 8; ++k) outer.push_back({k, k == 8 ? 9 : k + 1});
  m.radius = 1.0;
  return m;
}

inline MeshParams coarse_params(double R = 2.0, double h = 0.25) {
  MeshParams p;
  p.R = R;
  p.h = h;
  p.core_radius = 1.0;
  return p;
}

}  // namespace starspec::testing
