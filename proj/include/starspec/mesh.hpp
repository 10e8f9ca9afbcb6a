#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "starspec/geometry.hpp"

namespace starspec {

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class OuterCondition { dirichlet, neumann };
enum class HalfBoundary { neumann, dirichlet };

/// Controls the polar, interface-graded triangulations.
///
/// Rings sit at radii k*h beyond `core_radius`; inside it they follow
/// core*(i/m)^grading, so grading > 1 concentrates rings at the corner. Along
/// each ring, the arc spacing starts at the local radial spacing next to an
/// interface (or Robin side) and grows geometrically by `growth` towards the
/// sector bisector, capped at `max_aspect` times the radial spacing. Every
/// ring position is a function of its index alone, so meshes for different R
/// (same h) are nested.
struct MeshParams {
  double R = 8.0;
  double h = 0.08;
  double grading = 1.0;
  double core_radius = 1.0;
  double growth = 1.2;
  double max_aspect = 8.0;
  OuterCondition outer = OuterCondition::dirichlet;

  /// All lengths multiplied by `factor`.
  MeshParams scaled(double factor) const;
};

void validate(const MeshParams& params);

struct CrackPair {
  int plus = -1;
  int minus = -1;
  int branch = -1;
};

struct Edge {
  int a = -1;
  int b = -1;
};

enum class MeshKind { star, sector, half_domain, custom };

/// Triangulation whose interface nodes are duplicated, one copy per side, so
/// that a nodal vector can jump across the interface.
///
/// Sector j lies counterclockwise of branch j; for branch k the "plus" copy
/// belongs to sector `branch_plus_sector[k]` and the "minus" copy to
/// `branch_minus_sector[k]`. The origin is not part of any crack pair; it has
/// one copy per sector, listed in `origin_copies` (indexed by sector tag).
struct CrackMesh {
  MeshKind kind = MeshKind::custom;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<int> triangle_sector;
  std::vector<CrackPair> crack_pairs;
  std::vector<int> origin_copies;
  std::vector<int> branch_plus_sector;
  std::vector<int> branch_minus_sector;
  std::map<std::string, std::vector<Edge>> edge_groups;
  std::vector<std::string> dirichlet_groups;
  double radius = 0.0;

  int dof_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int branch_count() const { return static_cast<int>(branch_plus_sector.size()); }
  int sector_count() const { return static_cast<int>(origin_copies.size()); }
  bool has_group(const std::string& name) const { return edge_groups.count(name) > 0; }
  const std::vector<Edge>& group(const std::string& name) const;
};

std::string branch_group(int branch, bool plus_side);

CrackMesh build_star_mesh(const StarGraph& graph, const MeshParams& params);

/// Truncated sector |arg z| < half_opening. Edge groups "robin" and "outer".
/// Identical, vertex for vertex, to the sector of a star mesh with the same
/// opening whose start angle is -half_opening.
CrackMesh build_sector_mesh(double half_opening, const MeshParams& params);

/// Truncated {x < y tan(theta)} with a crack on the positive y-axis: the upper
/// half of the broken-line star mesh rotated by pi/2 - theta.
CrackMesh build_half_domain_mesh(double theta, const MeshParams& params,
                                 HalfBoundary boundary);

/// Red refinement: every triangle split into four through edge midpoints.
CrackMesh refine(const CrackMesh& mesh);

/// Mesh with every vertex coordinate multiplied by `factor` > 0.
CrackMesh scaled(const CrackMesh& mesh, double factor);

/// Throws MeshError naming the first violated structural invariant.
void validate(const CrackMesh& mesh);

/// V - E + F of the triangulation with interface copies glued back together.
int euler_characteristic(const CrackMesh& mesh);

/// Sector tag of every vertex (each vertex is used by one sector only).
std::vector<int> vertex_sectors(const CrackMesh& mesh);

/// Per-branch map from plus-side vertex to its minus-side partner, origin
/// copies included.
std::vector<std::unordered_map<int, int>> branch_partners(const CrackMesh& mesh);

/// Vertices lying on any edge of the listed groups (sorted, unique).
std::vector<int> group_vertices(const CrackMesh& mesh, const std::vector<std::string>& groups);

/// Dofs removed by Dirichlet conditions.
std::vector<int> constrained_dofs(const CrackMesh& mesh);

Eigen::VectorXd interpolate(const CrackMesh& mesh,
                            const std::function<double(const Eigen::Vector2d&)>& f);

/// Interpolation of a function that may differ per sector.
Eigen::VectorXd interpolate(const CrackMesh& mesh,
                            const std::function<double(const Eigen::Vector2d&, int sector)>& f);

/// Radii of the ring lattice used by the polar builders, 0 first.
std::vector<double> ring_radii(const MeshParams& params);

/// Plain-text export: "v x y", "t i j k s" and "c p m b" lines.
void write_mesh(std::ostream& os, const CrackMesh& mesh);

}  // namespace starspec
