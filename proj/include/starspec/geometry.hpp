#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace starspec {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Two angles closer than this are treated as coincident.
inline constexpr double kAngleTol = 1e-12;

class GeometryError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Rays from the origin at strictly increasing angles in [0, 2pi), with the
/// coupling strength of the interface interaction.
struct StarGraph {
  std::vector<double> angles;
  double alpha = -1.0;

  int branch_count() const { return static_cast<int>(angles.size()); }
};

/// Validates and returns a star graph. Angles must already be sorted and
/// lie in [0, 2pi); near-coincident branches are rejected, not merged.
StarGraph make_star_graph(std::vector<double> angles, double alpha = -1.0);

/// The connected component of the plane between two consecutive branches.
/// `end_angle` may exceed 2pi for the wrapping sector.
struct Sector {
  double start_angle = 0.0;
  double end_angle = 0.0;
  double half_opening = 0.0;

  double opening() const { return 2.0 * half_opening; }
  double bisector() const { return start_angle + half_opening; }
};

/// Sectors in cyclic order: sector j spans (theta_j, theta_{j+1}) with
/// theta_{M+1} = theta_1 + 2pi. A single branch yields one sector of opening 2pi.
std::vector<Sector> sectors(const StarGraph& graph);

/// Two branches at +-theta about the positive x-axis, theta in (0, pi/2).
StarGraph broken_line(double theta, double alpha = -1.0);

/// The x-axis, angles {0, pi}.
StarGraph line_graph(double alpha = -1.0);

/// The positive x half-axis.
StarGraph half_line_graph(double alpha = -1.0);

/// min(theta, pi - theta) for theta in (0, pi).
double fold_angle(double theta);

/// Maps an angle into [0, 2pi).
double wrap_angle(double angle);

/// Maps an angle into (-pi, pi].
double centered_angle(double angle);

/// Describes the bounded computational region cut out of an unbounded domain.
struct TruncatedDomain {
  enum class Source { star_graph, sector, half_plane };

  Source source = Source::star_graph;
  double radius = 1.0;
  StarGraph graph;          // star_graph
  double half_opening = 0;  // sector, or the angle of the half-plane problem
};

TruncatedDomain truncate(const StarGraph& graph, double radius);
TruncatedDomain truncate_sector(double half_opening, double radius);
TruncatedDomain truncate_half_plane(double theta, double radius);

std::string describe(const StarGraph& graph);

}  // namespace starspec
