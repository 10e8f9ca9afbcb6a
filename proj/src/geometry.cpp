#include "starspec/geometry.hpp"

#include <cmath>
#include <sstream>

namespace starspec {

StarGraph make_star_graph(std::vector<double> angles, double alpha) {
  if (angles.empty())
    throw GeometryError("star graph needs at least one branch");
  if (!std::isfinite(alpha))
    throw GeometryError("coupling strength must be finite");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double a = angles[i];
    if (!std::isfinite(a) || a < 0.0 || a >= kTwoPi)
      throw GeometryError("branch angle outside [0, 2pi): " + std::to_string(a));
    if (i > 0 && a - angles[i - 1] <= kAngleTol)
      throw GeometryError("branch angles must be strictly increasing");
  }
  if (angles.size() > 1 && angles.front() + kTwoPi - angles.back() <= kAngleTol)
    throw GeometryError("first and last branch coincide modulo 2pi");
  return StarGraph{std::move(angles), alpha};
}

std::vector<Sector> sectors(const StarGraph& graph) {
  const auto& th = graph.angles;
  const std::size_t m = th.size();
  std::vector<Sector> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double start = th[j];
    const double end = (j + 1 < m) ? th[j + 1] : th[0] + kTwoPi;
    out.push_back(Sector{start, end, 0.5 * (end - start)});
  }
  return out;
}

StarGraph broken_line(double theta, double alpha) {
  if (!(theta > 0.0 && theta < 0.5 * kPi))
    throw GeometryError("broken line angle must lie in (0, pi/2); fold it first");
  return make_star_graph({theta, kTwoPi - theta}, alpha);
}

StarGraph line_graph(double alpha) { return make_star_graph({0.0, kPi}, alpha); }

StarGraph half_line_graph(double alpha) { return make_star_graph({0.0}, alpha); }

double fold_angle(double theta) {
  if (!(theta > 0.0 && theta < kPi))
    throw GeometryError("fold_angle expects theta in (0, pi)");
  return std::min(theta, kPi - theta);
}

double wrap_angle(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

double centered_angle(double angle) {
  double a = wrap_angle(angle);
  if (a > kPi) a -= kTwoPi;
  return a;
}

TruncatedDomain truncate(const StarGraph& graph, double radius) {
  if (!(radius > 0.0)) throw GeometryError("truncation radius must be positive");
  TruncatedDomain d;
  d.source = TruncatedDomain::Source::star_graph;
  d.radius = radius;
  d.graph = graph;
  return d;
}

TruncatedDomain truncate_sector(double half_opening, double radius) {
  if (!(radius > 0.0)) throw GeometryError("truncation radius must be positive");
  if (!(half_opening > 0.0 && half_opening < kPi))
    throw GeometryError("sector half-opening must lie in (0, pi)");
  TruncatedDomain d;
  d.source = TruncatedDomain::Source::sector;
  d.radius = radius;
  d.half_opening = half_opening;
  return d;
}

TruncatedDomain truncate_half_plane(double theta, double radius) {
  if (!(radius > 0.0)) throw GeometryError("truncation radius must be positive");
  if (!(theta > 0.0 && theta < 0.5 * kPi))
    throw GeometryError("half-plane problem angle must lie in (0, pi/2)");
  TruncatedDomain d;
  d.source = TruncatedDomain::Source::half_plane;
  d.radius = radius;
  d.half_opening = theta;
  return d;
}

std::string describe(const StarGraph& graph) {
  std::ostringstream os;
  os.precision(17);
  os << "angles=[";
  for (std::size_t i = 0; i < graph.angles.size(); ++i)
    os << (i ? "," : "") << graph.angles[i];
  os << "] alpha=" << graph.alpha;
  return os.str();
}

}  // namespace starspec
