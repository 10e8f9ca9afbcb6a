#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "starspec/experiments.hpp"

namespace starspec::cli {

/// Everything a run needs, after the config file, flags and per-command
/// defaults have been merged. Angles are in radians.
struct RunConfig {
  std::string subcommand;
  std::string model = "star";  // star | robin | delta-line | half-neumann | half-dirichlet
  std::string graph = "broken";  // line | half-line | broken | angles
  std::vector<double> angles;
  double theta = 0.3;
  double alpha = -1.0;
  double gamma = 1.0;
  MeshParams mesh;
  SolverOptions solver;
  int k = 4;                 // eigenpairs (solve, threshold, converge, scale-check)
  int n = 1;                 // eigenvalue index / count (sweep-theta, asymptotics, compare)
  double wave_number = 0.0;  // weyl --k
  std::vector<int> ns;       // weyl --n
  double weyl_a = 0.0;       // 0: default
  int quad_points = 32;
  double max_ratio = 0.25;
  std::vector<double> thetas;
  std::vector<double> R_ladder;
  std::vector<double> h_ladder;
  std::vector<double> factors;
  std::vector<double> tolerances;
  bool degrees = false;
  int jobs = 0;
  bool dump = false;
  std::string out_dir = "results";
};

nlohmann::json to_json(const RunConfig& config);

/// Parses argv (argv[0] is the program name), runs the subcommand and writes
/// its CSV/JSON. Returns 0 on success, 1 when a check fails or a solve
/// breaks down, 2 on invalid input.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace starspec::cli
