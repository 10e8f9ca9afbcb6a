#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "starspec/assembly.hpp"
#include "starspec/eigensolve.hpp"
#include "starspec/geometry.hpp"
#include "starspec/mesh.hpp"

namespace starspec {

class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { star, robin_sector, delta_line, half_neumann, half_dirichlet };

std::string to_string(ModelKind kind);

struct SolveOptions {
  std::optional<double> shift;  // default: 1.5 times the essential threshold
  SolverOptions solver;
  bool certify = true;  // count eigenvalues below the threshold by inertia
};

struct ModelResult {
  ModelKind model = ModelKind::star;
  Spectrum spectrum;
  OperatorSpec spec;
  MeshParams mesh_params;
  double ess_threshold = 0.0;  // analytic bottom of the essential spectrum
  StarGraph graph;             // star and delta_line models
  double theta = 0.0;          // sector half-opening or broken-line angle
  int dofs = 0;

  /// Certified number of eigenvalues below ess_threshold (-1 if not computed).
  int count_below_threshold() const;
};

// The 1D operator with a point delta' interaction: -f'' on R \ {0} with the
// form \int |f'|^2 + alpha |f(0+) - f(0-)|^2.
struct DeltaPrime1D {
  double eigenvalue;  // the only discrete eigenvalue, for alpha = -1
  static double eigenfunction(double x);
  static double derivative(double x);  // for x != 0
  static double norm_squared();
};

DeltaPrime1D exact_delta_prime_1d();

/// P1 discretization on (-L, L) with a doubled node at 0 and Dirichlet
/// conditions at +-L; n nodes per side.
Spectrum solve_delta_prime_1d(double L, int n, int k = 1, double alpha = -1.0, const SolverOptions& options = {});

/// Lowest k eigenpairs of an assembled system, plus the certified count
/// below `threshold` when requested.
Spectrum solve_system(const DiscreteSystem& sys, int k, double threshold, const SolveOptions& options = {});

ModelResult solve_star(const StarGraph& graph, const MeshParams& params, int k, const SolveOptions& options = {});

/// Robin Laplacian on the sector |arg z| < theta with coupling gamma.
ModelResult solve_robin_sector(double gamma, double theta, const MeshParams& params, int k,
                               const SolveOptions& options = {});

/// Attractive delta interaction of strength gamma on the broken line with
/// branches at +-theta; theta = pi/2 is the straight line.
ModelResult solve_delta_line(double gamma, double theta, const MeshParams& params, int k,
                             const SolveOptions& options = {});

struct HalfProblems {
  ModelResult neumann;
  ModelResult dirichlet;
};

HalfProblems solve_half_problems(double theta, const MeshParams& params, int k, double alpha = -1.0,
                                 const SolveOptions& options = {});

/// Re-solves `base` with its coupling multiplied by `factor` > 0 on the mesh
/// scaled by 1/factor, and compares with factor^2 times the base eigenvalues.
struct ScaleReport {
  double factor = 1.0;
  std::vector<double> base;
  std::vector<double> scaled;
  std::vector<double> expected;
  double max_relative_error = 0.0;
  double tolerance = 1e-9;
  bool passed = false;
};

ScaleReport scale_check(const ModelResult& base, double factor, const SolveOptions& options = {},
                        double tolerance = 1e-9);

/// Terms of the Weyl-sequence quotient |(T - (k^2 - 4)) f_n|^2 / |f_n|^2 for
/// f_n(x, y) = e^{ikx} psi(y) chi_n(x) chi~_n(y) around the branch on the
/// positive x-axis, with chi_n supported in [n, 2n] and chi~_n in [-an, an].
struct WeylTerms {
  double norm_squared = 0.0;
  double residual_squared = 0.0;
  double quotient = 0.0;
};

/// Smooth step: 0 for t <= 0, 1 for t >= 1, with its first two derivatives.
struct SmoothStep {
  double value, d1, d2;
};
SmoothStep smooth_step(double t);

WeylTerms weyl_terms(double k, int n, double a, int quad_points = 32);
double weyl_quotient(double k, int n, double a, int quad_points = 32);

/// Half the smallest |tan| of the branch angles (relative to the first
/// branch) in the right half-plane, capped at 1.
double weyl_default_a(const StarGraph& graph);

/// Quotient for a graph; throws ModelError if the support rectangle would
/// meet another branch.
double weyl_quotient(const StarGraph& graph, double k, int n, std::optional<double> a = std::nullopt,
                     int quad_points = 32);

}  // namespace starspec
