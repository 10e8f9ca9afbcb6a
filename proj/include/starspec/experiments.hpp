#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "starspec/models.hpp"

namespace starspec {

inline constexpr const char* kVersion = "1.0.0";

class ExperimentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter grids of a sweep: thetas descending, R ascending, h descending.
struct SweepGrid {
  std::vector<double> thetas{0.45, 0.30, 0.20, 0.15, 0.10};
  std::vector<double> R{8.0, 12.0, 16.0};
  std::vector<double> h{0.08, 0.04, 0.02};
  int k = 1;
  double coupling = -1.0;
};

void validate(const SweepGrid& grid);

/// One operator on one geometry, independent of the mesh resolution.
struct Problem {
  ModelKind model = ModelKind::star;
  StarGraph graph = broken_line(0.3);  // star
  double theta = 0.3;                  // every other model
  double coupling = -1.0;              // alpha for star / half problems, gamma otherwise

  static Problem star(const StarGraph& graph);
  static Problem robin(double gamma, double theta);
  static Problem delta_line(double gamma, double theta);
  static Problem half(ModelKind kind, double theta, double alpha = -1.0);

  OperatorSpec spec() const;
  CrackMesh mesh(const MeshParams& params) const;
  std::string describe() const;
};

ModelResult solve(const Problem& problem, const MeshParams& params, int k, const SolveOptions& options = {});

/// Lowest k eigenpairs of `problem` on a prebuilt mesh (e.g. a refined one).
Spectrum solve_on(const Problem& problem, const CrackMesh& mesh, int k, const SolveOptions& options = {});

/// Mesh lengths h and core_radius multiplied by theta / (reference |alpha|),
/// so the bound-state length scale stays resolved as theta shrinks.
MeshParams angle_scaled(const MeshParams& base, double theta, double alpha = -1.0, double reference = 0.3);

/// A pass flag and the tolerance it was judged against.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

/// Least-squares fit with standard errors (NaN when there are no spare points).
struct Fit {
  std::string name;
  std::vector<std::string> basis;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  int points = 0;
  double rss = 0.0;
};

/// Ordinary least squares of y on the columns of X.
Fit least_squares(const std::string& name, const std::vector<std::string>& basis, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y);

using Cell = std::variant<double, int, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// RFC-4180 CSV with a header row; doubles in shortest round-trip form, NaN
/// as an empty field.
void write_csv(std::ostream& os, const Table& table);

struct ExperimentReport {
  std::string name;
  Table table;
  std::vector<Fit> fits;
  std::vector<Check> checks;
  nlohmann::json provenance = nlohmann::json::object();

  bool passed() const;
  nlohmann::json summary() const;
  std::string csv() const;
};

/// Writes <dir>/<name>.csv and <dir>/<name>.json; `config` is embedded in the JSON.
void save(const ExperimentReport& report, const std::filesystem::path& dir,
          const nlohmann::json& config = nlohmann::json::object());

struct RunOptions {
  int jobs = 0;  // sweep points run concurrently; 0 = hardware threads
  SolveOptions solve;
};

nlohmann::json to_json(const MeshParams& params);
nlohmann::json to_json(const SolverOptions& options);

/// Evaluates body(i) for i in [0, n) on up to `jobs` threads (0: all
/// hardware threads); the first exception in index order is rethrown.
template <class F>
void parallel_for(int n, int jobs, F&& body) {
  if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  std::vector<std::exception_ptr> errors(std::max(n, 0));
  auto run = [&](int i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// R ladder at the coarsest h, then an h ladder of red refinements of the mesh
/// at the largest R (each h must halve the previous one). Eigenvalues must not
/// increase along either ladder; Richardson estimates from the h ladder.
ExperimentReport convergence_study(const Problem& problem, const MeshParams& base, const std::vector<double>& R_ladder,
                                   const std::vector<double>& h_ladder, int k, const RunOptions& options = {});

/// Many eigenvalues per R: a certified count below the threshold that settles
/// in R, and eigenvalues above it crowding towards the threshold.
ExperimentReport threshold_study(const StarGraph& graph, const MeshParams& base, const std::vector<double>& R_ladder,
                                 int k_large, const RunOptions& options = {});

/// E_n(theta) for the broken line on angle-scaled meshes and one red
/// refinement (error bar = their difference). Also fold symmetry, the
/// coupling scale law and the exactly monotone rescaled half-problem.
ExperimentReport monotonicity_study(const std::vector<double>& thetas, double alpha, const MeshParams& base, int n,
                                    const RunOptions& options = {});

/// E_n(theta) = A/theta^2 + B/theta + C per n; leading coefficient compared
/// with -alpha^2/(2n-1)^2 at tolerances[n-1] (the last entry repeats).
ExperimentReport asymptotics_study(const std::vector<double>& thetas, double alpha, const MeshParams& base, int n_max,
                                   const std::vector<double>& tolerances = {0.15, 0.20},
                                   const RunOptions& options = {});

/// Every min-max comparison between the broken-line operator and its Robin,
/// delta and sector-sum models, on matched meshes (alpha = -1).
ExperimentReport comparison_suite(const std::vector<double>& thetas, const MeshParams& base, int n_max,
                                  const RunOptions& options = {}, double tolerance = 1e-8);

/// Finds the largest theta in `thetas` whose broken line has n eigenvalues
/// below -4 and adds M - 2 branches inside the obtuse sector.
ExperimentReport corollary_many_eigenvalues(int M, int n, const std::vector<double>& thetas, const MeshParams& base,
                                            const RunOptions& options = {});

/// Weyl quotients at the given n; checks decrease and last/first <= max_ratio.
ExperimentReport weyl_study(const StarGraph& graph, double k, const std::vector<int>& ns,
                            std::optional<double> a = std::nullopt, int quad_points = 32, double max_ratio = 0.25);

ExperimentReport scale_study(const Problem& problem, const MeshParams& params, const std::vector<double>& factors,
                             int k, double tolerance = 1e-9, const RunOptions& options = {});

/// Single solve with certified count, as a report.
ExperimentReport solve_report(const Problem& problem, const MeshParams& params, int k, const RunOptions& options = {});

}  // namespace starspec
