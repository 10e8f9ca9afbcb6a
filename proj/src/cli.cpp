#include "starspec/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace starspec::cli {

namespace {

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

MeshParams graded_preset() {
  MeshParams p;
  p.R = 12.0;
  p.h = 0.08;
  p.grading = 3.0;
  p.core_radius = 2.0;
  p.growth = 1.2;
  p.max_aspect = 4.0;
  return p;
}

// Per-command defaults for values the user did not set.
struct Defaults {
  double h = 0.08;
  int k = 4;
  int n = 1;
  std::vector<double> thetas;
  std::string graph = "broken";
};

const std::map<std::string, Defaults>& command_defaults() {
  static const std::map<std::string, Defaults> d{
      {"solve", {0.08, 4, 1, {}, "broken"}},
      {"sweep-theta", {0.16, 4, 1, {0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45}, "broken"}},
      {"asymptotics", {0.08, 4, 2, {0.30, 0.20, 0.15, 0.10}, "broken"}},
      {"compare", {0.16, 4, 4, {0.30, 0.20}, "broken"}},
      {"threshold", {0.12, 8, 1, {}, "broken"}},
      {"weyl", {0.08, 4, 1, {}, "line"}},
      {"converge", {0.16, 2, 1, {}, "broken"}},
      {"scale-check", {0.12, 3, 1, {}, "broken"}},
  };
  return d;
}

void add_problem_options(CLI::App* s, RunConfig& c) {
  s->add_option("--model", c.model, "star, robin, delta-line, half-neumann or half-dirichlet")
      ->check(CLI::IsMember({"star", "robin", "delta-line", "half-neumann", "half-dirichlet"}));
  s->add_option("--graph", c.graph, "line, half-line, broken or angles")
      ->check(CLI::IsMember({"line", "half-line", "broken", "angles"}));
  s->add_option("--angles", c.angles, "branch angles (comma separated)")->delimiter(',');
  s->add_option("--theta", c.theta, "broken-line angle or sector half-opening");
  s->add_option("--alpha", c.alpha, "delta' coupling");
  s->add_option("--gamma", c.gamma, "Robin / delta coupling");
}

void add_mesh_options(CLI::App* s, RunConfig& c, std::string& outer) {
  s->add_option("--R", c.mesh.R, "truncation radius");
  s->add_option("--h", c.mesh.h, "mesh size");
  s->add_option("--grading", c.mesh.grading, "corner grading exponent (1 = uniform)");
  s->add_option("--core", c.mesh.core_radius, "radius of the graded core");
  s->add_option("--growth", c.mesh.growth, "arc-spacing growth away from interfaces");
  s->add_option("--max-aspect", c.mesh.max_aspect, "largest arc / radial spacing ratio");
  s->add_option("--outer", outer, "outer boundary condition")->check(CLI::IsMember({"dirichlet", "neumann"}));
}

void add_solver_options(CLI::App* s, RunConfig& c) {
  s->add_option("--tol", c.solver.tol, "relative residual tolerance");
  s->add_option("--max-iter", c.solver.max_iterations, "restart cycles");
  s->add_option("--block", c.solver.block_size, "block size (0: max(k, 4))");
  s->add_option("--seed", c.solver.seed, "start-vector seed");
}

StarGraph make_graph(const RunConfig& c) {
  if (c.graph == "line") return line_graph(c.alpha);
  if (c.graph == "half-line") return half_line_graph(c.alpha);
  if (c.graph == "broken") return broken_line(c.theta, c.alpha);
  std::vector<double> a;
  for (double x : c.angles) a.push_back(wrap_angle(x));
  std::sort(a.begin(), a.end());
  return make_star_graph(a, c.alpha);
}

Problem make_problem(const RunConfig& c) {
  if (c.model == "star") return Problem::star(make_graph(c));
  if (c.model == "robin") return Problem::robin(c.gamma, c.theta);
  if (c.model == "delta-line") return Problem::delta_line(c.gamma, c.theta);
  return Problem::half(c.model == "half-neumann" ? ModelKind::half_neumann : ModelKind::half_dirichlet, c.theta,
                       c.alpha);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

void validate_config(const RunConfig& c) {
  validate(c.mesh);
  require(c.k >= 1, "--k must be at least 1");
  require(c.n >= 1, "--n must be at least 1");
  require(c.jobs >= 0, "--jobs must be non-negative");
  require(c.solver.tol > 0.0, "--tol must be positive");
  require(c.solver.max_iterations >= 1, "--max-iter must be at least 1");
  require(c.solver.block_size >= 0, "--block must be non-negative");
  require(std::isfinite(c.alpha) && std::isfinite(c.gamma) && std::isfinite(c.theta), "couplings must be finite");
  for (double t : c.thetas) require(t > 0.0 && t < 0.5 * kPi, "--thetas must lie in (0, pi/2)");
}

ExperimentReport dispatch(const RunConfig& c) {
  RunOptions opt;
  opt.jobs = c.jobs;
  opt.solve.solver = c.solver;
  const std::string& cmd = c.subcommand;
  if (cmd == "solve") {
    const auto problem = make_problem(c);
    if (c.dump) {
      const auto mesh = problem.mesh(c.mesh);
      const auto sys = assemble(problem.spec(), mesh);
      std::filesystem::create_directories(c.out_dir);
      std::ofstream m(std::filesystem::path(c.out_dir) / "mesh.txt");
      write_mesh(m, mesh);
      std::ofstream a(std::filesystem::path(c.out_dir) / "A.txt");
      write_triplets(a, sys.A);
      std::ofstream b(std::filesystem::path(c.out_dir) / "M.txt");
      write_triplets(b, sys.M);
    }
    return solve_report(problem, c.mesh, c.k, opt);
  }
  if (cmd == "sweep-theta") return monotonicity_study(c.thetas, c.alpha, c.mesh, c.n, opt);
  if (cmd == "asymptotics") return asymptotics_study(c.thetas, c.alpha, c.mesh, c.n, c.tolerances, opt);
  if (cmd == "compare") return comparison_suite(c.thetas, c.mesh, c.n, opt);
  if (cmd == "threshold") return threshold_study(make_graph(c), c.mesh, c.R_ladder, c.k, opt);
  if (cmd == "weyl")
    return weyl_study(make_graph(c), c.wave_number, c.ns, c.weyl_a > 0.0 ? std::optional<double>(c.weyl_a) : std::nullopt,
                      c.quad_points, c.max_ratio);
  if (cmd == "converge") return convergence_study(make_problem(c), c.mesh, c.R_ladder, c.h_ladder, c.k, opt);
  if (cmd == "scale-check") return scale_study(make_problem(c), c.mesh, c.factors, c.k, 1e-9, opt);
  throw InputError("unknown subcommand " + cmd);
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  return {{"subcommand", c.subcommand},
          {"model", c.model},
          {"graph", c.graph},
          {"angles", c.angles},
          {"theta", c.theta},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"mesh", starspec::to_json(c.mesh)},
          {"solver", starspec::to_json(c.solver)},
          {"k", c.k},
          {"n", c.n},
          {"wave_number", c.wave_number},
          {"ns", c.ns},
          {"weyl_a", c.weyl_a},
          {"quad_points", c.quad_points},
          {"max_ratio", c.max_ratio},
          {"thetas", c.thetas},
          {"R_ladder", c.R_ladder},
          {"h_ladder", c.h_ladder},
          {"factors", c.factors},
          {"tolerances", c.tolerances},
          {"jobs", c.jobs},
          {"dump", c.dump},
          {"out_dir", c.out_dir},
          {"angles_in", "radians"}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  cfg.mesh = graded_preset();
  std::string outer = "dirichlet";

  CLI::App app{"Finite-element spectra of delta'-interactions on star graphs", "starspec"};
  app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h
  app.set_config("--config", "", "TOML/INI file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.add_flag("--degrees", cfg.degrees, "angles are given in degrees");
  app.add_option("--jobs", cfg.jobs, "concurrent sweep points (0: all cores)");
  app.add_option("--out", cfg.out_dir, "output directory (STARSPEC_OUT overrides)");
  app.add_flag("--dump", cfg.dump, "also write mesh and matrices (solve)");

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  auto* solve_cmd = sub("solve", "lowest eigenpairs of one operator");
  add_problem_options(solve_cmd, cfg);
  add_mesh_options(solve_cmd, cfg, outer);
  add_solver_options(solve_cmd, cfg);
  solve_cmd->add_option("--k", cfg.k, "number of eigenpairs");

  auto* sweep_cmd = sub("sweep-theta", "E_n of the broken line across angles");
  sweep_cmd->add_option("--thetas", cfg.thetas, "angles")->delimiter(',');
  sweep_cmd->add_option("--alpha", cfg.alpha, "delta' coupling");
  sweep_cmd->add_option("--n", cfg.n, "number of eigenvalues");
  add_mesh_options(sweep_cmd, cfg, outer);
  add_solver_options(sweep_cmd, cfg);

  auto* asym_cmd = sub("asymptotics", "small-angle fit of E_n");
  asym_cmd->add_option("--thetas", cfg.thetas, "angles, descending")->delimiter(',');
  asym_cmd->add_option("--alpha", cfg.alpha, "delta' coupling");
  asym_cmd->add_option("--n", cfg.n, "largest eigenvalue index fitted");
  asym_cmd->add_option("--tolerances", cfg.tolerances, "relative tolerance per index")->delimiter(',');
  add_mesh_options(asym_cmd, cfg, outer);
  add_solver_options(asym_cmd, cfg);

  auto* cmp_cmd = sub("compare", "min-max comparisons on matched meshes");
  cmp_cmd->add_option("--thetas", cfg.thetas, "angles")->delimiter(',');
  cmp_cmd->add_option("--n", cfg.n, "number of min-max values");
  add_mesh_options(cmp_cmd, cfg, outer);
  add_solver_options(cmp_cmd, cfg);

  auto* thr_cmd = sub("threshold", "eigenvalue counts and crowding near the threshold");
  thr_cmd->add_option("--graph", cfg.graph, "line, half-line, broken or angles")
      ->check(CLI::IsMember({"line", "half-line", "broken", "angles"}));
  thr_cmd->add_option("--angles", cfg.angles, "branch angles")->delimiter(',');
  thr_cmd->add_option("--theta", cfg.theta, "broken-line angle");
  thr_cmd->add_option("--alpha", cfg.alpha, "delta' coupling");
  thr_cmd->add_option("--R-ladder", cfg.R_ladder, "truncation radii")->delimiter(',');
  thr_cmd->add_option("--k", cfg.k, "eigenpairs per radius");
  add_mesh_options(thr_cmd, cfg, outer);
  add_solver_options(thr_cmd, cfg);

  auto* weyl_cmd = sub("weyl", "Weyl-sequence quotients by quadrature");
  weyl_cmd->add_option("--graph", cfg.graph, "line, half-line, broken or angles")
      ->check(CLI::IsMember({"line", "half-line", "broken", "angles"}));
  weyl_cmd->add_option("--angles", cfg.angles, "branch angles")->delimiter(',');
  weyl_cmd->add_option("--theta", cfg.theta, "broken-line angle");
  weyl_cmd->add_option("--k", cfg.wave_number, "wave number");
  weyl_cmd->add_option("--n", cfg.ns, "cut-off scales, ascending")->delimiter(',');
  weyl_cmd->add_option("--a", cfg.weyl_a, "transverse support ratio (0: default)");
  weyl_cmd->add_option("--quad", cfg.quad_points, "Gauss points per panel");
  weyl_cmd->add_option("--max-ratio", cfg.max_ratio, "largest allowed last/first quotient");

  auto* conv_cmd = sub("converge", "R and h refinement ladders");
  add_problem_options(conv_cmd, cfg);
  conv_cmd->add_option("--R-ladder", cfg.R_ladder, "truncation radii")->delimiter(',');
  conv_cmd->add_option("--h-ladder", cfg.h_ladder, "mesh sizes, each half the previous")->delimiter(',');
  conv_cmd->add_option("--k", cfg.k, "number of eigenvalues");
  add_mesh_options(conv_cmd, cfg, outer);
  add_solver_options(conv_cmd, cfg);

  auto* scale_cmd = sub("scale-check", "coupling/dilation equivalence at the discrete level");
  add_problem_options(scale_cmd, cfg);
  scale_cmd->add_option("--factors", cfg.factors, "coupling factors")->delimiter(',');
  scale_cmd->add_option("--k", cfg.k, "number of eigenvalues");
  add_mesh_options(scale_cmd, cfg, outer);
  add_solver_options(scale_cmd, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "starspec: " << one_line(e.what()) << '\n';
    return 2;
  }

  const CLI::App* s = app.get_subcommands().front();
  cfg.subcommand = s->get_name();
  const auto& d = command_defaults().at(cfg.subcommand);
  auto given = [&](const char* opt) {
    const CLI::Option* o = s->get_option_no_throw(opt);
    return o != nullptr && o->count() > 0;
  };

  if (cfg.degrees) {
    const double deg = kPi / 180.0;
    if (given("--theta")) cfg.theta *= deg;
    for (double& a : cfg.angles) a *= deg;
    for (double& t : cfg.thetas) t *= deg;
  }
  if (!given("--h")) cfg.mesh.h = d.h;
  if (!given("--k") && cfg.subcommand != "weyl") cfg.k = d.k;
  if (!given("--n") && cfg.subcommand != "weyl") cfg.n = d.n;
  if (!given("--thetas")) cfg.thetas = d.thetas;
  if (!given("--graph")) cfg.graph = given("--angles") ? "angles" : d.graph;
  if (!given("--R-ladder")) cfg.R_ladder = {8.0, 12.0, 16.0};
  if (!given("--h-ladder")) cfg.h_ladder = {0.16, 0.08, 0.04};
  if (!given("--factors")) cfg.factors = {2.0, 0.5};
  if (!given("--tolerances")) cfg.tolerances = {0.15, 0.20};
  if (cfg.subcommand == "weyl" && !given("--n")) cfg.ns = {10, 40, 160};
  cfg.mesh.outer = outer == "neumann" ? OuterCondition::neumann : OuterCondition::dirichlet;
  if (const char* env = std::getenv("STARSPEC_OUT"); env && *env) cfg.out_dir = env;

  ExperimentReport report;
  try {
    validate_config(cfg);
    report = dispatch(cfg);
  } catch (const std::invalid_argument& e) {
    err << "starspec: invalid input: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const MeshError& e) {
    err << "starspec: invalid mesh: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "starspec: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    save(report, cfg.out_dir, to_json(cfg));
  } catch (const std::exception& e) {
    err << "starspec: " << one_line(e.what()) << '\n';
    return 1;
  }
  out << report.name << ": " << (report.passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& c : report.checks)
    out << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.name << "  value=" << c.value << "  tol=" << c.tolerance
        << '\n';
  if (report.name == "solve")
    out << "  eigenvalues below " << report.provenance["threshold"].get<double>() << ": "
        << report.provenance["count_below_threshold"].get<int>() << '\n';
  const auto base = std::filesystem::path(cfg.out_dir) / report.name;
  out << "wrote " << base.string() << ".csv and " << base.string() << ".json\n";
  return report.passed() ? 0 : 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"starspec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace starspec::cli
