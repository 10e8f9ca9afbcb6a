#include "starspec/experiments.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace starspec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double rel(double diff, double scale) { return diff / std::max(1.0, std::abs(scale)); }

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> eigen_columns(int k) {
  std::vector<std::string> cols;
  for (int i = 1; i <= k; ++i) cols.push_back("E" + std::to_string(i));
  return cols;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void append_values(std::vector<Cell>& row, const std::vector<double>& values, int k) {
  for (int i = 0; i < k; ++i) row.emplace_back(i < static_cast<int>(values.size()) ? values[i] : kNaN);
}

Check make_check(std::string name, bool passed, double value, double tolerance, std::string note = {}) {
  return Check{std::move(name), passed, value, tolerance, std::move(note)};
}

void check_thetas(const std::vector<double>& thetas) {
  if (thetas.empty()) throw ExperimentError("theta grid is empty");
  for (double t : thetas)
    if (!(t > 0.0 && t < 0.5 * kPi)) throw ExperimentError("theta values must lie in (0, pi/2)");
}

void check_ladder(const std::vector<double>& v, bool ascending, const char* what) {
  if (v.size() < 3) throw ExperimentError(std::string(what) + " ladder needs at least 3 rungs");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw ExperimentError(std::string(what) + " values must be positive");
    if (i > 0 && (ascending ? v[i] <= v[i - 1] : v[i] >= v[i - 1]))
      throw ExperimentError(std::string(what) + " ladder must be strictly " + (ascending ? "ascending" : "descending"));
  }
}

std::vector<double> lowest(const DiscreteSystem& sys, int k, double threshold, const RunOptions& opt) {
  SolveOptions so = opt.solve;
  so.certify = false;
  return solve_system(sys, k, threshold, so).eigenvalues;
}

nlohmann::json base_provenance(const MeshParams& params, const RunOptions& opt) {
  return {{"version", kVersion}, {"mesh", to_json(params)}, {"solver", to_json(opt.solve.solver)}};
}

}  // namespace

// ---------------------------------------------------------------------------
// grids, problems, plumbing

void validate(const SweepGrid& grid) {
  check_thetas(grid.thetas);
  for (std::size_t i = 1; i < grid.thetas.size(); ++i)
    if (grid.thetas[i] >= grid.thetas[i - 1]) throw ExperimentError("theta grid must be strictly descending");
  if (grid.R.empty() || grid.h.empty()) throw ExperimentError("R and h grids must be non-empty");
  for (std::size_t i = 0; i < grid.R.size(); ++i)
    if (!(grid.R[i] > 0.0) || (i > 0 && grid.R[i] <= grid.R[i - 1]))
      throw ExperimentError("R grid must be positive and strictly ascending");
  for (std::size_t i = 0; i < grid.h.size(); ++i)
    if (!(grid.h[i] > 0.0) || (i > 0 && grid.h[i] >= grid.h[i - 1]))
      throw ExperimentError("h grid must be positive and strictly descending");
  if (grid.k < 1) throw ExperimentError("k must be at least 1");
  if (!std::isfinite(grid.coupling)) throw ExperimentError("coupling must be finite");
}

Problem Problem::star(const StarGraph& graph) {
  Problem p;
  p.model = ModelKind::star;
  p.graph = graph;
  p.coupling = graph.alpha;
  return p;
}

Problem Problem::robin(double gamma, double theta) {
  Problem p;
  p.model = ModelKind::robin_sector;
  p.theta = theta;
  p.coupling = gamma;
  return p;
}

Problem Problem::delta_line(double gamma, double theta) {
  Problem p;
  p.model = ModelKind::delta_line;
  p.theta = theta;
  p.coupling = gamma;
  return p;
}

Problem Problem::half(ModelKind kind, double theta, double alpha) {
  if (kind != ModelKind::half_neumann && kind != ModelKind::half_dirichlet)
    throw ExperimentError("half problem must be half_neumann or half_dirichlet");
  Problem p;
  p.model = kind;
  p.theta = theta;
  p.coupling = alpha;
  return p;
}

OperatorSpec Problem::spec() const {
  switch (model) {
    case ModelKind::star: return OperatorSpec::delta_prime_star(graph.alpha);
    case ModelKind::robin_sector: return OperatorSpec::robin_sector(coupling);
    case ModelKind::delta_line: return OperatorSpec::delta_line(coupling);
    case ModelKind::half_neumann: return OperatorSpec::half_neumann(coupling);
    case ModelKind::half_dirichlet: return OperatorSpec::half_dirichlet(coupling);
  }
  throw ExperimentError("unknown model");
}

CrackMesh Problem::mesh(const MeshParams& params) const {
  switch (model) {
    case ModelKind::star: return build_star_mesh(graph, params);
    case ModelKind::robin_sector: return build_sector_mesh(theta, params);
    case ModelKind::delta_line: return build_star_mesh(make_star_graph({theta, kTwoPi - theta}), params);
    case ModelKind::half_neumann:
    case ModelKind::half_dirichlet: return build_half_domain_mesh(theta, params, HalfBoundary::neumann);
  }
  throw ExperimentError("unknown model");
}

std::string Problem::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(model);
  if (model == ModelKind::star)
    os << " " << starspec::describe(graph);
  else
    os << " theta=" << theta << " coupling=" << coupling;
  return os.str();
}

ModelResult solve(const Problem& problem, const MeshParams& params, int k, const SolveOptions& options) {
  switch (problem.model) {
    case ModelKind::star: return solve_star(problem.graph, params, k, options);
    case ModelKind::robin_sector: return solve_robin_sector(problem.coupling, problem.theta, params, k, options);
    case ModelKind::delta_line: return solve_delta_line(problem.coupling, problem.theta, params, k, options);
    case ModelKind::half_neumann:
    case ModelKind::half_dirichlet: {
      auto both = solve_half_problems(problem.theta, params, k, problem.coupling, options);
      return problem.model == ModelKind::half_neumann ? both.neumann : both.dirichlet;
    }
  }
  throw ExperimentError("unknown model");
}

Spectrum solve_on(const Problem& problem, const CrackMesh& mesh, int k, const SolveOptions& options) {
  const auto spec = problem.spec();
  return solve_system(assemble(spec, mesh), k, spec.ess_threshold(), options);
}

MeshParams angle_scaled(const MeshParams& base, double theta, double alpha, double reference) {
  if (!(theta > 0.0) || !(reference > 0.0)) throw ExperimentError("angle scaling needs positive theta and reference");
  const double s = theta / (reference * (alpha != 0.0 ? std::abs(alpha) : 1.0));
  MeshParams p = base;
  p.h *= s;
  p.core_radius *= s;
  return p;
}

Fit least_squares(const std::string& name, const std::vector<std::string>& basis, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.cols() != static_cast<Eigen::Index>(basis.size()))
    throw ExperimentError("least squares: shape mismatch");
  if (X.rows() < X.cols()) throw ExperimentError("least squares: fewer points than coefficients");
  Fit f;
  f.name = name;
  f.basis = basis;
  f.points = static_cast<int>(X.rows());
  const Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
  f.rss = (X * c - y).squaredNorm();
  const Eigen::MatrixXd cov = (X.transpose() * X).inverse();
  const int dof = f.points - static_cast<int>(X.cols());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    f.coefficients.push_back(c(j));
    f.std_errors.push_back(dof > 0 ? std::sqrt(f.rss / dof * cov(j, j)) : kNaN);
  }
  return f;
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != header.size()) throw ExperimentError("table row does not match the header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& os, const Table& table) {
  for (std::size_t j = 0; j < table.header.size(); ++j) os << (j ? "," : "") << quote(table.header[j]);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>)
              os << format_double(v);
            else if constexpr (std::is_same_v<T, int>)
              os << v;
            else
              os << quote(v);
          },
          row[j]);
    }
    os << '\n';
  }
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ExperimentReport::csv() const {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

nlohmann::json ExperimentReport::summary() const {
  nlohmann::json j;
  j["name"] = name;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    j["checks"].push_back(
        {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}, {"note", c.note}});
  j["fits"] = nlohmann::json::array();
  for (const auto& f : fits)
    j["fits"].push_back({{"name", f.name},
                         {"basis", f.basis},
                         {"coefficients", f.coefficients},
                         {"std_errors", f.std_errors},
                         {"points", f.points},
                         {"rss", f.rss}});
  j["provenance"] = provenance;
  return j;
}

void save(const ExperimentReport& report, const std::filesystem::path& dir, const nlohmann::json& config) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (report.name + ".csv"));
  write_csv(csv, report.table);
  auto j = report.summary();
  j["config"] = config;
  std::ofstream js(dir / (report.name + ".json"));
  js << j.dump(2) << '\n';
  if (!csv || !js) throw std::runtime_error("cannot write report files in " + dir.string());
}

nlohmann::json to_json(const MeshParams& p) {
  return {{"R", p.R},
          {"h", p.h},
          {"grading", p.grading},
          {"core_radius", p.core_radius},
          {"growth", p.growth},
          {"max_aspect", p.max_aspect},
          {"outer", p.outer == OuterCondition::dirichlet ? "dirichlet" : "neumann"}};
}

nlohmann::json to_json(const SolverOptions& o) {
  return {{"tol", o.tol}, {"max_iterations", o.max_iterations}, {"block_size", o.block_size}, {"seed", o.seed}};
}

// ---------------------------------------------------------------------------
// convergence

ExperimentReport convergence_study(const Problem& problem, const MeshParams& base, const std::vector<double>& R_ladder,
                                   const std::vector<double>& h_ladder, int k, const RunOptions& options) {
  check_ladder(R_ladder, true, "R");
  check_ladder(h_ladder, false, "h");
  for (std::size_t i = 1; i < h_ladder.size(); ++i)
    if (std::abs(2.0 * h_ladder[i] - h_ladder[i - 1]) > 1e-12 * h_ladder[i - 1])
      throw ExperimentError("h ladder must halve at every rung (red refinement)");
  if (k < 1) throw ExperimentError("k must be at least 1");

  const int nR = static_cast<int>(R_ladder.size()), nh = static_cast<int>(h_ladder.size());
  std::vector<std::vector<double>> ER(nR), Eh(nh);
  std::vector<int> dR(nR), dh(nh);
  MeshParams coarse = base;
  coarse.h = h_ladder[0];

  parallel_for(nR + nh, options.jobs, [&](int idx) {
    if (idx < nR) {
      MeshParams p = coarse;
      p.R = R_ladder[idx];
      const auto mesh = problem.mesh(p);
      ER[idx] = solve_on(problem, mesh, k, options.solve).eigenvalues;
      dR[idx] = mesh.dof_count();
    } else {
      const int j = idx - nR;
      MeshParams p = coarse;
      p.R = R_ladder.back();
      auto mesh = problem.mesh(p);
      for (int r = 0; r < j; ++r) mesh = refine(mesh);
      Eh[j] = solve_on(problem, mesh, k, options.solve).eigenvalues;
      dh[j] = mesh.dof_count();
    }
  });

  ExperimentReport rep;
  rep.name = "convergence";
  rep.table.header = concat({"ladder", "R", "h", "dofs"}, eigen_columns(k));
  for (int i = 0; i < nR; ++i) {
    std::vector<Cell> row{std::string("R"), R_ladder[i], h_ladder[0], dR[i]};
    append_values(row, ER[i], k);
    rep.table.add(std::move(row));
  }
  for (int j = 0; j < nh; ++j) {
    std::vector<Cell> row{std::string("h"), R_ladder.back(), h_ladder[j], dh[j]};
    append_values(row, Eh[j], k);
    rep.table.add(std::move(row));
  }

  // Monotone non-increasing along both ladders (nested spaces).
  double worst_R = 0.0, worst_h = 0.0;
  for (int i = 1; i < nR; ++i)
    for (int n = 0; n < k; ++n) worst_R = std::max(worst_R, rel(ER[i][n] - ER[i - 1][n], ER[i][n]));
  for (int j = 1; j < nh; ++j)
    for (int n = 0; n < k; ++n) worst_h = std::max(worst_h, rel(Eh[j][n] - Eh[j - 1][n], Eh[j][n]));
  rep.checks.push_back(make_check("R_monotone", worst_R <= 1e-10, worst_R, 1e-10, "largest relative increase in R"));
  rep.checks.push_back(make_check("h_monotone", worst_h <= 1e-10, worst_h, 1e-10, "largest relative increase in h"));

  // Truncation differences shrink (up to rounding noise).
  double shrink = 0.0;
  bool shrinking = true;
  for (int n = 0; n < k; ++n) {
    const double d1 = std::abs(ER[nR - 2][n] - ER[nR - 3][n]), d2 = std::abs(ER[nR - 1][n] - ER[nR - 2][n]);
    shrinking = shrinking && d2 <= d1 + 1e-12 * std::abs(ER[nR - 1][n]);
    if (d1 > 1e-12 * std::abs(ER[nR - 1][n])) shrink = std::max(shrink, d2 / d1);
  }
  rep.checks.push_back(make_check("R_differences_shrink", shrinking, shrink, 1.0,
                                  "largest ratio of the last two differences in R above rounding level"));

  // Richardson estimates from the three finest h rungs.
  std::vector<double> order(k), extrap(k), bar(k), bar_R(k);
  double worst_stab = 0.0;
  for (int n = 0; n < k; ++n) {
    const double a = Eh[nh - 3][n], b = Eh[nh - 2][n], c = Eh[nh - 1][n];
    const double ratio = (a - b) / (b - c);
    const double p = (std::isfinite(ratio) && ratio > 1.0) ? std::log2(ratio) : 1.0;
    order[n] = p;
    extrap[n] = c - (b - c) / (std::pow(2.0, p) - 1.0);
    bar[n] = std::abs(c - extrap[n]);
    bar_R[n] = std::abs(ER[nR - 1][n] - ER[nR - 2][n]);
    const double nominal = c - (b - c) / 3.0;  // P1 eigenvalues converge like h^2
    worst_stab = std::max(worst_stab, std::abs(extrap[n] - nominal) / std::max(1e-300, std::abs(nominal)));
  }
  auto summary_row = [&](const std::string& label, const std::vector<double>& v) {
    std::vector<Cell> row{label, kNaN, kNaN, 0};
    append_values(row, v, k);
    rep.table.add(std::move(row));
  };
  summary_row("order", order);
  summary_row("extrapolated", extrap);
  summary_row("error_bar_h", bar);
  summary_row("error_bar_R", bar_R);
  rep.checks.push_back(make_check("extrapolation_stable", worst_stab <= 1e-3, worst_stab, 1e-3,
                                  "relative gap between observed-order and second-order extrapolants"));

  rep.provenance = base_provenance(coarse, options);
  rep.provenance["problem"] = problem.describe();
  rep.provenance["R_ladder"] = R_ladder;
  rep.provenance["h_ladder"] = h_ladder;
  rep.provenance["k"] = k;
  return rep;
}

// ---------------------------------------------------------------------------
// threshold

ExperimentReport threshold_study(const StarGraph& graph, const MeshParams& base, const std::vector<double>& R_ladder,
                                 int k_large, const RunOptions& options) {
  if (R_ladder.size() < 2) throw ExperimentError("R ladder needs at least 2 rungs");
  for (std::size_t i = 0; i < R_ladder.size(); ++i)
    if (!(R_ladder[i] > 0.0) || (i > 0 && R_ladder[i] <= R_ladder[i - 1]))
      throw ExperimentError("R ladder must be positive and strictly ascending");
  if (k_large < 2) throw ExperimentError("k_large must be at least 2");

  const int nR = static_cast<int>(R_ladder.size());
  std::vector<ModelResult> res(nR);
  SolveOptions so = options.solve;
  so.certify = true;
  parallel_for(nR, options.jobs, [&](int i) {
    MeshParams p = base;
    p.R = R_ladder[i];
    res[i] = solve_star(graph, p, k_large, so);
  });

  const double t = OperatorSpec::delta_prime_star(graph.alpha).ess_threshold();
  ExperimentReport rep;
  rep.name = "threshold";
  rep.table.header = concat({"R", "dofs", "count_below", "gap_above", "spacing_above"}, eigen_columns(k_large));
  std::vector<int> counts(nR);
  std::vector<double> gaps(nR, kNaN), spacing(nR, kNaN);
  for (int i = 0; i < nR; ++i) {
    const auto& ev = res[i].spectrum.eigenvalues;
    counts[i] = res[i].count_below_threshold();
    std::vector<double> above;
    for (double e : ev)
      if (e >= t) above.push_back(e);
    if (!above.empty()) gaps[i] = above.front() - t;
    if (above.size() >= 2) spacing[i] = (above.back() - above.front()) / static_cast<double>(above.size() - 1);
    std::vector<Cell> row{R_ladder[i], res[i].dofs, counts[i], gaps[i], spacing[i]};
    append_values(row, ev, k_large);
    rep.table.add(std::move(row));
  }

  rep.checks.push_back(make_check("count_stable", counts[nR - 1] == counts[nR - 2],
                                  std::abs(counts[nR - 1] - counts[nR - 2]), 0.0, "count at the top two R rungs"));
  rep.checks.push_back(make_check("cluster_resolved", counts[nR - 1] < k_large, counts[nR - 1], k_large,
                                  "listed eigenvalues extend past the threshold"));
  const bool gaps_known = std::isfinite(gaps.front()) && std::isfinite(gaps.back()) && gaps.front() > 0.0;
  rep.checks.push_back(make_check("threshold_approached", gaps_known && gaps.back() < gaps.front(),
                                  gaps_known ? gaps.back() / gaps.front() : kNaN, 1.0,
                                  "gap to the threshold, largest R over smallest R"));
  const bool sp_known = std::isfinite(spacing.front()) && std::isfinite(spacing.back()) && spacing.front() > 0.0;
  rep.checks.push_back(make_check("spectrum_densifies", sp_known && spacing.back() < spacing.front(),
                                  sp_known ? spacing.back() / spacing.front() : kNaN, 1.0,
                                  "mean spacing above the threshold, largest R over smallest R"));

  rep.provenance = base_provenance(base, options);
  rep.provenance["graph"] = describe(graph);
  rep.provenance["threshold"] = t;
  rep.provenance["R_ladder"] = R_ladder;
  rep.provenance["k"] = k_large;
  return rep;
}

// ---------------------------------------------------------------------------
// monotonicity in theta

ExperimentReport monotonicity_study(const std::vector<double>& thetas, double alpha, const MeshParams& base, int n,
                                    const RunOptions& options) {
  check_thetas(thetas);
  if (thetas.size() < 2) throw ExperimentError("monotonicity needs at least two angles");
  if (n < 1) throw ExperimentError("n must be at least 1");
  if (!(alpha < 0.0)) throw ExperimentError("monotonicity needs an attractive coupling (alpha < 0)");
  const int m = static_cast<int>(thetas.size());
  const double threshold = -4.0 * alpha * alpha;
  const double theta_min = *std::min_element(thetas.begin(), thetas.end());
  const auto rescaled_mesh =
      build_half_domain_mesh(0.25 * kPi, angle_scaled(base, theta_min, alpha), HalfBoundary::neumann);

  struct Point {
    std::vector<double> coarse, fine, bar, folded, rescaled;
    double scale_err = 0.0;
    int dofs = 0;
  };
  std::vector<Point> pts(m);
  SolveOptions so = options.solve;
  so.certify = false;
  parallel_for(m, options.jobs, [&](int i) {
    const double th = thetas[i];
    const auto p = angle_scaled(base, th, alpha);
    const auto g = broken_line(th, alpha);
    auto& pt = pts[i];
    const auto coarse = solve_star(g, p, n, so);
    pt.coarse = coarse.spectrum.eigenvalues;
    pt.dofs = coarse.dofs;
    pt.fine = solve_on(Problem::star(g), refine(build_star_mesh(g, p)), n, so).eigenvalues;
    for (int j = 0; j < n; ++j) pt.bar.push_back(std::abs(pt.coarse[j] - pt.fine[j]));
    pt.folded = solve_star(make_star_graph({kPi - th, kPi + th}, alpha), p, n, so).spectrum.eigenvalues;
    pt.scale_err = scale_check(coarse, 2.0, so).max_relative_error;
    const auto spec = OperatorSpec::rescaled_neumann(th, alpha);
    pt.rescaled = solve_system(assemble(spec, rescaled_mesh), n, threshold, so).eigenvalues;
  });

  ExperimentReport rep;
  rep.name = "monotonicity";
  std::vector<std::string> cols{"theta", "dofs"};
  for (int j = 1; j <= n; ++j)
    for (const char* s : {"E", "E_fine", "bar", "E_folded", "E_rescaled"}) cols.push_back(s + std::to_string(j));
  rep.table.header = cols;
  for (int i = 0; i < m; ++i) {
    std::vector<Cell> row{thetas[i], pts[i].dofs};
    for (int j = 0; j < n; ++j)
      for (double v : {pts[i].coarse[j], pts[i].fine[j], pts[i].bar[j], pts[i].folded[j], pts[i].rescaled[j]})
        row.emplace_back(v);
    rep.table.add(std::move(row));
  }

  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return thetas[a] < thetas[b]; });

  // Strict increase beyond the error bars, for eigenvalues below the threshold.
  double margin = std::numeric_limits<double>::infinity(), modulus = 0.0, rescaled_up = 0.0;
  int compared = 0;
  for (int j = 0; j < n; ++j)
    for (int s = 1; s < m; ++s) {
      const auto &lo = pts[order[s - 1]], &hi = pts[order[s]];
      const double dth = thetas[order[s]] - thetas[order[s - 1]];
      modulus = std::max(modulus, std::abs(hi.fine[j] - lo.fine[j]) / dth);
      rescaled_up = std::max(rescaled_up, rel(lo.rescaled[j] - hi.rescaled[j], hi.rescaled[j]));
      if (lo.fine[j] >= threshold || hi.fine[j] >= threshold) continue;
      margin = std::min(margin, (hi.fine[j] - lo.fine[j]) - (lo.bar[j] + hi.bar[j]));
      ++compared;
    }
  rep.checks.push_back(make_check("strictly_increasing", compared > 0 && margin > 0.0, compared ? margin : kNaN, 0.0,
                                  "smallest gap minus the two error bars"));

  double fold = 0.0, scale = 0.0;
  for (const auto& pt : pts) {
    scale = std::max(scale, pt.scale_err);
    for (int j = 0; j < n; ++j) fold = std::max(fold, rel(std::abs(pt.coarse[j] - pt.folded[j]), pt.coarse[j]));
  }
  rep.checks.push_back(make_check("fold_symmetry", fold <= 1e-8, fold, 1e-8, "E_n(theta) vs E_n(pi - theta)"));
  rep.checks.push_back(make_check("coupling_scale_law", scale <= 1e-9, scale, 1e-9, "alpha -> 2 alpha on the mesh scaled by 1/2"));
  rep.checks.push_back(make_check("rescaled_monotone", rescaled_up <= 1e-10, rescaled_up, 1e-10,
                                  "largest relative decrease of the rescaled half-problem in theta"));

  rep.provenance = base_provenance(base, options);
  rep.provenance["alpha"] = alpha;
  rep.provenance["n"] = n;
  rep.provenance["thetas"] = thetas;
  rep.provenance["mesh_scaling"] = "h and core_radius times theta / (0.3 |alpha|)";
  rep.provenance["continuity_modulus"] = modulus;
  return rep;
}

// ---------------------------------------------------------------------------
// small-angle asymptotics

ExperimentReport asymptotics_study(const std::vector<double>& thetas, double alpha, const MeshParams& base, int n_max,
                                   const std::vector<double>& tolerances, const RunOptions& options) {
  check_thetas(thetas);
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (thetas[i] >= thetas[i - 1]) throw ExperimentError("theta grid must be strictly descending");
  if (n_max < 1) throw ExperimentError("n_max must be at least 1");
  if (!(alpha < 0.0)) throw ExperimentError("asymptotics need an attractive coupling (alpha < 0)");
  if (tolerances.empty()) throw ExperimentError("no tolerances given");
  const int m = static_cast<int>(thetas.size());
  const double threshold = -4.0 * alpha * alpha;

  std::vector<ModelResult> res(m);
  SolveOptions so = options.solve;
  so.certify = true;
  parallel_for(m, options.jobs, [&](int i) {
    res[i] = solve_star(broken_line(thetas[i], alpha), angle_scaled(base, thetas[i], alpha), n_max, so);
  });

  ExperimentReport rep;
  rep.name = "asymptotics";
  rep.table.header = concat({"theta", "h", "dofs", "count_below"}, eigen_columns(n_max));
  for (int i = 0; i < m; ++i) {
    std::vector<Cell> row{thetas[i], res[i].mesh_params.h, res[i].dofs, res[i].count_below_threshold()};
    append_values(row, res[i].spectrum.eigenvalues, n_max);
    rep.table.add(std::move(row));
  }

  nlohmann::json theta_n = nlohmann::json::object();
  for (int n = 1; n <= n_max; ++n) {
    std::vector<int> use;
    for (int i = 0; i < m; ++i)
      if (res[i].count_below_threshold() >= n && res[i].spectrum.eigenvalues[n - 1] < threshold) use.push_back(i);
    if (!use.empty()) theta_n["n" + std::to_string(n)] = thetas[use.front()];
    const double target = -alpha * alpha / ((2.0 * n - 1.0) * (2.0 * n - 1.0));
    const double tol = tolerances[std::min<std::size_t>(n - 1, tolerances.size() - 1)];
    const std::string name = "leading_coefficient_E" + std::to_string(n);
    if (use.size() < 3) {
      rep.checks.push_back(make_check(name, false, kNaN, tol, "fewer than 3 resolved angles"));
      continue;
    }
    Eigen::MatrixXd X(use.size(), 3);
    Eigen::VectorXd y(use.size());
    for (std::size_t r = 0; r < use.size(); ++r) {
      const double th = thetas[use[r]];
      X.row(r) << 1.0 / (th * th), 1.0 / th, 1.0;
      y(r) = res[use[r]].spectrum.eigenvalues[n - 1];
    }
    auto fit = least_squares("E" + std::to_string(n), {"1/theta^2", "1/theta", "1"}, X, y);
    const double err = std::abs(fit.coefficients[0] - target) / std::abs(target);
    std::ostringstream note;
    note.precision(6);
    note << "fitted " << fit.coefficients[0] << " vs " << target << " on " << use.size() << " angles";
    rep.checks.push_back(make_check(name, err <= tol, err, tol, note.str()));
    rep.fits.push_back(std::move(fit));
  }

  int worst = 0;
  for (int i = 1; i < m; ++i)
    worst = std::max(worst, res[i - 1].count_below_threshold() - res[i].count_below_threshold());
  rep.checks.push_back(make_check("count_grows", worst <= 0, worst, 0.0, "largest drop in the count as theta shrinks"));

  rep.provenance = base_provenance(base, options);
  rep.provenance["alpha"] = alpha;
  rep.provenance["thetas"] = thetas;
  rep.provenance["n_max"] = n_max;
  rep.provenance["tolerances"] = tolerances;
  rep.provenance["mesh_scaling"] = "h and core_radius times theta / (0.3 |alpha|)";
  rep.provenance["theta_n"] = theta_n;
  return rep;
}

// ---------------------------------------------------------------------------
// comparisons

ExperimentReport comparison_suite(const std::vector<double>& thetas, const MeshParams& base, int n_max,
                                  const RunOptions& options, double tolerance) {
  check_thetas(thetas);
  if (n_max < 1) throw ExperimentError("n_max must be at least 1");
  const int m = static_cast<int>(thetas.size());

  struct Row {
    std::string relation;
    double eps;
    int n;
    double lower, upper;
  };
  std::vector<std::vector<Row>> rows(m);

  parallel_for(m, options.jobs, [&](int i) {
    const double th = thetas[i];
    const auto p = angle_scaled(base, th);
    const auto graph = broken_line(th);
    const auto star = build_star_mesh(graph, p);
    const auto acute = build_sector_mesh(th, p);
    auto eig = [&](const DiscreteSystem& sys, double threshold) { return lowest(sys, n_max, threshold, options); };
    auto push = [&](const std::string& rel_name, double eps, const std::vector<double>& lo,
                    const std::vector<double>& hi) {
      for (int n = 0; n < n_max; ++n) rows[i].push_back({rel_name, eps, n + 1, lo[n], hi[n]});
    };

    const auto H = eig(assemble(OperatorSpec::delta_prime_star(-1.0), star), -4.0);
    push("H<=Q1", kNaN, H, eig(assemble(OperatorSpec::robin_sector(1.0), acute), -1.0));
    push("H<=A4", kNaN, H, eig(assemble(OperatorSpec::delta_line(4.0), star), -4.0));
    push("H>=sector_sum", kNaN, eig(assemble(OperatorSpec::robin_sector(2.0), star), -4.0), H);

    // Young splitting of the jump: acute side 1 + eps, obtuse side 1 + 1/eps.
    std::set<double> eps_set{0.5 * th, th};
    for (int n = 2; n <= n_max; ++n) eps_set.insert((2.0 * n - 1.5) * th);
    const auto secs = sectors(graph);
    const SparseSymMatrix K = stiffness(star), Mm = mass(star);
    for (double eps : eps_set) {
      const double g1 = 1.0 + eps, g2 = 1.0 + 1.0 / eps;
      SparseSymMatrix A = K;
      for (int b = 0; b < star.branch_count(); ++b)
        for (bool plus : {true, false}) {
          const int s = plus ? star.branch_plus_sector[b] : star.branch_minus_sector[b];
          const bool is_acute = std::abs(secs[s].half_opening - th) < 1e-12;
          A -= boundary_term(star, branch_group(b, plus), is_acute ? g1 : g2);
        }
      DiscreteSystem split{A, Mm, {}};
      const auto Y = eig(split, -g2 * g2);
      push("H>=young_split", eps, Y, H);
      const auto Q = eig(assemble(OperatorSpec::robin_sector(g1), acute), -g1 * g1);
      std::vector<double> bound(n_max);
      for (int n = 0; n < n_max; ++n) bound[n] = std::min(Q[n], -g2 * g2);
      push("H>=min(Q,-(1+1/eps)^2)", eps, bound, H);
    }

    // One more branch along the negative x-axis.
    const auto star3 = build_star_mesh(make_star_graph({th, kPi, kTwoPi - th}), p);
    const auto T3 = eig(assemble(OperatorSpec::delta_prime_star(-1.0), star3), -4.0);
    push("T3<=T2", kNaN, T3, eig(assemble(OperatorSpec::delta_prime_star(-1.0, {true, false, true}), star3), -4.0));
    push("T3>=sector_sum", kNaN, eig(assemble(OperatorSpec::robin_sector(2.0), star3), -4.0), T3);
  });

  ExperimentReport rep;
  rep.name = "comparison";
  rep.table.header = {"theta", "relation", "epsilon", "n", "lower", "upper", "margin", "passed"};
  std::map<std::string, double> worst;
  std::vector<std::string> relation_order;
  for (int i = 0; i < m; ++i)
    for (const auto& r : rows[i]) {
      const double margin = rel(r.upper - r.lower, r.upper);
      rep.table.add({thetas[i], r.relation, r.eps, r.n, r.lower, r.upper, margin, margin >= -tolerance ? 1 : 0});
      if (!worst.count(r.relation)) {
        worst[r.relation] = margin;
        relation_order.push_back(r.relation);
      }
      worst[r.relation] = std::min(worst[r.relation], margin);
    }
  for (const auto& name : relation_order)
    rep.checks.push_back(make_check(name, worst[name] >= -tolerance, worst[name], tolerance,
                                    "smallest relative margin upper - lower"));

  rep.provenance = base_provenance(base, options);
  rep.provenance["thetas"] = thetas;
  rep.provenance["n_max"] = n_max;
  rep.provenance["mesh_scaling"] = "h and core_radius times theta / 0.3";
  return rep;
}

// ---------------------------------------------------------------------------
// many eigenvalues from a narrow wedge

ExperimentReport corollary_many_eigenvalues(int M, int n, const std::vector<double>& thetas, const MeshParams& base,
                                            const RunOptions& options) {
  if (M < 2) throw ExperimentError("the graph needs at least two branches");
  if (n < 1) throw ExperimentError("n must be at least 1");
  check_thetas(thetas);
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (thetas[i] >= thetas[i - 1]) throw ExperimentError("theta grid must be strictly descending");

  ExperimentReport rep;
  rep.name = "corollary";
  rep.table.header = concat({"stage", "theta", "branches", "dofs", "count_below"}, eigen_columns(n));

  // Search for the widest wedge with n eigenvalues below -4.
  double found = kNaN;
  for (double th : thetas) {
    const auto p = angle_scaled(base, th);
    const auto mesh = build_star_mesh(broken_line(th), p);
    const auto sys = assemble(OperatorSpec::delta_prime_star(-1.0), mesh);
    const int c = count_below(sys.A, sys.M, -4.0);
    std::vector<Cell> row{std::string("search"), th, 2, sys.size(), c};
    append_values(row, {}, n);
    rep.table.add(std::move(row));
    if (c >= n) {
      found = th;
      break;
    }
  }
  if (std::isnan(found)) {
    rep.checks.push_back(make_check("wedge_found", false, kNaN, n, "no angle in the grid gives enough eigenvalues"));
    rep.provenance = base_provenance(base, options);
    return rep;
  }

  std::vector<double> angles{found};
  for (int j = 1; j <= M - 2; ++j) angles.push_back(found + (kTwoPi - 2.0 * found) * j / (M - 1));
  angles.push_back(kTwoPi - found);
  const auto graph = make_star_graph(angles);
  const auto mesh = build_star_mesh(graph, angle_scaled(base, found));
  const auto full = assemble(OperatorSpec::delta_prime_star(-1.0), mesh);
  std::vector<bool> mask(M, false);
  mask.front() = mask.back() = true;
  const auto sub = assemble(OperatorSpec::delta_prime_star(-1.0, mask), mesh);
  SolveOptions so = options.solve;
  so.certify = true;
  const auto sf = solve_system(full, n, -4.0, so), ss = solve_system(sub, n, -4.0, so);

  std::vector<Cell> row_sub{std::string("wedge"), found, 2, sub.size(), ss.certified_count_below->second};
  append_values(row_sub, ss.eigenvalues, n);
  rep.table.add(std::move(row_sub));
  std::vector<Cell> row_full{std::string("graph"), found, M, full.size(), sf.certified_count_below->second};
  append_values(row_full, sf.eigenvalues, n);
  rep.table.add(std::move(row_full));

  const int count = sf.certified_count_below->second;
  rep.checks.push_back(make_check("count_at_least_n", count >= n, count, n, "certified count below -4"));
  double worst = 0.0;
  for (int k = 0; k < n; ++k) worst = std::max(worst, rel(sf.eigenvalues[k] - ss.eigenvalues[k], ss.eigenvalues[k]));
  rep.checks.push_back(make_check("extra_branches_lower", worst <= 1e-8, worst, 1e-8,
                                  "largest relative excess over the wedge alone (same mesh)"));

  rep.provenance = base_provenance(base, options);
  rep.provenance["M"] = M;
  rep.provenance["n"] = n;
  rep.provenance["theta_found"] = found;
  rep.provenance["graph"] = describe(graph);
  return rep;
}

// ---------------------------------------------------------------------------
// Weyl quotients, scaling, single solves

ExperimentReport weyl_study(const StarGraph& graph, double k, const std::vector<int>& ns, std::optional<double> a,
                            int quad_points, double max_ratio) {
  if (ns.size() < 2) throw ExperimentError("need at least two values of n");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw ExperimentError("n values must be strictly ascending");
  const double av = a.value_or(weyl_default_a(graph));
  weyl_quotient(graph, k, ns.front(), av, quad_points);  // collision check

  ExperimentReport rep;
  rep.name = "weyl";
  rep.table.header = {"n", "a", "norm_squared", "residual_squared", "quotient", "quotient_times_n", "norm_over_n"};
  std::vector<double> q;
  double growth = std::numeric_limits<double>::infinity();
  for (int n : ns) {
    const auto t = weyl_terms(k, n, av, quad_points);
    q.push_back(t.quotient);
    growth = std::min(growth, t.norm_squared / n);
    rep.table.add({n, av, t.norm_squared, t.residual_squared, t.quotient, t.quotient * n, t.norm_squared / n});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < q.size(); ++i) decreasing = decreasing && q[i] < q[i - 1];
  rep.checks.push_back(make_check("decreasing", decreasing, q.back() - q.front(), 0.0, "quotient falls with n"));
  const double ratio = q.back() / q.front();
  rep.checks.push_back(make_check("decay_ratio", ratio <= max_ratio, ratio, max_ratio, "last over first quotient"));
  rep.provenance = {{"version", kVersion}, {"graph", describe(graph)}, {"k", k},          {"a", av},
                    {"quad_points", quad_points}, {"ns", ns},       {"min_norm_over_n", growth}};
  return rep;
}

ExperimentReport scale_study(const Problem& problem, const MeshParams& params, const std::vector<double>& factors,
                             int k, double tolerance, const RunOptions& options) {
  if (factors.empty()) throw ExperimentError("no scale factors given");
  const auto base = solve(problem, params, k, options.solve);
  std::vector<ScaleReport> reps(factors.size());
  parallel_for(static_cast<int>(factors.size()), options.jobs,
               [&](int i) { reps[i] = scale_check(base, factors[i], options.solve, tolerance); });

  ExperimentReport rep;
  rep.name = "scale";
  rep.table.header = {"factor", "index", "base", "scaled", "expected", "relative_error"};
  for (const auto& r : reps) {
    for (std::size_t i = 0; i < r.base.size(); ++i)
      rep.table.add({r.factor, static_cast<int>(i) + 1, r.base[i], r.scaled[i], r.expected[i],
                     rel(std::abs(r.scaled[i] - r.expected[i]), r.expected[i])});
    std::ostringstream name;
    name << "factor_" << format_double(r.factor);
    rep.checks.push_back(make_check(name.str(), r.passed, r.max_relative_error, tolerance, "eigenvalues times factor^2"));
  }
  rep.provenance = base_provenance(params, options);
  rep.provenance["problem"] = problem.describe();
  rep.provenance["factors"] = factors;
  return rep;
}

ExperimentReport solve_report(const Problem& problem, const MeshParams& params, int k, const RunOptions& options) {
  SolveOptions so = options.solve;
  so.certify = true;
  const auto r = solve(problem, params, k, so);
  ExperimentReport rep;
  rep.name = "solve";
  rep.table.header = {"index", "eigenvalue", "residual", "below_threshold"};
  for (int i = 0; i < r.spectrum.size(); ++i)
    rep.table.add({i + 1, r.spectrum.eigenvalues[i], r.spectrum.residuals[i],
                   r.spectrum.eigenvalues[i] < r.ess_threshold ? 1 : 0});
  rep.provenance = base_provenance(params, options);
  rep.provenance["problem"] = problem.describe();
  rep.provenance["operator"] = r.spec.name();
  rep.provenance["threshold"] = r.ess_threshold;
  rep.provenance["count_below_threshold"] = r.count_below_threshold();
  rep.provenance["dofs"] = r.dofs;
  rep.provenance["shift"] = r.spectrum.shift;
  rep.provenance["iterations"] = r.spectrum.iterations;
  return rep;
}

}  // namespace starspec
