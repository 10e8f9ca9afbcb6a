#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "starspec/experiments.hpp"

using namespace starspec;

namespace {

MeshParams coarse(double h = 0.3, double R = 5.0) {
  MeshParams p;
  p.R = R;
  p.h = h;
  p.grading = 3.0;
  p.core_radius = 2.0;
  p.max_aspect = 4.0;
  return p;
}

const Check& find_check(const ExperimentReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  FAIL("missing check " << name);
  return r.checks.front();
}

}  // namespace

TEST_CASE("least squares recovers a known law") {
  // y = -2/t^2 + 3/t + 0.5 sampled exactly.
  const std::vector<double> t{0.5, 0.4, 0.3, 0.2, 0.1};
  Eigen::MatrixXd X(5, 3);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X.row(i) << 1 / (t[i] * t[i]), 1 / t[i], 1.0;
    y(i) = -2 / (t[i] * t[i]) + 3 / t[i] + 0.5;
  }
  const auto f = least_squares("law", {"a", "b", "c"}, X, y);
  CHECK(f.coefficients[0] == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(f.coefficients[1] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.coefficients[2] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(f.std_errors[0] < 1e-8);

  const auto exact = least_squares("three", {"a", "b", "c"}, X.topRows(3), y.head(3));
  CHECK(std::isnan(exact.std_errors[0]));
  CHECK_THROWS_AS(least_squares("few", {"a", "b", "c"}, X.topRows(2), y.head(2)), ExperimentError);
}

TEST_CASE("csv formatting") {
  Table t;
  t.header = {"name", "x", "i"};
  t.add({std::string("a,b"), 0.1, 3});
  t.add({std::string("say \"hi\""), std::nan(""), -1});
  CHECK_THROWS_AS(t.add({1.0}), ExperimentError);
  std::ostringstream os;
  write_csv(os, t);
  CHECK(os.str() == "name,x,i\n\"a,b\",0.1,3\n\"say \"\"hi\"\"\",,-1\n");

  // Shortest round-trip form.
  Table u;
  u.header = {"v"};
  const double v = 1.0 / 3.0;
  u.add({v});
  std::ostringstream ou;
  write_csv(ou, u);
  CHECK(std::stod(ou.str().substr(2)) == v);
}

TEST_CASE("parallel_for is order independent") {
  std::vector<double> a(37), b(37);
  parallel_for(37, 1, [&](int i) { a[i] = std::sin(i); });
  parallel_for(37, 4, [&](int i) { b[i] = std::sin(i); });
  CHECK(a == b);
  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [](int i) {
                                   if (i == 4 || i == 7) throw std::runtime_error("bad " + std::to_string(i));
                                 }),
                    "bad 4");
  parallel_for(0, 2, [](int) { FAIL("no work expected"); });
}

TEST_CASE("grid validation and angle scaling") {
  SweepGrid g;
  CHECK_NOTHROW(validate(g));
  g.thetas = {0.1, 0.2};
  CHECK_THROWS_AS(validate(g), ExperimentError);
  g = SweepGrid{};
  g.h = {0.02, 0.04};
  CHECK_THROWS_AS(validate(g), ExperimentError);

  const auto p = angle_scaled(coarse(0.3), 0.15);
  CHECK(p.h == doctest::Approx(0.15));
  CHECK(p.core_radius == doctest::Approx(1.0));
  CHECK(p.R == 5.0);
  CHECK(angle_scaled(coarse(0.3), 0.15, -2.0).h == doctest::Approx(0.075));
}

TEST_CASE("problems dispatch to the model solvers") {
  const auto p = coarse(0.4, 4.0);
  const auto star = Problem::star(broken_line(0.4));
  const auto r = solve(star, p, 2);
  const auto s = solve_on(star, star.mesh(p), 2);
  CHECK(r.spectrum.eigenvalues[0] == doctest::Approx(s.eigenvalues[0]).epsilon(1e-12));
  CHECK(Problem::robin(1.0, 0.5).spec().kind == OperatorKind::robin_sector);
  CHECK(Problem::half(ModelKind::half_dirichlet, 0.4).mesh(p).kind == MeshKind::half_domain);
  CHECK_THROWS_AS(Problem::half(ModelKind::star, 0.4), ExperimentError);
}

TEST_CASE("convergence ladders are monotone") {
  const auto rep =
      convergence_study(Problem::robin(1.0, 0.5), coarse(0.4, 3.0), {2.0, 2.5, 3.0}, {0.4, 0.2, 0.1}, 2);
  CHECK(find_check(rep, "R_monotone").passed);
  CHECK(find_check(rep, "h_monotone").passed);
  CHECK(rep.table.rows.size() == 3 + 3 + 4);
  CHECK_THROWS_AS(convergence_study(Problem::robin(1.0, 0.5), coarse(), {2.0, 3.0}, {0.4, 0.2, 0.1}, 1),
                  ExperimentError);
  CHECK_THROWS_AS(convergence_study(Problem::robin(1.0, 0.5), coarse(), {2.0, 2.5, 3.0}, {0.4, 0.3, 0.1}, 1),
                  ExperimentError);
}

TEST_CASE("threshold study on the line finds nothing below -4") {
  const auto rep = threshold_study(line_graph(), coarse(0.25), {3.0, 4.0, 5.0}, 4);
  for (const auto& row : rep.table.rows) CHECK(std::get<int>(row[2]) == 0);
  CHECK(find_check(rep, "count_stable").passed);
  CHECK(find_check(rep, "threshold_approached").passed);
}

TEST_CASE("comparison suite holds on a coarse mesh") {
  const auto rep = comparison_suite({0.3}, coarse(0.4, 4.0), 2);
  CHECK(rep.passed());
  CHECK(rep.checks.size() == 7);
}

TEST_CASE("monotonicity study: fold symmetry and scale law") {
  const auto rep = monotonicity_study({0.3, 0.45}, -1.0, coarse(0.4, 4.0), 1);
  CHECK(find_check(rep, "fold_symmetry").passed);
  CHECK(find_check(rep, "coupling_scale_law").passed);
  CHECK(find_check(rep, "rescaled_monotone").passed);
  CHECK_THROWS_AS(monotonicity_study({0.3}, -1.0, coarse(), 1), ExperimentError);
  CHECK_THROWS_AS(monotonicity_study({0.3, 0.4}, 1.0, coarse(), 1), ExperimentError);
}

TEST_CASE("asymptotics marks unresolved eigenvalues") {
  const auto rep = asymptotics_study({0.45, 0.3}, -1.0, coarse(0.4, 4.0), 6);
  const auto& c = find_check(rep, "leading_coefficient_E6");
  CHECK_FALSE(c.passed);
  CHECK(c.note == "fewer than 3 resolved angles");
  CHECK(find_check(rep, "count_grows").passed);
  CHECK_THROWS_AS(asymptotics_study({0.2, 0.3}, -1.0, coarse(), 1), ExperimentError);
}

TEST_CASE("corollary on a coarse mesh") {
  const auto rep = corollary_many_eigenvalues(3, 1, {0.45, 0.3}, coarse(0.4, 4.0));
  CHECK(rep.passed());
  CHECK(rep.provenance["theta_found"].get<double>() == 0.45);
  CHECK_THROWS_AS(corollary_many_eigenvalues(1, 1, {0.3}, coarse()), ExperimentError);
}

TEST_CASE("weyl study and collisions") {
  const auto rep = weyl_study(line_graph(), 0.0, {10, 40, 160});
  CHECK(rep.passed());
  CHECK(rep.table.rows.size() == 3);
  CHECK_THROWS_AS(weyl_study(make_star_graph({0.0, 0.05}), 0.0, {10, 20}, 0.5), ModelError);
  CHECK_THROWS_AS(weyl_study(line_graph(), 0.0, {40, 10}), ExperimentError);
}

TEST_CASE("scale study and single solves") {
  const auto rep = scale_study(Problem::robin(1.0, 0.4), coarse(0.3, 3.0), {2.0, 3.0}, 2);
  CHECK(rep.passed());
  const auto s = solve_report(Problem::star(line_graph()), coarse(0.3, 4.0), 3);
  CHECK(s.provenance["count_below_threshold"].get<int>() == 0);
  CHECK(s.table.rows.size() == 3);
}

TEST_CASE("reports are deterministic and saved with their config") {
  auto run = [] { return comparison_suite({0.4}, coarse(0.5, 3.0), 2).csv(); };
  CHECK(run() == run());

  const auto rep = weyl_study(line_graph(), 1.0, {10, 20});
  const auto dir = std::filesystem::temp_directory_path() / "starspec_test_save";
  std::filesystem::remove_all(dir);
  save(rep, dir, {{"key", 7}});
  std::ifstream js(dir / "weyl.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["config"]["key"] == 7);
  CHECK(j["passed"] == rep.passed());
  std::ifstream csv(dir / "weyl.csv");
  std::stringstream buf;
  buf << csv.rdbuf();
  CHECK(buf.str() == rep.csv());
  std::filesystem::remove_all(dir);
}
