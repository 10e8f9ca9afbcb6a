#include <doctest.h>

#include <cmath>
#include <sstream>

#include "starspec/assembly.hpp"
#include "support.hpp"

using namespace starspec;
using starspec::testing::coarse_params;
using starspec::testing::hand_disk_mesh;

namespace {

double quad(const SparseSymMatrix& a, const Eigen::VectorXd& u) { return u.dot(a * u); }

double polygon_area(const CrackMesh& m) {
  double s = 0.0;
  for (const auto& t : m.triangles) s += triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
  return s;
}

double symmetry_defect(const SparseSymMatrix& a) {
  return (Eigen::MatrixXd(a) - Eigen::MatrixXd(a).transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("reference element matrices") {
  const Eigen::Vector2d a(0, 0), b(1, 0), c(0, 1);
  Eigen::Matrix3d k_ref;
  k_ref << 1.0, -0.5, -0.5,
          -0.5, 0.5, 0.0,
          -0.5, 0.0, 0.5;
  CHECK((p1_stiffness(a, b, c) - k_ref).norm() < 1e-15);
  const Eigen::Matrix3d m = p1_mass(a, b, c);
  CHECK(m.sum() == doctest::Approx(0.5));
  CHECK(m(0, 0) == doctest::Approx(1.0 / 12));
  CHECK(m(0, 1) == doctest::Approx(1.0 / 24));

  // Anisotropic weight: u = y on the reference triangle has energy t^2 * area.
  const Eigen::Matrix2d coeff = Eigen::Vector2d(1.0, 9.0).asDiagonal();
  const Eigen::Vector3d y(0, 0, 1);
  CHECK(y.dot(p1_stiffness(a, b, c, coeff) * y) == doctest::Approx(4.5));
  CHECK(p1_edge_mass(3.0).sum() == doctest::Approx(3.0));

  // Templated on the scalar type.
  const Eigen::Matrix<float, 2, 1> af(0, 0), bf(2, 0), cf(0, 2);
  CHECK(p1_mass(af, bf, cf).sum() == doctest::Approx(2.0f));
}

TEST_CASE("global stiffness and mass on a star mesh") {
  const auto m = build_star_mesh(broken_line(0.7, -1.0), coarse_params());
  const auto k = stiffness(m);
  const auto mm = mass(m);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(m.dof_count());
  CHECK((k * one).norm() < 1e-12);
  CHECK(quad(mm, one) == doctest::Approx(polygon_area(m)));
  // A continuous linear function: its energy is |grad|^2 times the area.
  const auto u = interpolate(m, [](const Eigen::Vector2d& x) { return 2 * x.x() - x.y(); });
  CHECK(quad(k, u) == doctest::Approx(5.0 * polygon_area(m)));
  CHECK(symmetry_defect(k) < 1e-14);
}

TEST_CASE("jump term on the hand-built disk") {
  const auto m = hand_disk_mesh();
  const auto j = jump_term(m, -2.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(m.dof_count());
  CHECK((j * one).norm() < 1e-15);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m.dof_count());
  u[1] = 1.0;  // jump 1 at (1, 0), 0 at the centre; edge length 1
  CHECK(quad(j, u) == doctest::Approx(-2.0 / 3.0));
  u[9] = 1.0;
  CHECK(quad(j, u) == doctest::Approx(0.0));
  CHECK_THROWS_AS(jump_term(m, -1.0, {true, false}), AssemblyError);
}

TEST_CASE("jump term measures the squared jump along a branch") {
  const auto m = build_star_mesh(line_graph(-1.0), coarse_params());
  // Plus and minus sides of branch 0 (the positive x-axis) are the upper and
  // lower half-planes; take u = 1 above, 0 below, so [u] = 1 on branch 0 only
  // and [u] = -1 on branch 1.
  const auto u = interpolate(m, [](const Eigen::Vector2d&, int sector) { return sector == 0 ? 1.0 : 0.0; });
  CHECK(quad(jump_term(m, 1.0), u) == doctest::Approx(2.0 * m.radius));
  CHECK(quad(jump_term(m, 1.0, {true, false}), u) == doctest::Approx(m.radius));
}

TEST_CASE("boundary term integrates over a group") {
  const auto s = build_sector_mesh(0.8, coarse_params());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.dof_count());
  CHECK(quad(boundary_term(s, "robin", 1.5), one) == doctest::Approx(1.5 * 2 * s.radius));
  CHECK_THROWS_AS(boundary_term(s, "nope", 1.0), AssemblyError);
}

TEST_CASE("operator specs") {
  CHECK(OperatorSpec::delta_prime_star(-1.5).ess_threshold() == doctest::Approx(-9.0));
  CHECK(OperatorSpec::robin_sector(2.0).ess_threshold() == doctest::Approx(-4.0));
  CHECK(OperatorSpec::delta_line(2.0).ess_threshold() == doctest::Approx(-1.0));
  CHECK(OperatorSpec::half_dirichlet().name() == "half_dirichlet");
  CHECK_THROWS_AS(validate(OperatorSpec::robin_sector(-1.0)), AssemblyError);
  CHECK_THROWS_AS(validate(OperatorSpec::rescaled_neumann(kPi / 2)), AssemblyError);
}

TEST_CASE("assembled delta' system") {
  const auto m = build_star_mesh(broken_line(0.7, -1.0), coarse_params());
  const auto sys = assemble(OperatorSpec::delta_prime_star(-1.0), m);
  const int outer = static_cast<int>(group_vertices(m, {"outer"}).size());
  CHECK(sys.size() == m.dof_count() - outer);
  CHECK(sys.prolongation.rows() == m.dof_count());
  CHECK(symmetry_defect(sys.A) == 0.0);
  CHECK(symmetry_defect(sys.M) == 0.0);
  // P^T A P reproduces the full quadratic form.
  const SparseSymMatrix a_full = stiffness(m) + jump_term(m, -1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(sys.size(), -1.0, 2.0);
  const Eigen::VectorXd u = sys.prolongation * x;
  CHECK(quad(sys.A, x) == doctest::Approx(quad(a_full, u)));
}

TEST_CASE("inactive branches are glued") {
  const auto m = build_star_mesh(line_graph(-1.0), coarse_params());
  const auto sys = assemble(OperatorSpec::delta_prime_star(-1.0, {false, false}), m);
  const int outer = static_cast<int>(group_vertices(m, {"outer"}).size());
  // Each crack pair and the second origin copy collapse; outer crack copies
  // collapse too, but those are removed by the Dirichlet condition anyway.
  const int glued_inner = static_cast<int>(m.crack_pairs.size()) - 2 + 1;
  CHECK(sys.size() == m.dof_count() - outer - glued_inner);
  // A continuous function has the plain Dirichlet energy.
  const auto u = interpolate(m, [](const Eigen::Vector2d& x) { return x.y(); });
  Eigen::VectorXd x(sys.size());
  for (int k = 0; k < sys.prolongation.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.prolongation, k); it; ++it) x[k] = u[it.row()];
  CHECK(quad(sys.A, x) == doctest::Approx(quad(stiffness(m), sys.prolongation * x)));
  CHECK_THROWS_AS(assemble(OperatorSpec::delta_prime_star(-1.0, {true}), m), AssemblyError);
}

TEST_CASE("Robin sector and sector sums") {
  const auto s = build_sector_mesh(0.6, coarse_params());
  const auto sys = assemble(OperatorSpec::robin_sector(2.0), s);
  const Eigen::VectorXd one_full = Eigen::VectorXd::Ones(s.dof_count());
  const SparseSymMatrix a_full = stiffness(s) - boundary_term(s, "robin", 2.0);
  CHECK(quad(a_full, one_full) == doctest::Approx(-2.0 * 2 * s.radius));
  CHECK(sys.size() == s.dof_count() - static_cast<int>(group_vertices(s, {"outer"}).size()));

  const auto star = build_star_mesh(broken_line(0.6, -1.0), coarse_params());
  const auto sum = assemble(OperatorSpec::robin_sector(2.0), star);
  // No gluing: every non-Dirichlet node is its own unknown.
  CHECK(sum.size() == star.dof_count() - static_cast<int>(group_vertices(star, {"outer"}).size()));
}

TEST_CASE("delta interaction on a broken line glues the two sides") {
  const auto m = build_star_mesh(broken_line(0.9, -1.0), coarse_params());
  const auto sys = assemble(OperatorSpec::delta_line(1.0), m);
  const int outer_glued = static_cast<int>(group_vertices(m, {"outer"}).size()) - 2;
  const int inner_pairs = static_cast<int>(m.crack_pairs.size()) - 2;
  CHECK(sys.size() == m.dof_count() - outer_glued - 2 - inner_pairs - 1);
  CHECK_THROWS_AS(assemble(OperatorSpec::delta_line(1.0), build_sector_mesh(0.5, coarse_params())),
                  AssemblyError);
}

TEST_CASE("half problems") {
  const double theta = 0.5;
  const auto mn = build_half_domain_mesh(theta, coarse_params(), HalfBoundary::neumann);
  const auto md = build_half_domain_mesh(theta, coarse_params(), HalfBoundary::dirichlet);
  const auto n = assemble(OperatorSpec::half_neumann(), mn);
  const auto d = assemble(OperatorSpec::half_dirichlet(), md);
  const auto d2 = assemble(OperatorSpec::half_dirichlet(), mn);
  const auto axis = group_vertices(mn, {"symmetry_axis"});
  const auto both = group_vertices(mn, {"symmetry_axis", "outer"});
  const auto outer = group_vertices(mn, {"outer"});
  CHECK(n.size() == mn.dof_count() - static_cast<int>(outer.size()));
  CHECK(d.size() == mn.dof_count() - static_cast<int>(both.size()));
  CHECK(d2.size() == d.size());
  CHECK(axis.size() > 4);
  CHECK_THROWS_AS(assemble(OperatorSpec::half_neumann(), md), AssemblyError);
  CHECK_THROWS_AS(assemble(OperatorSpec::half_neumann(), build_sector_mesh(0.5, coarse_params())),
                  AssemblyError);
}

TEST_CASE("rescaled form at pi/4 is the Neumann half problem") {
  const auto m = build_half_domain_mesh(kPi / 4, coarse_params(), HalfBoundary::neumann);
  const auto a = assemble(OperatorSpec::half_neumann(), m);
  const auto b = assemble(OperatorSpec::rescaled_neumann(kPi / 4), m);
  CHECK(Eigen::MatrixXd(a.A - b.A).cwiseAbs().maxCoeff() < 1e-12);
  // Larger theta adds y-energy: the form grows on any vector.
  const auto c = assemble(OperatorSpec::rescaled_neumann(1.0), m);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(a.size(), 0.0, 1.0);
  CHECK(quad(c.A, x) > quad(b.A, x));
}

TEST_CASE("scaling the mesh") {
  const auto m = build_star_mesh(broken_line(0.7, -1.0), coarse_params());
  const double c = 2.0;
  const auto s = scaled(m, 1.0 / c);
  CHECK(Eigen::MatrixXd(stiffness(s) - stiffness(m)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::MatrixXd(mass(s) * (c * c) - mass(m)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::MatrixXd(jump_term(s, -c) - jump_term(m, -1.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("triplet export") {
  const auto sys = assemble(OperatorSpec::delta_prime_star(-1.0), hand_disk_mesh());
  std::ostringstream os;
  write_triplets(os, sys.A);
  const std::string t = os.str();
  CHECK(std::count(t.begin(), t.end(), '\n') == sys.A.nonZeros());
}
