#include "starspec/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

namespace starspec {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseSymMatrix from_triplets(int n, const Triplets& t) {
  SparseSymMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

template <typename Local>
SparseSymMatrix assemble_cells(const CrackMesh& mesh, Local&& local) {
  Triplets t;
  t.reserve(9 * mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector2d& a = mesh.vertices[tri[0]];
    const Eigen::Vector2d& b = mesh.vertices[tri[1]];
    const Eigen::Vector2d& c = mesh.vertices[tri[2]];
    if (!(triangle_area(a, b, c) > 0.0)) throw AssemblyError("degenerate triangle (area <= 0)");
    const Eigen::Matrix3d k = local(a, b, c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.emplace_back(tri[i], tri[j], k(i, j));
  }
  return from_triplets(mesh.dof_count(), t);
}

/// Union-find over mesh dofs for the identifications an operator imposes.
class DofClasses {
public:
  explicit DofClasses(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<int> parent_;
};

bool branch_active(const std::vector<bool>& active, int k) {
  return active.empty() || active[static_cast<std::size_t>(k)];
}

void merge_branch(DofClasses& classes, const CrackMesh& mesh, int k) {
  for (const auto& cp : mesh.crack_pairs)
    if (cp.branch == k) classes.unite(cp.plus, cp.minus);
  classes.unite(mesh.origin_copies[mesh.branch_plus_sector[k]], mesh.origin_copies[mesh.branch_minus_sector[k]]);
}

Eigen::SparseMatrix<double> build_prolongation(const CrackMesh& mesh, DofClasses& classes,
                                               const std::vector<int>& constrained) {
  const int n = mesh.dof_count();
  std::set<int> dead;
  for (int v : constrained) dead.insert(classes.find(v));

  std::vector<int> number(n, -1);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    const int root = classes.find(v);
    if (dead.count(root)) continue;
    if (number[root] < 0) number[root] = next++;
  }
  if (next == 0) throw AssemblyError("constrained system is empty");

  Triplets t;
  for (int v = 0; v < n; ++v) {
    const int root = classes.find(v);
    if (number[root] >= 0) t.emplace_back(v, number[root], 1.0);
  }
  Eigen::SparseMatrix<double> p(n, next);
  p.setFromTriplets(t.begin(), t.end());
  p.makeCompressed();
  return p;
}

SparseSymMatrix project(const Eigen::SparseMatrix<double>& p, const SparseSymMatrix& a) {
  SparseSymMatrix r = p.transpose() * a * p;
  // Exact symmetry: average with the transpose (entries agree up to summation order).
  SparseSymMatrix rt = r.transpose();
  SparseSymMatrix s = 0.5 * (r + rt);
  s.makeCompressed();
  return s;
}

}  // namespace

SparseSymMatrix stiffness(const CrackMesh& mesh) {
  return assemble_cells(mesh, [](const auto& a, const auto& b, const auto& c) { return p1_stiffness(a, b, c); });
}

SparseSymMatrix stiffness(const CrackMesh& mesh, const Eigen::Matrix2d& coefficient) {
  return assemble_cells(
      mesh, [&](const auto& a, const auto& b, const auto& c) { return p1_stiffness(a, b, c, coefficient); });
}

SparseSymMatrix mass(const CrackMesh& mesh) {
  return assemble_cells(mesh, [](const auto& a, const auto& b, const auto& c) { return p1_mass(a, b, c); });
}

SparseSymMatrix jump_term(const CrackMesh& mesh, double alpha, const std::vector<bool>& active) {
  if (mesh.branch_count() == 0) throw AssemblyError("jump term needs a mesh with crack pairs");
  if (!active.empty() && static_cast<int>(active.size()) != mesh.branch_count())
    throw AssemblyError("active-branch mask has the wrong length");
  const auto partners = branch_partners(mesh);
  Triplets t;
  for (int k = 0; k < mesh.branch_count(); ++k) {
    if (!branch_active(active, k)) continue;
    for (const auto& e : mesh.group(branch_group(k, true))) {
      const auto pa = partners[k].find(e.a);
      const auto pb = partners[k].find(e.b);
      if (pa == partners[k].end() || pb == partners[k].end())
        throw AssemblyError("interface edge without crack pair");
      const double len = (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
      const Eigen::Matrix2d m = alpha * p1_edge_mass(len);
      // [u] = u+ - u- at the two edge nodes.
      const int dof[4] = {e.a, e.b, pa->second, pb->second};
      const double sign[4] = {1.0, 1.0, -1.0, -1.0};
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) t.emplace_back(dof[i], dof[j], sign[i] * sign[j] * m(i % 2, j % 2));
    }
  }
  return from_triplets(mesh.dof_count(), t);
}

SparseSymMatrix boundary_term(const CrackMesh& mesh, const std::string& group, double gamma) {
  if (!mesh.has_group(group)) throw AssemblyError("unknown edge group: " + group);
  Triplets t;
  for (const auto& e : mesh.group(group)) {
    const double len = (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
    const Eigen::Matrix2d m = gamma * p1_edge_mass(len);
    const int dof[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t.emplace_back(dof[i], dof[j], m(i, j));
  }
  return from_triplets(mesh.dof_count(), t);
}

OperatorSpec OperatorSpec::delta_prime_star(double alpha, std::vector<bool> active) {
  OperatorSpec s;
  s.kind = OperatorKind::delta_prime_star;
  s.alpha = alpha;
  s.active_branches = std::move(active);
  return s;
}

OperatorSpec OperatorSpec::robin_sector(double gamma) {
  OperatorSpec s;
  s.kind = OperatorKind::robin_sector;
  s.gamma = gamma;
  return s;
}

OperatorSpec OperatorSpec::delta_line(double gamma) {
  OperatorSpec s;
  s.kind = OperatorKind::delta_line;
  s.gamma = gamma;
  return s;
}

OperatorSpec OperatorSpec::half_neumann(double alpha) {
  OperatorSpec s;
  s.kind = OperatorKind::half_neumann;
  s.alpha = alpha;
  return s;
}

OperatorSpec OperatorSpec::half_dirichlet(double alpha) {
  OperatorSpec s;
  s.kind = OperatorKind::half_dirichlet;
  s.alpha = alpha;
  return s;
}

OperatorSpec OperatorSpec::rescaled_neumann(double theta, double alpha) {
  OperatorSpec s;
  s.kind = OperatorKind::rescaled_neumann;
  s.alpha = alpha;
  s.theta = theta;
  return s;
}

double OperatorSpec::ess_threshold() const {
  switch (kind) {
    case OperatorKind::delta_prime_star:
    case OperatorKind::half_neumann:
    case OperatorKind::half_dirichlet:
    case OperatorKind::rescaled_neumann:
      return alpha < 0.0 ? -4.0 * alpha * alpha : 0.0;
    case OperatorKind::robin_sector:
      return -gamma * gamma;
    case OperatorKind::delta_line:
      return -0.25 * gamma * gamma;
  }
  return 0.0;
}

std::string OperatorSpec::name() const {
  switch (kind) {
    case OperatorKind::delta_prime_star: return "delta_prime_star";
    case OperatorKind::robin_sector: return "robin_sector";
    case OperatorKind::delta_line: return "delta_line";
    case OperatorKind::half_neumann: return "half_neumann";
    case OperatorKind::half_dirichlet: return "half_dirichlet";
    case OperatorKind::rescaled_neumann: return "rescaled_neumann";
  }
  return "unknown";
}

void validate(const OperatorSpec& spec) {
  if (!std::isfinite(spec.alpha) || !std::isfinite(spec.gamma)) throw AssemblyError("non-finite operator parameter");
  if ((spec.kind == OperatorKind::robin_sector || spec.kind == OperatorKind::delta_line) && !(spec.gamma >= 0.0))
    throw AssemblyError("gamma must be non-negative");
  if (spec.kind == OperatorKind::rescaled_neumann && !(spec.theta > 0.0 && spec.theta < 0.5 * kPi))
    throw AssemblyError("rescaled operator needs theta in (0, pi/2)");
}

DiscreteSystem assemble(const OperatorSpec& spec, const CrackMesh& mesh) {
  validate(spec);
  DofClasses classes(mesh.dof_count());
  std::vector<std::string> dirichlet = mesh.dirichlet_groups;
  SparseSymMatrix a;

  switch (spec.kind) {
    case OperatorKind::delta_prime_star: {
      if (mesh.branch_count() == 0) throw AssemblyError("delta' operator needs a crack mesh");
      if (!spec.active_branches.empty() && static_cast<int>(spec.active_branches.size()) != mesh.branch_count())
        throw AssemblyError("active-branch mask has the wrong length");
      for (int k = 0; k < mesh.branch_count(); ++k)
        if (!branch_active(spec.active_branches, k)) merge_branch(classes, mesh, k);
      a = stiffness(mesh) + jump_term(mesh, spec.alpha, spec.active_branches);
      break;
    }
    case OperatorKind::robin_sector: {
      a = stiffness(mesh);
      if (mesh.has_group("robin")) {
        a -= boundary_term(mesh, "robin", spec.gamma);
      } else if (mesh.branch_count() > 0) {
        // Direct sum of the Robin problems on the sectors of a star mesh.
        for (int k = 0; k < mesh.branch_count(); ++k)
          for (bool plus : {true, false}) a -= boundary_term(mesh, branch_group(k, plus), spec.gamma);
      } else {
        throw AssemblyError("Robin operator needs a 'robin' edge group or interface edges");
      }
      break;
    }
    case OperatorKind::delta_line: {
      if (mesh.branch_count() == 0) throw AssemblyError("delta-line operator needs interface edges");
      for (int k = 0; k < mesh.branch_count(); ++k) merge_branch(classes, mesh, k);
      a = stiffness(mesh);
      for (int k = 0; k < mesh.branch_count(); ++k) a -= boundary_term(mesh, branch_group(k, true), spec.gamma);
      break;
    }
    case OperatorKind::half_neumann:
    case OperatorKind::half_dirichlet: {
      if (mesh.kind != MeshKind::half_domain || !mesh.has_group("symmetry_axis"))
        throw AssemblyError("half-problem operators need a half-domain mesh");
      const bool axis_fixed =
          std::find(dirichlet.begin(), dirichlet.end(), "symmetry_axis") != dirichlet.end();
      if (spec.kind == OperatorKind::half_neumann && axis_fixed)
        throw AssemblyError("Neumann half-problem on a mesh built with a Dirichlet symmetry axis");
      if (spec.kind == OperatorKind::half_dirichlet && !axis_fixed) dirichlet.push_back("symmetry_axis");
      a = stiffness(mesh) + jump_term(mesh, spec.alpha);
      break;
    }
    case OperatorKind::rescaled_neumann: {
      if (mesh.kind != MeshKind::half_domain) throw AssemblyError("rescaled operator needs a half-domain mesh");
      const double t = std::tan(spec.theta);
      const Eigen::Matrix2d coeff = Eigen::Vector2d(1.0, t * t).asDiagonal();
      a = stiffness(mesh, coeff) + jump_term(mesh, spec.alpha);
      break;
    }
  }

  const auto constrained = group_vertices(mesh, dirichlet);
  DiscreteSystem sys;
  sys.prolongation = build_prolongation(mesh, classes, constrained);
  sys.A = project(sys.prolongation, a);
  sys.M = project(sys.prolongation, mass(mesh));
  return sys;
}

void write_triplets(std::ostream& os, const SparseSymMatrix& matrix) {
  const auto old_precision = os.precision(17);
  for (int j = 0; j < matrix.outerSize(); ++j)
    for (SparseSymMatrix::InnerIterator it(matrix, j); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(old_precision);
}

}  // namespace starspec
