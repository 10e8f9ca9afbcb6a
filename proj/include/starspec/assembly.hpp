#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "starspec/mesh.hpp"

namespace starspec {

class AssemblyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Symmetric sparse matrix. For a symmetric matrix the compressed-column
/// arrays Eigen stores coincide with the compressed-row arrays.
using SparseSymMatrix = Eigen::SparseMatrix<double>;

// Closed-form P1 element matrices.

template <typename Scalar>
Scalar triangle_area(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                     const Eigen::Matrix<Scalar, 2, 1>& c) {
  return Scalar(0.5) * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

/// Gradients of the three barycentric coordinates, one per row.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 2> barycentric_gradients(const Eigen::Matrix<Scalar, 2, 1>& a,
                                                  const Eigen::Matrix<Scalar, 2, 1>& b,
                                                  const Eigen::Matrix<Scalar, 2, 1>& c) {
  const Scalar twice_area = Scalar(2) * triangle_area(a, b, c);
  Eigen::Matrix<Scalar, 3, 2> g;
  g << b.y() - c.y(), c.x() - b.x(),
       c.y() - a.y(), a.x() - c.x(),
       a.y() - b.y(), b.x() - a.x();
  return g / twice_area;
}

/// Local matrix of \int (C grad u) . grad v over the triangle.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_stiffness(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                                         const Eigen::Matrix<Scalar, 2, 1>& c,
                                         const Eigen::Matrix<Scalar, 2, 2>& coefficient =
                                             Eigen::Matrix<Scalar, 2, 2>::Identity()) {
  const auto g = barycentric_gradients(a, b, c);
  return triangle_area(a, b, c) * (g * coefficient * g.transpose());
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_mass(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                                    const Eigen::Matrix<Scalar, 2, 1>& c) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << 2, 1, 1,
       1, 2, 1,
       1, 1, 2;
  return (triangle_area(a, b, c) / Scalar(12)) * m;
}

/// 1D P1 mass matrix of a segment.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> p1_edge_mass(Scalar length) {
  Eigen::Matrix<Scalar, 2, 2> m;
  m << 2, 1,
       1, 2;
  return (length / Scalar(6)) * m;
}

SparseSymMatrix stiffness(const CrackMesh& mesh);

/// Stiffness of the anisotropic form \int (C grad u) . grad u.
SparseSymMatrix stiffness(const CrackMesh& mesh, const Eigen::Matrix2d& coefficient);

SparseSymMatrix mass(const CrackMesh& mesh);

/// alpha * \int_Gamma |u+ - u-|^2 over the interface edges of the active
/// branches (all branches when `active` is empty).
SparseSymMatrix jump_term(const CrackMesh& mesh, double alpha, const std::vector<bool>& active = {});

/// gamma * \int |u|^2 over the edges of one group. Unsigned.
SparseSymMatrix boundary_term(const CrackMesh& mesh, const std::string& group, double gamma);

enum class OperatorKind {
  delta_prime_star,  // -Laplace with a delta' interaction on the branches
  robin_sector,      // Robin Laplacian with boundary coupling gamma
  delta_line,        // -Laplace with an attractive delta interaction on the branches
  half_neumann,      // even-parity half of the broken-line problem
  half_dirichlet,    // odd-parity half
  rescaled_neumann,  // even half pulled back to the pi/4 domain, y-derivative weighted by tan^2
};

struct OperatorSpec {
  OperatorKind kind = OperatorKind::delta_prime_star;
  double alpha = -1.0;
  double gamma = 1.0;
  double theta = 0.0;                // rescaled_neumann only
  std::vector<bool> active_branches;  // delta_prime_star; empty = all

  static OperatorSpec delta_prime_star(double alpha, std::vector<bool> active = {});
  static OperatorSpec robin_sector(double gamma);
  static OperatorSpec delta_line(double gamma);
  static OperatorSpec half_neumann(double alpha = -1.0);
  static OperatorSpec half_dirichlet(double alpha = -1.0);
  static OperatorSpec rescaled_neumann(double theta, double alpha = -1.0);

  /// Bottom of the essential spectrum of the unbounded operator.
  double ess_threshold() const;
  std::string name() const;
};

void validate(const OperatorSpec& spec);

/// Matrices restricted to the free unknowns. Column j of `prolongation` is
/// the mesh nodal vector of reduced unknown j, so u_mesh = P u.
struct DiscreteSystem {
  SparseSymMatrix A;
  SparseSymMatrix M;
  Eigen::SparseMatrix<double> prolongation;

  int size() const { return static_cast<int>(A.rows()); }
};

DiscreteSystem assemble(const OperatorSpec& spec, const CrackMesh& mesh);

/// "i j value" lines, one per stored entry, column by column.
void write_triplets(std::ostream& os, const SparseSymMatrix& matrix);

}  // namespace starspec
