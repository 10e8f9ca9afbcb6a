#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "starspec/assembly.hpp"

namespace starspec {

class EigensolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Lowest eigenpairs of A x = lambda M x.
struct Spectrum {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // M-orthonormal columns
  std::vector<double> residuals;    // |A x - lambda M x|_{M^-1} / |x|_M
  std::optional<std::pair<double, int>> certified_count_below;
  int iterations = 0;
  double shift = 0.0;  // shift actually used

  int size() const { return static_cast<int>(eigenvalues.size()); }
  /// Number of listed eigenvalues strictly below t.
  int listed_below(double t) const;
};

/// Thrown when the iteration runs out of steps; carries the last iterate.
class NonConvergence : public EigensolveError {
public:
  NonConvergence(const std::string& what, Spectrum partial)
      : EigensolveError(what), partial_(std::move(partial)) {}
  const Spectrum& partial() const { return partial_; }

private:
  Spectrum partial_;
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iterations = 500;
  int block_size = 0;  // 0: max(k, 4)
  std::uint64_t seed = 0x5eed5eedULL;
};

/// Shift used when none is given: 1.5 times the essential threshold -4 alpha^2.
double default_shift(double alpha);

/// The k lowest eigenpairs by shift-and-invert block Krylov iteration with
/// Rayleigh-Ritz on (A, M). The shift is lowered until the factorization of
/// A - shift M has no negative pivots, so the iteration starts below the
/// spectrum and the returned pairs are the k lowest.
Spectrum solve_lowest(const SparseSymMatrix& A, const SparseSymMatrix& M, int k, double shift,
                      const SolverOptions& options = {});

/// Number of eigenvalues of (A, M) below `threshold`, from the inertia of
/// A - threshold M (Sylvester's law).
int count_below(const SparseSymMatrix& A, const SparseSymMatrix& M, double threshold);

/// x^T A x / x^T M x.
double rayleigh(const SparseSymMatrix& A, const SparseSymMatrix& M, const Eigen::VectorXd& x);

/// Dual-norm residual |A x - lambda M x|_{M^-1} / |x|_M.
std::vector<double> residual_norms(const SparseSymMatrix& A, const SparseSymMatrix& M,
                                   const std::vector<double>& eigenvalues, const Eigen::MatrixXd& vectors);

/// Dense reference solver (all eigenpairs, or the k lowest).
Spectrum solve_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int k = -1);

}  // namespace starspec
