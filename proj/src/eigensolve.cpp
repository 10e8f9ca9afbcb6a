#include "starspec/eigensolve.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace starspec {

namespace {

using Ldlt = Eigen::SimplicialLDLT<SparseSymMatrix, Eigen::Lower>;

struct Inertia {
  bool ok = false;
  int negative = 0;
};

/// Factors A - sigma M and counts negative pivots.
Inertia factor(const SparseSymMatrix& A, const SparseSymMatrix& M, double sigma, Ldlt& ldlt) {
  const SparseSymMatrix k = A - sigma * M;
  ldlt.compute(k);
  Inertia in;
  if (ldlt.info() != Eigen::Success) return in;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  for (int i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= 1e-14 * dmax) return in;
    if (d[i] < 0.0) ++in.negative;
  }
  in.ok = true;
  return in;
}

void check_pair(const SparseSymMatrix& A, const SparseSymMatrix& M) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw EigensolveError("A and M must be square and of equal size");
  if (A.rows() == 0) throw EigensolveError("empty system");
}

/// Deterministic uniform(-1, 1) fill from a 64-bit Mersenne twister.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double next() { return 2.0 * static_cast<double>(gen_() >> 11) * 0x1.0p-53 - 1.0; }
  Eigen::VectorXd vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = next();
    return v;
  }

private:
  std::mt19937_64 gen_;
};

/// M-orthonormal basis grown column by column (classical Gram-Schmidt,
/// twice). Each column may carry its image under S = (A - sigma M)^-1 M;
/// images are transformed with the same coefficients as the columns.
class KrylovBasis {
public:
  KrylovBasis(const SparseSymMatrix& M, int n, int capacity)
      : M_(M), V_(n, capacity), MV_(n, capacity), SV_(n, capacity), has_image_(capacity, false) {}

  int size() const { return cols_; }
  bool full() const { return cols_ == static_cast<int>(V_.cols()); }
  auto V() const { return V_.leftCols(cols_); }
  auto MV() const { return MV_.leftCols(cols_); }
  auto SV() const { return SV_.leftCols(cols_); }
  bool has_image(int j) const { return has_image_[j]; }
  void set_image(int j, const Eigen::VectorXd& s) {
    SV_.col(j) = s;
    has_image_[j] = true;
  }

  /// Appends the normalized component of w outside the basis; false when w
  /// lies (numerically) inside it. Passing `image` = S w requires every
  /// current column to have its image.
  bool add(Eigen::VectorXd w, const Eigen::VectorXd* image = nullptr) {
    if (full()) return false;
    Eigen::VectorXd mw = M_ * w;
    Eigen::VectorXd sw = image ? *image : Eigen::VectorXd();
    const double norm0 = std::sqrt(std::max(0.0, w.dot(mw)));
    if (!(norm0 > 0.0) || !std::isfinite(norm0)) return false;
    for (int pass = 0; pass < 2 && cols_ > 0; ++pass) {
      const Eigen::VectorXd c = MV().transpose() * w;
      w.noalias() -= V() * c;
      mw.noalias() -= MV() * c;
      if (image) sw.noalias() -= SV() * c;
    }
    const double norm = std::sqrt(std::max(0.0, w.dot(mw)));
    if (!(norm > 1e-8 * norm0)) return false;
    V_.col(cols_) = w / norm;
    MV_.col(cols_) = mw / norm;
    has_image_[cols_] = image != nullptr;
    if (image) SV_.col(cols_) = sw / norm;
    ++cols_;
    return true;
  }

  void reset() {
    cols_ = 0;
    std::fill(has_image_.begin(), has_image_.end(), false);
  }

private:
  const SparseSymMatrix& M_;
  Eigen::MatrixXd V_;
  Eigen::MatrixXd MV_;
  Eigen::MatrixXd SV_;
  std::vector<bool> has_image_;
  int cols_ = 0;
};

Spectrum sorted_by_value(const Spectrum& s) {
  std::vector<int> order(s.eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return s.eigenvalues[i] < s.eigenvalues[j]; });
  Spectrum out = s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.eigenvalues[i] = s.eigenvalues[order[i]];
    out.residuals[i] = s.residuals[order[i]];
    out.eigenvectors.col(static_cast<int>(i)) = s.eigenvectors.col(order[i]);
  }
  return out;
}

}  // namespace

int Spectrum::listed_below(double t) const {
  return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(), [t](double l) { return l < t; }));
}

double default_shift(double alpha) { return -4.0 * alpha * alpha * 1.5; }

double rayleigh(const SparseSymMatrix& A, const SparseSymMatrix& M, const Eigen::VectorXd& x) {
  if (x.size() != A.rows()) throw EigensolveError("vector size does not match the system");
  const double den = x.dot(M * x);
  if (!(den > 0.0)) throw EigensolveError("Rayleigh quotient of the zero vector");
  return x.dot(A * x) / den;
}

std::vector<double> residual_norms(const SparseSymMatrix& A, const SparseSymMatrix& M,
                                   const std::vector<double>& eigenvalues, const Eigen::MatrixXd& vectors) {
  Eigen::SimplicialLLT<SparseSymMatrix> llt(M);
  if (llt.info() != Eigen::Success) throw EigensolveError("mass matrix is not positive definite");
  std::vector<double> out(eigenvalues.size());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const Eigen::VectorXd x = vectors.col(static_cast<int>(i));
    const Eigen::VectorXd mx = M * x;
    const Eigen::VectorXd r = A * x - eigenvalues[i] * mx;
    const Eigen::VectorXd z = llt.solve(r);
    out[i] = std::sqrt(std::max(0.0, r.dot(z))) / std::sqrt(x.dot(mx));
  }
  return out;
}

int count_below(const SparseSymMatrix& A, const SparseSymMatrix& M, double threshold) {
  check_pair(A, M);
  const double scale = std::max(1.0, std::abs(threshold));
  Ldlt ldlt;
  for (double t : {threshold, threshold - 1e-8 * scale, threshold + 1e-8 * scale}) {
    const Inertia in = factor(A, M, t, ldlt);
    if (in.ok) return in.negative;
  }
  throw EigensolveError("factorization breakdown at threshold " + std::to_string(threshold));
}

Spectrum solve_lowest(const SparseSymMatrix& A, const SparseSymMatrix& M, int k, double shift,
                      const SolverOptions& options) {
  check_pair(A, M);
  const int n = static_cast<int>(A.rows());
  if (k < 1 || k > n) throw EigensolveError("requested eigenpair count out of range");
  if (!std::isfinite(shift)) throw EigensolveError("shift must be finite");
  {
    Eigen::SimplicialLLT<SparseSymMatrix> mllt(M);
    if (mllt.info() != Eigen::Success) throw EigensolveError("mass matrix is not positive definite");
  }

  // Move the shift below the spectrum; a singular factorization is retried
  // once with a slightly perturbed shift.
  Ldlt ldlt;
  double sigma = shift;
  for (int attempt = 0;; ++attempt) {
    Inertia in = factor(A, M, sigma, ldlt);
    if (!in.ok) {
      sigma -= 1e-8 * std::max(1.0, std::abs(sigma));
      in = factor(A, M, sigma, ldlt);
      if (!in.ok) throw EigensolveError("singular factorization at shift " + std::to_string(sigma));
    }
    if (in.negative == 0) break;
    if (attempt > 60) throw EigensolveError("could not place the shift below the spectrum");
    sigma -= 2.0 * std::max(1.0, std::abs(sigma));
  }
  auto apply_s = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return ldlt.solve(M * v); };

  const int b = std::min(n, options.block_size > 0 ? options.block_size : std::max(k, 4));
  const int m = std::min(n, std::max(4 * b, 24));
  const int keep = std::max(0, std::min(m - b, std::max(2 * b, k + 4)));
  Rng rng(options.seed);
  KrylovBasis basis(M, n, m);

  auto fill_random = [&](int count) {
    const int target = std::min(m, basis.size() + count);
    for (int guard = 0; basis.size() < target && guard < 4 * m; ++guard) basis.add(apply_s(rng.vector(n)));
  };

  // Block Krylov expansion: the images of the newest columns become the next
  // columns until the basis is full. Every column ends up with its image.
  auto expand = [&] {
    int first = 0;
    while (first < basis.size() && basis.has_image(first)) ++first;
    while (true) {
      const int last = basis.size();
      std::vector<Eigen::VectorXd> images;
      for (int j = first; j < last; ++j) {
        if (basis.has_image(j)) continue;
        images.push_back(apply_s(basis.V().col(j)));
        basis.set_image(j, images.back());
      }
      if (basis.full()) return;
      for (const auto& w : images) basis.add(w);
      if (basis.size() == last) fill_random(1);
      if (basis.size() == last) return;  // the whole space is spanned
      first = last;
    }
  };

  Spectrum out;
  out.shift = sigma;
  fill_random(b);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    expand();
    const int cols = basis.size();

    // Rayleigh-Ritz for S in the M inner product; the largest Ritz values mu
    // of S belong to the lowest lambda = sigma + 1/mu.
    Eigen::MatrixXd T = basis.MV().transpose() * basis.SV();
    Eigen::MatrixXd G = basis.MV().transpose() * basis.V();
    T = 0.5 * (T + T.transpose()).eval();
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(T, G);
    if (rr.info() != Eigen::Success) throw EigensolveError("Rayleigh-Ritz step failed");
    const Eigen::MatrixXd Q = rr.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd mu = rr.eigenvalues().reverse();
    const Eigen::MatrixXd Y = basis.V() * Q;
    const Eigen::MatrixXd SY = basis.SV() * Q;

    const int kk = std::min(k, cols);
    out.eigenvalues.resize(kk);
    out.residuals.resize(kk);
    out.eigenvectors = Y.leftCols(kk);
    bool converged = kk == k;
    for (int i = 0; i < kk; ++i) {
      const Eigen::VectorXd y = Y.col(i);
      const double ny = y.dot(M * y);
      const double lambda = y.dot(A * y) / ny;
      out.eigenvectors.col(i) /= std::sqrt(ny);
      out.eigenvalues[i] = lambda;
      // Residual of the shift-inverted problem in eigenvalue units:
      // |lambda - sigma| |(A - sigma M)^-1 (A y - lambda M y)|_M / |y|_M, where
      // the solve is y - (lambda - sigma) S y. Unlike the M^-1 norm of
      // A y - lambda M y, it does not amplify rounding in high modes.
      const Eigen::VectorXd z = y - (lambda - sigma) * SY.col(i);
      out.residuals[i] = std::abs(lambda - sigma) * std::sqrt(std::max(0.0, z.dot(M * z)) / ny);
      if (!(out.residuals[i] <= options.tol * std::max(1.0, std::abs(lambda)))) converged = false;
    }
    out.iterations = iter;
    if (converged || cols == n) return sorted_by_value(out);

    // Thick restart: keep the leading Ritz vectors (with their images) and
    // continue from the Ritz residual directions S y - mu y.
    basis.reset();
    const int kept = std::min(keep, cols);
    for (int j = 0; j < kept; ++j) {
      const Eigen::VectorXd sy = SY.col(j);
      basis.add(Y.col(j), &sy);
    }
    const int before = basis.size();
    for (int j = 0; j < kept && basis.size() < std::min(m, before + b); ++j)
      basis.add(SY.col(j) - mu[j] * Y.col(j));
    if (basis.size() == before) fill_random(b);
  }
  throw NonConvergence("eigensolver did not converge in " + std::to_string(options.max_iterations) + " iterations",
                       sorted_by_value(out));
}

Spectrum solve_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int k) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows() || A.rows() == 0)
    throw EigensolveError("A and M must be square, non-empty and of equal size");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M);
  if (es.info() != Eigen::Success) throw EigensolveError("dense generalized eigensolver failed");
  const int n = static_cast<int>(A.rows());
  const int kk = k < 0 ? n : std::min(k, n);
  Spectrum s;
  s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + kk);
  s.eigenvectors = es.eigenvectors().leftCols(kk);
  s.residuals.assign(kk, 0.0);
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  for (int i = 0; i < kk; ++i) {
    const Eigen::VectorXd x = s.eigenvectors.col(i);
    const Eigen::VectorXd r = A * x - s.eigenvalues[i] * (M * x);
    s.residuals[i] = std::sqrt(std::max(0.0, r.dot(llt.solve(r)))) / std::sqrt(x.dot(M * x));
  }
  return s;
}

}  // namespace starspec
