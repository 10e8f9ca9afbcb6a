#include "starspec/models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace starspec {

namespace {

double default_shift_for(double threshold) { return threshold < 0.0 ? 1.5 * threshold : -1.0; }

ModelResult finish(ModelKind kind, const OperatorSpec& spec, const MeshParams& params, const DiscreteSystem& sys,
                   int k, const SolveOptions& options) {
  ModelResult r;
  r.model = kind;
  r.spec = spec;
  r.mesh_params = params;
  r.ess_threshold = spec.ess_threshold();
  r.dofs = sys.size();
  r.spectrum = solve_system(sys, k, r.ess_threshold, options);
  return r;
}

void check_count(int k) {
  if (k < 1) throw ModelError("eigenpair count must be at least 1");
}

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
void gauss_legendre(int q, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int i = 1; i < q; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = 0.5 * (es.eigenvalues().array() + 1.0);
  weights = es.eigenvectors().row(0).transpose().array().square();  // sums to 1 = |[0, 1]|
}

/// Composite Gauss-Legendre on [0, 1]: `panels` equal panels of order q.
template <typename F>
double integrate_unit(F&& f, int q, int panels = 8) {
  Eigen::VectorXd x, w;
  gauss_legendre(q, x, w);
  double s = 0.0;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < q; ++i) s += w[i] * f((p + x[i]) / panels) / panels;
  return s;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::star: return "star";
    case ModelKind::robin_sector: return "robin_sector";
    case ModelKind::delta_line: return "delta_line";
    case ModelKind::half_neumann: return "half_neumann";
    case ModelKind::half_dirichlet: return "half_dirichlet";
  }
  return "unknown";
}

int ModelResult::count_below_threshold() const {
  return spectrum.certified_count_below ? spectrum.certified_count_below->second : -1;
}

double DeltaPrime1D::eigenfunction(double x) {
  if (x == 0.0) return 0.0;
  return (x > 0.0 ? 1.0 : -1.0) * std::exp(-2.0 * std::abs(x));
}

double DeltaPrime1D::derivative(double x) { return -2.0 * std::exp(-2.0 * std::abs(x)); }

double DeltaPrime1D::norm_squared() { return 0.5; }

DeltaPrime1D exact_delta_prime_1d() { return DeltaPrime1D{-4.0}; }

Spectrum solve_delta_prime_1d(double L, int n, int k, double alpha, const SolverOptions& options) {
  if (!(L > 0.0) || !std::isfinite(L)) throw ModelError("half-length must be positive");
  if (n < 2) throw ModelError("need at least 2 nodes per side");
  if (!std::isfinite(alpha)) throw ModelError("coupling must be finite");
  const double h = L / n;
  // Unknowns 0..n-1: x = -L + (i+1) h (the last one is 0-); n..2n-1: x = (i-n) h
  // (the first one is 0+). The nodes at +-L are fixed to zero.
  const int dofs = 2 * n;
  std::vector<Eigen::Triplet<double>> a, m;
  auto element = [&](int i, int j) {  // element between unknowns i and j (-1: boundary)
    const int ids[2] = {i, j};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        if (ids[r] < 0 || ids[c] < 0) continue;
        a.emplace_back(ids[r], ids[c], (r == c ? 1.0 : -1.0) / h);
        m.emplace_back(ids[r], ids[c], (r == c ? 2.0 : 1.0) * h / 6.0);
      }
  };
  element(-1, 0);
  for (int i = 0; i + 1 < n; ++i) element(i, i + 1);
  for (int i = n; i + 1 < dofs; ++i) element(i, i + 1);
  element(dofs - 1, -1);
  // alpha |f(0+) - f(0-)|^2
  a.emplace_back(n - 1, n - 1, alpha);
  a.emplace_back(n, n, alpha);
  a.emplace_back(n - 1, n, -alpha);
  a.emplace_back(n, n - 1, -alpha);
  SparseSymMatrix A(dofs, dofs), M(dofs, dofs);
  A.setFromTriplets(a.begin(), a.end());
  M.setFromTriplets(m.begin(), m.end());
  const double shift = alpha < 0.0 ? default_shift(alpha) : -1.0;
  return solve_lowest(A, M, std::min(k, dofs), shift, options);
}

Spectrum solve_system(const DiscreteSystem& sys, int k, double threshold, const SolveOptions& options) {
  check_count(k);
  const double shift = options.shift.value_or(default_shift_for(threshold));
  Spectrum s = solve_lowest(sys.A, sys.M, std::min(k, sys.size()), shift, options.solver);
  if (options.certify) s.certified_count_below = std::make_pair(threshold, count_below(sys.A, sys.M, threshold));
  return s;
}

ModelResult solve_star(const StarGraph& graph, const MeshParams& params, int k, const SolveOptions& options) {
  check_count(k);
  const auto mesh = build_star_mesh(graph, params);
  const auto spec = OperatorSpec::delta_prime_star(graph.alpha);
  auto r = finish(ModelKind::star, spec, params, assemble(spec, mesh), k, options);
  r.graph = graph;
  return r;
}

ModelResult solve_robin_sector(double gamma, double theta, const MeshParams& params, int k,
                               const SolveOptions& options) {
  check_count(k);
  if (!(gamma > 0.0)) throw ModelError("Robin coupling must be positive");
  if (!(theta > 0.0 && theta < kPi)) throw ModelError("sector half-opening must lie in (0, pi)");
  const auto mesh = build_sector_mesh(theta, params);
  const auto spec = OperatorSpec::robin_sector(gamma);
  auto r = finish(ModelKind::robin_sector, spec, params, assemble(spec, mesh), k, options);
  r.theta = theta;
  return r;
}

ModelResult solve_delta_line(double gamma, double theta, const MeshParams& params, int k,
                             const SolveOptions& options) {
  check_count(k);
  if (!(gamma >= 0.0)) throw ModelError("delta coupling must be non-negative");
  if (!(theta > 0.0 && theta <= 0.5 * kPi)) throw ModelError("broken-line angle must lie in (0, pi/2]");
  const StarGraph graph = make_star_graph({theta, kTwoPi - theta}, -1.0);
  const auto mesh = build_star_mesh(graph, params);
  const auto spec = OperatorSpec::delta_line(gamma);
  auto r = finish(ModelKind::delta_line, spec, params, assemble(spec, mesh), k, options);
  r.graph = graph;
  r.theta = theta;
  return r;
}

HalfProblems solve_half_problems(double theta, const MeshParams& params, int k, double alpha,
                                 const SolveOptions& options) {
  check_count(k);
  if (!(theta > 0.0 && theta < 0.5 * kPi)) throw ModelError("half-problem angle must lie in (0, pi/2)");
  const auto mesh = build_half_domain_mesh(theta, params, HalfBoundary::neumann);
  const auto n_spec = OperatorSpec::half_neumann(alpha);
  const auto d_spec = OperatorSpec::half_dirichlet(alpha);
  HalfProblems out{finish(ModelKind::half_neumann, n_spec, params, assemble(n_spec, mesh), k, options),
                   finish(ModelKind::half_dirichlet, d_spec, params, assemble(d_spec, mesh), k, options)};
  out.neumann.theta = out.dirichlet.theta = theta;
  return out;
}

ScaleReport scale_check(const ModelResult& base, double factor, const SolveOptions& options, double tolerance) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ModelError("scale factor must be positive");
  const MeshParams p = base.mesh_params.scaled(1.0 / factor);
  const int k = base.spectrum.size();
  ModelResult scaled;
  switch (base.model) {
    case ModelKind::star: {
      StarGraph g = base.graph;
      g.alpha *= factor;
      scaled = solve_star(g, p, k, options);
      break;
    }
    case ModelKind::robin_sector:
      scaled = solve_robin_sector(base.spec.gamma * factor, base.theta, p, k, options);
      break;
    case ModelKind::delta_line:
      scaled = solve_delta_line(base.spec.gamma * factor, base.theta, p, k, options);
      break;
    case ModelKind::half_neumann:
    case ModelKind::half_dirichlet: {
      const auto both = solve_half_problems(base.theta, p, k, base.spec.alpha * factor, options);
      scaled = base.model == ModelKind::half_neumann ? both.neumann : both.dirichlet;
      break;
    }
  }
  if (scaled.dofs != base.dofs) throw ModelError("scaled mesh does not match the base mesh");

  ScaleReport rep;
  rep.factor = factor;
  rep.tolerance = tolerance;
  rep.base = base.spectrum.eigenvalues;
  rep.scaled = scaled.spectrum.eigenvalues;
  for (double l : rep.base) rep.expected.push_back(factor * factor * l);
  for (std::size_t i = 0; i < rep.expected.size(); ++i) {
    const double e = std::abs(rep.scaled[i] - rep.expected[i]) / std::max(1.0, std::abs(rep.expected[i]));
    rep.max_relative_error = std::max(rep.max_relative_error, e);
  }
  rep.passed = rep.scaled.size() == rep.expected.size() && rep.max_relative_error <= tolerance;
  return rep;
}

SmoothStep smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double s = 1.0 - t;
  const double p = std::exp(-1.0 / t), q = std::exp(-1.0 / s);
  const double p1 = p / (t * t), q1 = -q / (s * s);
  const double p2 = p * (1.0 / std::pow(t, 4) - 2.0 / std::pow(t, 3));
  const double q2 = q * (1.0 / std::pow(s, 4) - 2.0 / std::pow(s, 3));
  const double d = p + q;
  const double num = p1 * q - p * q1;
  return {p / d, num / (d * d), (p2 * q - p * q2) / (d * d) - 2.0 * num * (p1 + q1) / (d * d * d)};
}

WeylTerms weyl_terms(double k, int n, double a, int quad_points) {
  if (n < 2) throw ModelError("Weyl sequence index must be at least 2");
  if (!(a > 0.0) || a * n < 1.0) throw ModelError("Weyl cutoff needs a * n >= 1");
  if (quad_points < 2) throw ModelError("need at least 2 quadrature points");
  const double an = a * n;

  // x-factors: chi = 1 on [n+1, 2n-1]; the two unit transition strips are
  // mirror images, so each integral is twice the one over Phi on [0, 1].
  auto strip = [&](auto&& f) { return 2.0 * integrate_unit(f, quad_points); };
  const double x_chi2 = (n - 2) + strip([](double t) { return std::pow(smooth_step(t).value, 2); });
  const double x_chi_chi2 = strip([](double t) {
    const auto s = smooth_step(t);
    return s.value * s.d2;
  });
  const double x_chi2_2 = strip([](double t) { return std::pow(smooth_step(t).d2, 2); });
  const double x_chi1_2 = strip([](double t) { return std::pow(smooth_step(t).d1, 2); });

  // y-factors on the upper half, weight e^{-4y}. chi~ = 1 on [0, an-1]; on
  // [an-1, an] it is Phi(an - y), so with t = an - y: chi~' = -Phi'(t),
  // chi~'' = Phi''(t).
  auto upper = [&](auto&& f) {
    return integrate_unit([&](double t) { return f(smooth_step(t)) * std::exp(-4.0 * (an - t)); }, quad_points);
  };
  const double plateau = (1.0 - std::exp(-4.0 * (an - 1.0))) / 4.0;
  const double y_b2 = plateau + upper([](const SmoothStep& s) { return s.value * s.value; });
  const double y_a2 = upper([](const SmoothStep& s) { return std::pow(-4.0 * s.d1 - s.d2, 2); });
  const double y_ab = upper([](const SmoothStep& s) { return (-4.0 * s.d1 - s.d2) * s.value; });

  // |g|^2 = ([A chi - chi'' B]^2 + 4 k^2 chi'^2 B^2) e^{-4y}, A = 4 chi~' - chi~'',
  // B = chi~; both half-planes contribute equally.
  WeylTerms w;
  w.norm_squared = 2.0 * x_chi2 * y_b2;
  w.residual_squared =
      2.0 * (x_chi2 * y_a2 - 2.0 * x_chi_chi2 * y_ab + x_chi2_2 * y_b2 + 4.0 * k * k * x_chi1_2 * y_b2);
  w.quotient = w.residual_squared / w.norm_squared;
  return w;
}

double weyl_quotient(double k, int n, double a, int quad_points) { return weyl_terms(k, n, a, quad_points).quotient; }

double weyl_default_a(const StarGraph& graph) {
  double a = 1.0;
  for (std::size_t j = 1; j < graph.angles.size(); ++j) {
    const double phi = graph.angles[j] - graph.angles[0];
    if (std::cos(phi) > 0.0) a = std::min(a, 0.5 * std::abs(std::tan(phi)));
  }
  return a;
}

double weyl_quotient(const StarGraph& graph, double k, int n, std::optional<double> a, int quad_points) {
  const double aa = a.value_or(weyl_default_a(graph));
  for (std::size_t j = 1; j < graph.angles.size(); ++j) {
    const double phi = graph.angles[j] - graph.angles[0];
    if (std::cos(phi) > 0.0 && std::abs(std::tan(phi)) <= aa)
      throw ModelError("Weyl support rectangle meets branch " + std::to_string(j));
  }
  return weyl_quotient(k, n, aa, quad_points);
}

}  // namespace starspec
