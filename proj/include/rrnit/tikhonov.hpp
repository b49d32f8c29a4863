#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rrnit/linear_operator.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

enum class SolveMode { automatic, cg, dense };

struct SolveStats {
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = true;
};

/// Thrown when an iterative solve exhausts its budget without reaching the
/// requested tolerance; carries the best iterate seen and its achieved
/// residual so callers can inspect or salvage the partial result.
class CgFailure : public std::runtime_error {
 public:
  CgFailure(const std::string& what, Vector best, SolveStats stats)
      : std::runtime_error(what), best_(std::move(best)), stats_(stats) {}

  const Vector& best_iterate() const { return best_; }
  const SolveStats& stats() const { return stats_; }

 private:
  Vector best_;
  SolveStats stats_;
};

struct TikhonovOptions {
  SolveMode mode = SolveMode::automatic;
  double cg_tol = 1e-10;
  std::size_t cg_max_iter = 0;  // 0 selects 10 * domain_dim
  bool best_effort = false;     // keep the best iterate instead of throwing
};

struct StepResult {
  Vector candidate;
  double residual_sq = 0.0;
  std::size_t linear_solves = 0;
  std::size_t krylov_iterations = 0;
  bool degraded = false;  // some best-effort solve stopped short of tolerance
};

namespace detail {

/// Conjugate gradients on (shift*I + A*A) x = b, which is symmetric positive
/// definite for shift > 0. Starts from zero, tracks the best iterate by
/// residual so a stalled run still returns something usable.
inline SolveStats cg_shifted_normal(const LinearOperator& op, double shift, const Vector& b,
                                    Vector& x, double tol, std::size_t max_iter) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  SolveStats stats;
  Vector r = b;
  double rr = dot(r, r);
  const double nb = std::sqrt(rr);
  if (nb == 0.0) return stats;

  Vector p = r;
  Vector best = x;
  double best_rr = rr;
  std::size_t it = 0;
  while (it < max_iter && std::sqrt(rr) > tol * nb) {
    Vector q = op.apply_adjoint(op.apply(p));
    for (std::size_t i = 0; i < n; ++i) q[i] += shift * p[i];
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // positivity lost to rounding; stop with the best iterate
    const double alpha = rr / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    const double rr_new = dot(r, r);
    ++it;
    if (rr_new < best_rr) {
      best_rr = rr_new;
      best = x;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (best_rr < rr) {
    x = best;
    rr = best_rr;
  }
  stats.iterations = it;
  stats.final_relative_residual = std::sqrt(rr) / nb;
  stats.converged = stats.final_relative_residual <= tol;
  return stats;
}

/// In-place lower-triangular Cholesky factor; false when the matrix is not
/// numerically positive definite.
inline bool cholesky_factor(std::vector<double>& m, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = m[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    m[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
      m[i * n + j] = s / d;
    }
  }
  return true;
}

inline void cholesky_solve_in_place(const std::vector<double>& L, std::size_t n, Vector& x) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * x[k];
    x[i] = s / L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * x[k];
    x[ii] = s / L[ii * n + ii];
  }
}

/// Assemble alpha*I + A^T A for the dense solve path.
inline std::vector<double> shifted_normal_matrix(const LinearOperator& op, double alpha) {
  const std::vector<double> a = to_dense(op);
  const std::size_t m = op.range_dim();
  const std::size_t n = op.domain_dim();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const double* row = a.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      for (std::size_t j = i; j < n; ++j) g[i * n + j] += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    g[i * n + i] += alpha;
    for (std::size_t j = i + 1; j < n; ++j) g[j * n + i] = g[i * n + j];
  }
  return g;
}

struct AlphaSolveOutcome {
  SolveStats stats;
  bool degraded = false;
};

constexpr std::size_t dense_solve_dim_limit = 512;

/// Single entry point for every regularized system in the library:
/// solve (alpha*I + A*A) x = b with alpha > 0, dispatching on mode.
inline AlphaSolveOutcome solve_alpha(const LinearOperator& op, double alpha, const Vector& b,
                                     Vector& x, const TikhonovOptions& opt) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("solve_alpha: shift must be positive and finite");
  }
  if (b.size() != op.domain_dim()) {
    throw std::invalid_argument("solve_alpha: right-hand side dimension mismatch");
  }
  AlphaSolveOutcome out;
  if (opt.mode == SolveMode::automatic && op.solve_shifted_normal(alpha, b, x)) {
    return out;  // structural exact solve: zero Krylov iterations
  }
  if (opt.mode == SolveMode::dense) {
    const std::size_t n = op.domain_dim();
    if (n > dense_solve_dim_limit) {
      throw std::invalid_argument("solve_alpha: dense mode limited to dimension " +
                                  std::to_string(dense_solve_dim_limit));
    }
    std::vector<double> g = shifted_normal_matrix(op, alpha);
    if (!cholesky_factor(g, n)) {
      throw std::runtime_error("solve_alpha: shifted normal matrix not numerically "
                               "positive definite at alpha=" + std::to_string(alpha));
    }
    x = b;
    cholesky_solve_in_place(g, n, x);
    return out;
  }
  const std::size_t cap = opt.cg_max_iter != 0 ? opt.cg_max_iter : 10 * op.domain_dim();
  out.stats = cg_shifted_normal(op, alpha, b, x, opt.cg_tol, cap);
  if (!out.stats.converged) {
    if (!opt.best_effort) {
      throw CgFailure("conjugate gradient stopped at relative residual " +
                          std::to_string(out.stats.final_relative_residual) + " after " +
                          std::to_string(out.stats.iterations) + " iterations (tolerance " +
                          std::to_string(opt.cg_tol) + ")",
                      std::move(x), out.stats);
    }
    out.degraded = true;
  }
  return out;
}

inline void check_step_arguments(const LinearOperator& op, const Vector& x_prev,
                                 const Vector& y_delta, const char* where) {
  if (x_prev.size() != op.domain_dim()) {
    throw std::invalid_argument(std::string(where) + ": iterate dimension mismatch");
  }
  if (y_delta.size() != op.range_dim()) {
    throw std::invalid_argument(std::string(where) + ": data dimension mismatch");
  }
}

}  // namespace detail

/// Solve (I + lambda A*A) x = rhs by conjugate gradients. Errors with
/// CgFailure (carrying the best iterate) when the budget runs out first.
inline std::pair<Vector, SolveStats> spd_solve(const LinearOperator& op, double lambda,
                                               const Vector& rhs, double tol = 1e-10,
                                               std::size_t max_iter = 0) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("spd_solve: lambda must be positive and finite");
  }
  TikhonovOptions opt;
  opt.mode = SolveMode::cg;
  opt.cg_tol = tol;
  opt.cg_max_iter = max_iter;
  // (I + lambda A*A) x = rhs  <=>  (lambda^-1 I + A*A) x = lambda^-1 rhs
  Vector x;
  const auto outcome = detail::solve_alpha(op, 1.0 / lambda, scale(1.0 / lambda, rhs), x, opt);
  return {std::move(x), outcome.stats};
}

/// One Tikhonov step anchored at x_prev: the minimizer of
/// lambda*||A x - y||^2 + ||x - x_prev||^2. For lambda <= 1 the update form
/// x_prev - lambda (I + lambda A*A)^-1 A*(A x_prev - y) is used; for
/// lambda > 1 the normal-equations form (lambda^-1 I + A*A) x =
/// lambda^-1 x_prev + A*y avoids amplifying solver error by lambda.
inline StepResult tikhonov_step(const LinearOperator& op, const Vector& x_prev,
                                const Vector& y_delta, double lambda,
                                const TikhonovOptions& opt = {}) {
  detail::check_step_arguments(op, x_prev, y_delta, "tikhonov_step");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("tikhonov_step: lambda must be positive and finite");
  }
  StepResult out;
  detail::AlphaSolveOutcome oc;
  Vector z;
  if (lambda > 1.0) {
    Vector rhs = op.apply_adjoint(y_delta);
    axpy(1.0 / lambda, x_prev, rhs);
    oc = detail::solve_alpha(op, 1.0 / lambda, rhs, z, opt);
    out.candidate = std::move(z);
  } else {
    const Vector h = op.apply_adjoint(subtract(op.apply(x_prev), y_delta));
    oc = detail::solve_alpha(op, 1.0 / lambda, scale(1.0 / lambda, h), z, opt);
    out.candidate = x_prev;
    axpy(-lambda, z, out.candidate);
  }
  const Vector r = subtract(op.apply(out.candidate), y_delta);
  out.residual_sq = dot(r, r);
  out.linear_solves = 1;
  out.krylov_iterations = oc.stats.iterations;
  out.degraded = oc.degraded;
  return out;
}

/// G(lambda) = ||A x(lambda) - y||^2 where x(lambda) is the Tikhonov step
/// from x_prev. G(0) = ||A x_prev - y||^2 by convention and costs no solve.
inline StepResult g_value(const LinearOperator& op, const Vector& x_prev, const Vector& y_delta,
                          double lambda, const TikhonovOptions& opt = {}) {
  detail::check_step_arguments(op, x_prev, y_delta, "g_value");
  if (lambda == 0.0) {
    StepResult out;
    out.candidate = x_prev;
    const Vector r = subtract(op.apply(x_prev), y_delta);
    out.residual_sq = dot(r, r);
    return out;
  }
  return tikhonov_step(op, x_prev, y_delta, lambda, opt);
}

/// Derivative of G at lambda, given the already-computed step candidate:
/// G'(lambda) = -2 <v, (I + lambda A*A)^-1 v> with v = A*(A x(lambda) - y).
/// Always nonpositive; zero exactly when the candidate is already stationary.
inline double g_derivative(const LinearOperator& op, const Vector& x_prev, const Vector& y_delta,
                           double lambda, const Vector& candidate,
                           const TikhonovOptions& opt = {}, SolveStats* stats = nullptr) {
  detail::check_step_arguments(op, x_prev, y_delta, "g_derivative");
  if (candidate.size() != op.domain_dim()) {
    throw std::invalid_argument("g_derivative: candidate dimension mismatch");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("g_derivative: lambda must be positive and finite");
  }
  if (stats) *stats = SolveStats{};
  const Vector v = op.apply_adjoint(subtract(op.apply(candidate), y_delta));
  if (dot(v, v) == 0.0) return 0.0;
  Vector w;
  const auto oc = detail::solve_alpha(op, 1.0 / lambda, scale(1.0 / lambda, v), w, opt);
  if (stats) *stats = oc.stats;
  return -2.0 * dot(v, w);
}

}  // namespace rrnit
