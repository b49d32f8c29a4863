#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rrnit/linear_operator.hpp"
#include "rrnit/tikhonov.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

/// Residual range [delta, theta] an outer step must land in, together with
/// the relaxation factor p that generated theta.
struct RangeTarget {
  double delta = 0.0;
  double theta = 0.0;
  double p = 0.0;
};

enum class WarmStart { extrapolate, previous };

struct MultiplierOptions {
  bool m1 = true;  // take the greedy numerator G instead of G - delta^2
  bool m2 = true;  // double the relaxation factor while far above the range
  bool m3 = true;  // warm-start from the multiplier history
  WarmStart warm_start = WarmStart::extrapolate;
  int inner_cap = 50;
  int bisection_cap = 60;
  TikhonovOptions solve{};
};

struct MultiplierResult {
  double lambda = 0.0;
  Vector candidate;
  double accepted_residual = 0.0;
  int inner_iterations = 0;
  int bisection_steps = 0;
  std::int64_t linear_solves = 0;
  std::int64_t krylov_iterations = 0;
  std::vector<double> omega_history;
};

/// Raised when no acceptable multiplier is found within the configured
/// budgets, or when the search degenerates (vanishing derivative, non-finite
/// values). The message carries the search state for diagnostics.
class MultiplierFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// theta_k = p * r_{k-1} + (1 - p) * delta. Kept as the single definition so
/// the solver and trace verification compute bitwise-identical targets.
inline double range_theta(double p, double previous_residual, double delta) {
  return p * previous_residual + (1.0 - p) * delta;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

/// Lower bound on any multiplier whose step residual is at most mu:
/// lambda >= (r - mu) * r / ||A*(A x_prev - y)||^2 with r = ||A x_prev - y||.
/// Returns 0 when mu >= r (every multiplier qualifies vacuously).
inline double lambda_lower_bound(const LinearOperator& op, const Vector& x_prev,
                                 const Vector& y_delta, double mu) {
  detail::check_step_arguments(op, x_prev, y_delta, "lambda_lower_bound");
  if (!(mu >= 0.0)) throw std::invalid_argument("lambda_lower_bound: mu must be nonnegative");
  const Vector b = subtract(op.apply(x_prev), y_delta);
  const double r = norm(b);
  if (mu >= r) return 0.0;
  const Vector g = op.apply_adjoint(b);
  const double denom = dot(g, g);
  if (denom == 0.0) {
    throw MultiplierFailure(
        "lambda_lower_bound: A*(A x_prev - y) vanishes while the residual exceeds the "
        "target; no multiplier can reduce the residual");
  }
  return (r - mu) * r / denom;
}

/// Starting multiplier for outer step k. First step: the guaranteed lower
/// bound at mu = theta. Second step: the previous multiplier. Later steps:
/// geometric extrapolation lambda_{k-1}^2 / lambda_{k-2}, reflecting that
/// accepted multipliers grow roughly geometrically.
inline double initial_guess(std::size_t k, const std::vector<double>& history,
                            const LinearOperator& op, const Vector& x_prev,
                            const Vector& y_delta, double theta) {
  if (k <= 1 || history.empty()) return lambda_lower_bound(op, x_prev, y_delta, theta);
  if (history.size() == 1) return history.back();
  return history.back() * history.back() / history[history.size() - 2];
}

/// Find (lambda, x) with delta <= ||A x - y|| <= theta where x is the
/// Tikhonov step from x_prev at lambda. Over-relaxed Newton iteration on
/// G(lambda) = ||A x(lambda) - y||^2, falling back to bisection when a step
/// overshoots below delta. Every evaluated candidate costs one linear solve
/// and every Newton update one more for the derivative.
inline MultiplierResult solve_range(const LinearOperator& op, const Vector& x_prev,
                                    const Vector& y_delta, const RangeTarget& target,
                                    std::size_t k, const std::vector<double>& history,
                                    const MultiplierOptions& opt = {}) {
  detail::check_step_arguments(op, x_prev, y_delta, "solve_range");
  const double delta = target.delta;
  const double theta = target.theta;
  const double p = target.p;
  if (!(delta >= 0.0)) throw std::invalid_argument("solve_range: delta must be nonnegative");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("solve_range: p must lie in (0, 1)");
  if (!(theta >= delta)) throw std::invalid_argument("solve_range: theta must be >= delta");

  const Vector b0 = subtract(op.apply(x_prev), y_delta);
  const double r_prev = norm(b0);
  if (!(r_prev > theta)) {
    throw std::invalid_argument("solve_range: residual at x_prev is already inside the range");
  }
  const Vector g0 = op.apply_adjoint(b0);
  const double denom = dot(g0, g0);
  if (denom == 0.0) {
    throw MultiplierFailure("solve_range: A*(A x_prev - y) vanishes; range unreachable");
  }
  const double bound = (r_prev - theta) * r_prev / denom;

  // Acceptance is the pair of inequalities the outer iteration relies on;
  // testing both floating-point forms keeps the recorded trace exact.
  const double gap = p * (r_prev - delta);
  const auto too_high = [&](double mu) { return mu > theta || (mu - delta) > gap; };

  double lam = bound;
  if (opt.m3 && k >= 2 && !history.empty()) {
    lam = opt.warm_start == WarmStart::previous
              ? history.back()
              : initial_guess(k, history, op, x_prev, y_delta, theta);
    if (!(lam > 0.0) || !std::isfinite(lam)) lam = bound;
  }

  MultiplierResult res;
  std::int64_t solves = 0;
  std::int64_t krylov = 0;
  const auto eval = [&](double l) {
    StepResult s = g_value(op, x_prev, y_delta, l, opt.solve);
    solves += static_cast<std::int64_t>(s.linear_solves);
    krylov += static_cast<std::int64_t>(s.krylov_iterations);
    return s;
  };
  int inner = 0;
  int bis = 0;
  const auto finish = [&](double l, StepResult&& s, double mu) {
    res.lambda = l;
    res.candidate = std::move(s.candidate);
    res.accepted_residual = mu;
    res.inner_iterations = inner;
    res.bisection_steps = bis;
    res.linear_solves = solves;
    res.krylov_iterations = krylov;
    return std::move(res);
  };

  StepResult cur = eval(lam);
  double G = cur.residual_sq;
  double omega = 1.0;
  // Rightmost multiplier whose residual was (or is guaranteed) above the
  // range; left bracket if a later candidate overshoots below delta.
  double last_high = bound;

  for (;;) {
    if (!std::isfinite(G)) {
      throw MultiplierFailure("solve_range: non-finite residual at lambda=" + detail::fmt_g(lam));
    }
    const double mu = std::sqrt(G);
    if (mu < delta) {
      double lo = last_high;
      double hi = lam;
      while (bis < opt.bisection_cap) {
        const double mid = 0.5 * (lo + hi);
        cur = eval(mid);
        ++bis;
        G = cur.residual_sq;
        if (!std::isfinite(G)) {
          throw MultiplierFailure("solve_range: non-finite residual at lambda=" +
                                  detail::fmt_g(mid));
        }
        const double m = std::sqrt(G);
        if (too_high(m)) {
          lo = mid;
        } else if (m < delta) {
          hi = mid;
        } else {
          return finish(mid, std::move(cur), m);
        }
      }
      throw MultiplierFailure("solve_range: bisection exhausted " +
                              std::to_string(opt.bisection_cap) + " steps in [" +
                              detail::fmt_g(lo) + ", " + detail::fmt_g(hi) + "] at step k=" +
                              std::to_string(k));
    }
    if (!too_high(mu)) return finish(lam, std::move(cur), mu);

    if (inner >= opt.inner_cap) {
      throw MultiplierFailure("solve_range: no multiplier in range after " +
                              std::to_string(inner) + " inner iterations at step k=" +
                              std::to_string(k) + " (lambda=" + detail::fmt_g(lam) +
                              ", residual=" + detail::fmt_g(mu) + ", target [" +
                              detail::fmt_g(delta) + ", " + detail::fmt_g(theta) + "])");
    }
    SolveStats dstats;
    const double dG = g_derivative(op, x_prev, y_delta, lam, cur.candidate, opt.solve, &dstats);
    solves += 1;
    krylov += static_cast<std::int64_t>(dstats.iterations);
    if (!(std::abs(dG) >= 1e-300 * std::max(1.0, G))) {
      throw MultiplierFailure("solve_range: derivative stagnation at lambda=" +
                              detail::fmt_g(lam) + " (G=" + detail::fmt_g(G) +
                              ", G'=" + detail::fmt_g(dG) + ", step k=" + std::to_string(k) +
                              ")");
    }
    const double numerator = opt.m1 ? G : G - delta * delta;
    const double next = lam - omega * numerator / dG;
    if (!std::isfinite(next) || next <= lam) {
      throw MultiplierFailure("solve_range: Newton update did not advance from lambda=" +
                              detail::fmt_g(lam) + " to " + detail::fmt_g(next));
    }
    res.omega_history.push_back(omega);
    const double prev_G = G;
    last_high = lam;
    lam = next;
    cur = eval(lam);
    G = cur.residual_sq;
    ++inner;
    omega = (opt.m2 && prev_G > 2.0 * theta * theta) ? 2.0 * omega : 1.0;
  }
}

}  // namespace rrnit
