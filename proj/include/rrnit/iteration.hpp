#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rrnit/multiplier.hpp"
#include "rrnit/operator_norm.hpp"
#include "rrnit/problem.hpp"
#include "rrnit/tikhonov.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

enum class Method { rrnit, gnit, sit };

enum class StopReason { discrepancy, max_outer, inner_failure, instability };

struct SolverConfig {
  Method method = Method::rrnit;
  double p = 0.2;           // range relaxation factor (rrnit)
  double q = 2.0;           // geometric multiplier base (gnit)
  double lambda_bar = 2.0;  // constant multiplier (sit)
  double tau = 2.0;         // discrepancy factor
  std::size_t max_outer = 1000;
  // multiplier search toggles (rrnit)
  bool m1 = true;
  bool m2 = true;
  bool m3 = true;
  WarmStart warm_start = WarmStart::extrapolate;
  int inner_cap = 50;
  int bisection_cap = 60;
  // linear solver selection
  SolveMode solve_mode = SolveMode::automatic;
  double cg_tol = 1e-10;
  std::size_t cg_max_iter = 0;
  bool compute_error = true;  // record ||x_k - x_star|| when ground truth is known
};

struct IterationRecord {
  std::size_t k = 0;
  double lambda = 0.0;
  double residual = 0.0;
  std::optional<double> error;
  int inner_iterations = 0;
  std::int64_t cumulative_linear_solves = 0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::discrepancy;
  std::optional<std::size_t> k_star;  // stopping index when the discrepancy test fired
  double initial_residual = 0.0;
  std::optional<double> initial_error;
  // Tail sums that stay bounded for exact data; diagnostics for delta = 0 runs.
  double step_sq_sum = 0.0;            // sum of ||x_k - x_{k-1}||^2
  double weighted_residual_sum = 0.0;  // sum of lambda_k ||A x_k - y||^2
  std::int64_t total_linear_solves = 0;
  std::int64_t total_krylov_iterations = 0;
  std::string failure_detail;
  Vector final_iterate;
};

namespace detail {

inline TikhonovOptions run_solve_options(const SolverConfig& cfg) {
  TikhonovOptions t;
  t.mode = cfg.solve_mode;
  t.cg_tol = cfg.cg_tol;
  t.cg_max_iter = cfg.cg_max_iter;
  // Drivers keep going on a stalled inner solve: the residual that decides
  // acceptance or stopping is always measured on the actual candidate.
  t.best_effort = true;
  return t;
}

inline void check_common_config(const SolverConfig& cfg) {
  if (!(cfg.tau >= 1.0)) throw std::invalid_argument("SolverConfig: tau must be >= 1");
  if (cfg.max_outer == 0) throw std::invalid_argument("SolverConfig: max_outer must be positive");
}

struct RunState {
  Vector x;
  double r = 0.0;
  std::size_t k = 0;
  std::int64_t cum = 0;
};

inline RunTrace start_trace(const Problem& prob, const SolverConfig& cfg, RunState& st) {
  RunTrace tr;
  st.x = prob.x0;
  st.r = norm(subtract(prob.op->apply(st.x), prob.y_delta));
  tr.initial_residual = st.r;
  if (prob.x_star && cfg.compute_error) tr.initial_error = distance(st.x, *prob.x_star);
  return tr;
}

inline void record_step(RunTrace& tr, const Problem& prob, const SolverConfig& cfg, RunState& st,
                        double lambda, Vector&& candidate, double residual, int inner) {
  tr.step_sq_sum += [&] {
    const double d = distance(candidate, st.x);
    return d * d;
  }();
  tr.weighted_residual_sum += lambda * residual * residual;
  st.x = std::move(candidate);
  st.r = residual;
  IterationRecord rec;
  rec.k = st.k;
  rec.lambda = lambda;
  rec.residual = residual;
  if (prob.x_star && cfg.compute_error) rec.error = distance(st.x, *prob.x_star);
  rec.inner_iterations = inner;
  rec.cumulative_linear_solves = st.cum;
  tr.records.push_back(std::move(rec));
}

}  // namespace detail

/// Range-relaxed nonstationary iterated Tikhonov: each outer step asks the
/// multiplier search for any (lambda, x) whose residual lies in
/// [delta, p*r_{k-1} + (1-p)*delta], then iterates until the discrepancy
/// test r <= tau*delta fires or a budget runs out.
inline RunTrace run_rrnit(const Problem& prob, const SolverConfig& cfg) {
  detail::check_common_config(cfg);
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) {
    throw std::invalid_argument("run_rrnit: p must lie in (0, 1)");
  }
  const LinearOperator& A = *prob.op;
  detail::RunState st;
  RunTrace tr = detail::start_trace(prob, cfg, st);
  const double stop_level = cfg.tau * prob.delta;

  MultiplierOptions mopt;
  mopt.m1 = cfg.m1;
  mopt.m2 = cfg.m2;
  mopt.m3 = cfg.m3;
  mopt.warm_start = cfg.warm_start;
  mopt.inner_cap = cfg.inner_cap;
  mopt.bisection_cap = cfg.bisection_cap;
  mopt.solve = detail::run_solve_options(cfg);

  std::vector<double> history;
  for (;;) {
    if (st.r <= stop_level) {
      tr.stop_reason = StopReason::discrepancy;
      tr.k_star = st.k;
      break;
    }
    if (st.k >= cfg.max_outer) {
      tr.stop_reason = StopReason::max_outer;
      break;
    }
    ++st.k;
    const double theta = range_theta(cfg.p, st.r, prob.delta);
    MultiplierResult step;
    try {
      step = solve_range(A, st.x, prob.y_delta, RangeTarget{prob.delta, theta, cfg.p}, st.k,
                         history, mopt);
    } catch (const MultiplierFailure& e) {
      --st.k;
      tr.stop_reason = StopReason::inner_failure;
      tr.failure_detail = e.what();
      break;
    }
    st.cum += step.linear_solves;
    tr.total_krylov_iterations += step.krylov_iterations;
    history.push_back(step.lambda);
    detail::record_step(tr, prob, cfg, st, step.lambda, std::move(step.candidate),
                        step.accepted_residual, step.inner_iterations);
  }
  tr.total_linear_solves = st.cum;
  tr.final_iterate = std::move(st.x);
  return tr;
}

/// Geometric nonstationary iterated Tikhonov with lambda_k = q^k, one linear
/// solve per step. Includes an instability monitor: residual spikes above ten
/// times the running minimum on three consecutive steps, a long stagnation
/// while the multiplier keeps growing, or non-finite values end the run with
/// StopReason::instability.
inline RunTrace run_gnit(const Problem& prob, const SolverConfig& cfg) {
  detail::check_common_config(cfg);
  if (!(cfg.q > 1.0)) throw std::invalid_argument("run_gnit: q must exceed 1");
  const LinearOperator& A = *prob.op;
  detail::RunState st;
  RunTrace tr = detail::start_trace(prob, cfg, st);
  const double stop_level = cfg.tau * prob.delta;
  const TikhonovOptions topt = detail::run_solve_options(cfg);

  double r_min = st.r;
  double r_at_improvement = st.r;
  double lambda_at_improvement = 0.0;
  int steps_since_improvement = 0;
  int spike_streak = 0;

  for (;;) {
    if (st.r <= stop_level) {
      tr.stop_reason = StopReason::discrepancy;
      tr.k_star = st.k;
      break;
    }
    if (st.k >= cfg.max_outer) {
      tr.stop_reason = StopReason::max_outer;
      break;
    }
    ++st.k;
    const double lambda = std::pow(cfg.q, static_cast<double>(st.k));
    if (!std::isfinite(lambda)) {
      tr.stop_reason = StopReason::instability;
      tr.failure_detail = "multiplier q^k overflowed";
      break;
    }
    StepResult step = tikhonov_step(A, st.x, prob.y_delta, lambda, topt);
    st.cum += 1;
    tr.total_krylov_iterations += static_cast<std::int64_t>(step.krylov_iterations);
    const double r_new = std::sqrt(step.residual_sq);
    detail::record_step(tr, prob, cfg, st, lambda, std::move(step.candidate), r_new, 0);

    if (!std::isfinite(st.r)) {
      tr.stop_reason = StopReason::instability;
      tr.failure_detail = "non-finite residual";
      break;
    }
    if (st.r <= stop_level) continue;  // converged; the loop head records it

    if (st.k == 1) lambda_at_improvement = lambda;
    if (st.r > 10.0 * r_min) {
      if (++spike_streak >= 3) {
        tr.stop_reason = StopReason::instability;
        tr.failure_detail = "residual exceeded 10x its running minimum on 3 consecutive steps";
        break;
      }
    } else {
      spike_streak = 0;
    }
    if (st.r < 0.99 * r_at_improvement) {
      r_at_improvement = st.r;
      lambda_at_improvement = lambda;
      steps_since_improvement = 0;
    } else if (++steps_since_improvement >= 10 && lambda >= 1e4 * lambda_at_improvement) {
      tr.stop_reason = StopReason::instability;
      tr.failure_detail =
          "residual stagnant above the stopping level while the multiplier grew 1e4-fold";
      break;
    }
    r_min = std::min(r_min, st.r);
  }
  tr.total_linear_solves = st.cum;
  tr.final_iterate = std::move(st.x);
  return tr;
}

/// Stationary iterated Tikhonov: constant multiplier, one solve per step.
inline RunTrace run_sit(const Problem& prob, const SolverConfig& cfg) {
  detail::check_common_config(cfg);
  if (!(cfg.lambda_bar > 0.0) || !std::isfinite(cfg.lambda_bar)) {
    throw std::invalid_argument("run_sit: lambda_bar must be positive and finite");
  }
  const LinearOperator& A = *prob.op;
  detail::RunState st;
  RunTrace tr = detail::start_trace(prob, cfg, st);
  const double stop_level = cfg.tau * prob.delta;
  const TikhonovOptions topt = detail::run_solve_options(cfg);

  for (;;) {
    if (st.r <= stop_level) {
      tr.stop_reason = StopReason::discrepancy;
      tr.k_star = st.k;
      break;
    }
    if (st.k >= cfg.max_outer) {
      tr.stop_reason = StopReason::max_outer;
      break;
    }
    ++st.k;
    StepResult step = tikhonov_step(A, st.x, prob.y_delta, cfg.lambda_bar, topt);
    st.cum += 1;
    tr.total_krylov_iterations += static_cast<std::int64_t>(step.krylov_iterations);
    detail::record_step(tr, prob, cfg, st, cfg.lambda_bar, std::move(step.candidate),
                        std::sqrt(step.residual_sq), 0);
  }
  tr.total_linear_solves = st.cum;
  tr.final_iterate = std::move(st.x);
  return tr;
}

inline RunTrace run(const Problem& prob, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::rrnit:
      return run_rrnit(prob, cfg);
    case Method::gnit:
      return run_gnit(prob, cfg);
    case Method::sit:
      return run_sit(prob, cfg);
  }
  throw std::invalid_argument("run: unknown method");
}

enum class CheckStatus { pass, fail, skipped };

struct VerifyCheck {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool all_passed() const {
    for (const VerifyCheck& c : checks) {
      if (c.status == CheckStatus::fail) return false;
    }
    return true;
  }
};

struct VerifyOptions {
  double replay_tol = 1e-9;    // relative agreement of recorded vs replayed residuals
  double gain_tol = 1e-6;      // relative tolerance of the step gain identity
  double bound_slack = 1e-9;   // relative slack on the multiplier lower bound
  double error_slack = 1e-12;  // absolute-ish slack on error monotonicity
};

/// Re-run the iteration from the recorded multipliers and check the claimed
/// invariants. Replay is deterministic, so recorded residuals must match to
/// round-trip precision; vector-dependent checks (gain identity, multiplier
/// lower bound) use the replayed iterates. Checks that need structure the
/// trace does not have (wrong method, no ground truth, noisy data) are
/// reported as skipped, not passed.
inline VerifyReport verify_trace(const Problem& prob, const SolverConfig& cfg,
                                 const RunTrace& trace, const VerifyOptions& vopt = {}) {
  VerifyReport rep;
  const auto add = [&](const std::string& name, CheckStatus st, const std::string& detail) {
    rep.checks.push_back(VerifyCheck{name, st, detail});
  };
  const LinearOperator& A = *prob.op;
  const double delta = prob.delta;
  const double stop_level = cfg.tau * delta;
  const bool is_rrnit = cfg.method == Method::rrnit;
  const TikhonovOptions sopt = detail::run_solve_options(cfg);

  // The gain identity is a property of the exact Tikhonov step; an iterative
  // candidate's stationarity error enters it multiplied by lambda. Evaluate
  // that check on a refined recomputation (exact where possible) while the
  // replay chain itself keeps the run's own solver settings bit for bit.
  TikhonovOptions refined = sopt;
  refined.cg_tol = std::min(refined.cg_tol, 1e-14);
  {
    Vector probe;
    const bool has_exact = A.solve_shifted_normal(1.0, Vector(A.domain_dim(), 0.0), probe);
    if (!has_exact && refined.mode != SolveMode::dense &&
        A.domain_dim() <= detail::dense_solve_dim_limit) {
      refined.mode = SolveMode::dense;
    }
  }

  // Structural sanity first: ks consecutive from 1, positive multipliers.
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const IterationRecord& rec = trace.records[i];
    if (rec.k != i + 1 || !(rec.lambda > 0.0) || !std::isfinite(rec.lambda) ||
        !(rec.residual >= 0.0)) {
      add("structure", CheckStatus::fail,
          "record " + std::to_string(i) + " malformed (k=" + std::to_string(rec.k) + ")");
      return rep;
    }
  }
  add("structure", CheckStatus::pass,
      std::to_string(trace.records.size()) + " records well formed");

  Vector x = prob.x0;
  const double r0_replayed = norm(subtract(A.apply(x), prob.y_delta));
  double worst_replay = 0.0;
  if (trace.initial_residual > 0.0) {
    worst_replay = std::abs(r0_replayed - trace.initial_residual) /
                   std::max(trace.initial_residual, 1e-300);
  }

  bool decay_ok = true;
  std::string decay_detail;
  double worst_gain = 0.0;
  bool bound_ok = true;
  std::string bound_detail;
  bool err_ok = true;
  std::string err_detail;
  bool cum_ok = true;
  std::string cum_detail;
  std::string replay_detail;

  const double r_star_sq = prob.x_star ? [&] {
    const Vector rs = subtract(A.apply(*prob.x_star), prob.y_delta);
    return dot(rs, rs);
  }() : 0.0;
  const double ny_delta = norm(prob.y_delta);

  double r_prev_rec = trace.initial_residual;
  double err_prev = trace.initial_error
                        ? *trace.initial_error
                        : (prob.x_star ? distance(prob.x0, *prob.x_star) : 0.0);
  std::int64_t cum_prev = 0;
  for (const IterationRecord& rec : trace.records) {
    const StepResult step = g_value(A, x, prob.y_delta, rec.lambda, sopt);
    const double mu = std::sqrt(step.residual_sq);
    const double rel = std::abs(mu - rec.residual) / std::max(rec.residual, 1e-300);
    if (rel > worst_replay) {
      worst_replay = rel;
      replay_detail = "worst at k=" + std::to_string(rec.k);
    }

    if (is_rrnit) {
      // Exact range inequalities in both recorded forms.
      const double theta = range_theta(cfg.p, r_prev_rec, delta);
      if (!(rec.residual <= theta) ||
          !((rec.residual - delta) <= cfg.p * (r_prev_rec - delta)) ||
          !(rec.residual >= delta)) {
        decay_ok = false;
        decay_detail = "violated at k=" + std::to_string(rec.k);
      }
      const double lb = lambda_lower_bound(A, x, prob.y_delta, rec.residual);
      if (!(rec.lambda >= lb * (1.0 - vopt.bound_slack))) {
        bound_ok = false;
        bound_detail = "lambda " + detail::fmt_g(rec.lambda) + " below bound " +
                       detail::fmt_g(lb) + " at k=" + std::to_string(rec.k);
      }
      if (prob.x_star) {
        const Vector& xs = *prob.x_star;
        const StepResult fine = g_value(A, x, prob.y_delta, rec.lambda, refined);
        const double dp = distance(xs, x);
        const double dc_fine = distance(xs, fine.candidate);
        const double ds = distance(fine.candidate, x);
        const Vector axc = A.apply(subtract(xs, fine.candidate));
        const double lhs = dp * dp - dc_fine * dc_fine;
        const double rhs =
            ds * ds + rec.lambda * (dot(axc, axc) + fine.residual_sq - r_star_sq);
        // Both sides cancel heavily once the error plateaus, so deviation is
        // measured against the magnitude of the terms entering the identity,
        // plus the rounding floor of the lambda-weighted residual terms: the
        // residual components carry an absolute error of order eps*||y||
        // however exactly the step was solved, and it enters multiplied by
        // lambda. Forged multipliers or residuals overshoot this budget by
        // orders of magnitude.
        const double scale_terms = dp * dp + dc_fine * dc_fine + ds * ds +
                                   rec.lambda * (dot(axc, axc) + fine.residual_sq + r_star_sq);
        // The lambda-weighted terms are computed from residual vectors whose
        // components carry absolute rounding error of order eps*||y||; that
        // error meets the iterate-error vectors in the derivation, giving a
        // floor of order eps * lambda * ||y|| * (dp + dc).
        const double fp_floor = 2.0 * std::numeric_limits<double>::epsilon() * rec.lambda *
                                ny_delta * (dp + dc_fine);
        const double budget = vopt.gain_tol * scale_terms + fp_floor;
        const double rel_gain = std::abs(lhs - rhs) / std::max(budget, 1e-300);
        worst_gain = std::max(worst_gain, rel_gain);
        const double dc = distance(xs, step.candidate);
        if (!(dc <= err_prev + vopt.error_slack * std::max(1.0, err_prev))) {
          err_ok = false;
          err_detail = "error grew at k=" + std::to_string(rec.k);
        }
        err_prev = dc;
      }
    }

    if (!(rec.cumulative_linear_solves > cum_prev)) {
      cum_ok = false;
      cum_detail = "cumulative solve count not increasing at k=" + std::to_string(rec.k);
    }
    cum_prev = rec.cumulative_linear_solves;
    r_prev_rec = rec.residual;
    x = step.candidate;
  }

  const bool replay_ok = worst_replay <= vopt.replay_tol;
  add("residual_consistency", replay_ok ? CheckStatus::pass : CheckStatus::fail,
      "worst relative deviation " + detail::fmt_g(worst_replay) +
          (replay_detail.empty() ? "" : ", " + replay_detail));

  if (is_rrnit && !trace.records.empty()) {
    add("residual_decay", decay_ok ? CheckStatus::pass : CheckStatus::fail,
        decay_ok ? "(r_k - delta) <= p (r_{k-1} - delta) at every step" : decay_detail);
    add("multiplier_lower_bound", bound_ok ? CheckStatus::pass : CheckStatus::fail,
        bound_ok ? "lambda_k >= (r_{k-1} - mu_k) r_{k-1} / ||A*(A x_{k-1} - y)||^2"
                 : bound_detail);
  } else {
    add("residual_decay", CheckStatus::skipped, "not applicable");
    add("multiplier_lower_bound", CheckStatus::skipped, "not applicable");
  }

  if (is_rrnit && prob.x_star && !trace.records.empty()) {
    add("gain_identity", worst_gain <= 1.0 ? CheckStatus::pass : CheckStatus::fail,
        "worst deviation " + detail::fmt_g(worst_gain) + "x the identity budget");
    add("error_monotone", err_ok ? CheckStatus::pass : CheckStatus::fail,
        err_ok ? "iteration error nonincreasing" : err_detail);
  } else {
    add("gain_identity", CheckStatus::skipped, "not applicable");
    add("error_monotone", CheckStatus::skipped, "not applicable");
  }

  // Discrepancy semantics: no early record at or below the stopping level;
  // a discrepancy stop means exactly the last record reached it.
  {
    bool ok = true;
    std::string det;
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
      if (trace.records[i].residual <= stop_level) {
        ok = false;
        det = "record k=" + std::to_string(i + 1) + " already at the stopping level";
        break;
      }
    }
    if (ok && trace.stop_reason == StopReason::discrepancy) {
      if (trace.records.empty()) {
        if (trace.initial_residual > stop_level) {
          ok = false;
          det = "claimed discrepancy stop with no records and r0 above the level";
        }
        if (trace.k_star && *trace.k_star != 0) {
          ok = false;
          det = "k_star nonzero on an empty trace";
        }
      } else {
        if (!(trace.records.back().residual <= stop_level)) {
          ok = false;
          det = "final residual above tau*delta despite a discrepancy stop";
        }
        if (trace.k_star && *trace.k_star != trace.records.size()) {
          ok = false;
          det = "k_star does not equal the number of records";
        }
      }
    }
    if (ok && trace.stop_reason != StopReason::discrepancy && !trace.records.empty() &&
        delta > 0.0 && trace.records.back().residual <= stop_level) {
      ok = false;
      det = "final residual at the stopping level but stop reason is not discrepancy";
    }
    add("discrepancy_semantics", ok ? CheckStatus::pass : CheckStatus::fail,
        ok ? "stopping level respected" : det);
  }

  add("cost_monotone", cum_ok ? CheckStatus::pass : CheckStatus::fail,
      cum_ok ? "cumulative solve counts strictly increase" : cum_detail);

  // Stopping-index bound k* <= ln((r0 - delta)/((tau - 1) delta)) / ln(1/p) + 1.
  if (is_rrnit && delta > 0.0 && cfg.tau > 1.0 && trace.stop_reason == StopReason::discrepancy &&
      trace.k_star && *trace.k_star >= 1 && trace.initial_residual > delta) {
    const double bound = std::log((trace.initial_residual - delta) / ((cfg.tau - 1.0) * delta)) /
                             std::log(1.0 / cfg.p) +
                         1.0;
    const bool ok = static_cast<double>(*trace.k_star) <= bound;
    add("stopping_index_bound", ok ? CheckStatus::pass : CheckStatus::fail,
        "k*=" + std::to_string(*trace.k_star) + " vs bound " + detail::fmt_g(bound));
  } else {
    add("stopping_index_bound", CheckStatus::skipped, "not applicable");
  }

  // Exact data: accepted multipliers stay above (1 - p) / ||A||^2.
  if (is_rrnit && delta == 0.0 && !trace.records.empty()) {
    const double na = operator_norm_estimate(A);
    const double floor_bound = (1.0 - cfg.p) / (na * na);
    double lam_min = trace.records.front().lambda;
    for (const IterationRecord& rec : trace.records) lam_min = std::min(lam_min, rec.lambda);
    const bool ok = lam_min >= floor_bound * (1.0 - vopt.bound_slack);
    add("exact_data_multiplier_floor", ok ? CheckStatus::pass : CheckStatus::fail,
        "min lambda " + detail::fmt_g(lam_min) + " vs (1-p)/||A||^2 = " +
            detail::fmt_g(floor_bound));
  } else {
    add("exact_data_multiplier_floor", CheckStatus::skipped, "not applicable");
  }

  return rep;
}

}  // namespace rrnit
