#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "rrnit/iteration.hpp"
#include "rrnit/pgm.hpp"
#include "rrnit/problem.hpp"
#include "rrnit/trace_io.hpp"

namespace rrnit {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verify_failed = 1;
inline constexpr int max_outer = 2;
inline constexpr int inner_failure = 3;
inline constexpr int instability = 4;
inline constexpr int usage = 64;
inline constexpr int bad_trace = 65;
}  // namespace exit_code

inline int stop_reason_exit(StopReason r) {
  switch (r) {
    case StopReason::discrepancy: return exit_code::ok;
    case StopReason::max_outer: return exit_code::max_outer;
    case StopReason::inner_failure: return exit_code::inner_failure;
    case StopReason::instability: return exit_code::instability;
  }
  return exit_code::usage;
}

struct RunOptions {
  ProblemSpec problem;
  SolverConfig config;
  bool tau_set = false;  // false: use the per-problem default (hilbert 2, deblur 3)
  std::string out;       // trace path; the manifest lands at out + ".manifest.json"
  std::string format = "csv";
  std::string save_restored;  // optional PGM dump of the final iterate (deblur)
};

namespace detail {

inline void apply_tau_default(SolverConfig& cfg, const ProblemSpec& spec, bool tau_set) {
  if (!tau_set) cfg.tau = spec.kind == "deblur" ? 3.0 : 2.0;
}

inline std::string trace_extension(const std::string& format) {
  return format == "json" ? ".json" : ".csv";
}

inline void write_trace_file(const std::string& path, const std::string& format,
                             const RunTrace& trace) {
  if (format == "json") {
    write_trace_json(path, trace);
  } else {
    write_trace_csv(path, trace);
  }
}

inline void print_run_summary(std::ostream& out, const Problem& prob, const SolverConfig& cfg,
                              const RunTrace& tr) {
  const double final_res =
      tr.records.empty() ? tr.initial_residual : tr.records.back().residual;
  out << "method=" << method_name(cfg.method) << " problem=" << prob.spec.kind
      << " noise_level=" << detail::fmt_g(prob.spec.noise_level)
      << " seed=" << prob.spec.seed << " delta=" << detail::fmt_g(prob.delta)
      << " tau=" << detail::fmt_g(cfg.tau) << '\n';
  out << "stop=" << stop_reason_name(tr.stop_reason) << " steps=" << tr.records.size();
  if (tr.k_star) out << " k_star=" << *tr.k_star;
  out << " final_residual=" << detail::fmt_g(final_res)
      << " linear_solves=" << tr.total_linear_solves
      << " krylov_iterations=" << tr.total_krylov_iterations << '\n';
  if (tr.records.empty()) {
    out << "initial residual " << detail::fmt_g(tr.initial_residual)
        << " already at the stopping level\n";
  }
  if (!tr.failure_detail.empty()) out << "detail: " << tr.failure_detail << '\n';
}

}  // namespace detail

inline int cmd_run(RunOptions opt, std::ostream& out, std::ostream& err) {
  if (opt.format != "csv" && opt.format != "json") {
    err << "run: format must be csv or json\n";
    return exit_code::usage;
  }
  try {
    detail::apply_tau_default(opt.config, opt.problem, opt.tau_set);
    const Problem prob = build_problem(opt.problem);
    const RunTrace tr = run(prob, opt.config);

    const std::string trace_path =
        opt.out.empty() ? "trace" + detail::trace_extension(opt.format) : opt.out;
    detail::write_trace_file(trace_path, opt.format, tr);
    const std::string manifest_path = trace_path + ".manifest.json";
    write_manifest(manifest_path, make_manifest(prob, opt.config, tr));

    if (!opt.save_restored.empty()) {
      if (prob.spec.kind != "deblur") {
        err << "run: --save-restored applies to deblur problems only\n";
        return exit_code::usage;
      }
      write_pgm(opt.save_restored, prob.spec.image_rows, prob.spec.image_cols, tr.final_iterate);
    }

    detail::print_run_summary(out, prob, opt.config, tr);
    out << "trace: " << trace_path << '\n' << "manifest: " << manifest_path << '\n';
    return stop_reason_exit(tr.stop_reason);
  } catch (const TraceIoError& e) {
    err << "run: " << e.what() << '\n';
    return exit_code::bad_trace;
  } catch (const std::exception& e) {
    err << "run: " << e.what() << '\n';
    return exit_code::usage;
  }
}

struct CompareOptions {
  ProblemSpec problem;
  SolverConfig config;
  bool tau_set = false;
  std::vector<Method> methods = {Method::rrnit, Method::gnit};
  std::vector<double> levels = {1e-3, 1e-5};
  std::vector<std::uint64_t> seeds = {1};
  std::string out;  // optional table file
  std::string format = "csv";
};

/// Run the method grid and tabulate step and solve counts. Per-run stop
/// reasons are data here, not process failures; the exit code is zero as
/// long as the grid itself ran.
inline int cmd_compare(CompareOptions opt, std::ostream& out, std::ostream& err) {
  if (opt.format != "csv" && opt.format != "json") {
    err << "compare: format must be csv or json\n";
    return exit_code::usage;
  }
  struct Row {
    Method method;
    double level;
    std::uint64_t seed;
    StopReason stop;
    std::size_t steps;
    double final_residual;
    std::optional<double> final_error;
    std::int64_t solves;
    std::int64_t krylov;
  };
  std::vector<Row> rows;
  try {
    detail::apply_tau_default(opt.config, opt.problem, opt.tau_set);
    for (double level : opt.levels) {
      for (std::uint64_t seed : opt.seeds) {
        ProblemSpec spec = opt.problem;
        spec.noise_level = level;
        spec.seed = seed;
        const Problem prob = build_problem(spec);
        for (Method m : opt.methods) {
          SolverConfig cfg = opt.config;
          cfg.method = m;
          const RunTrace tr = run(prob, cfg);
          Row row;
          row.method = m;
          row.level = level;
          row.seed = seed;
          row.stop = tr.stop_reason;
          row.steps = tr.records.size();
          row.final_residual =
              tr.records.empty() ? tr.initial_residual : tr.records.back().residual;
          if (!tr.records.empty() && tr.records.back().error) {
            row.final_error = tr.records.back().error;
          }
          row.solves = tr.total_linear_solves;
          row.krylov = tr.total_krylov_iterations;
          rows.push_back(row);
        }
      }
    }
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << '\n';
    return exit_code::usage;
  }

  out << std::left << std::setw(7) << "method" << std::right << std::setw(11) << "level"
      << std::setw(6) << "seed" << std::setw(14) << "stop" << std::setw(7) << "steps"
      << std::setw(14) << "residual" << std::setw(14) << "error" << std::setw(9) << "solves"
      << std::setw(9) << "krylov" << '\n';
  for (const Row& r : rows) {
    out << std::left << std::setw(7) << method_name(r.method) << std::right << std::setw(11)
        << detail::fmt_g(r.level) << std::setw(6) << r.seed << std::setw(14)
        << stop_reason_name(r.stop) << std::setw(7) << r.steps << std::setw(14)
        << detail::fmt_g(r.final_residual) << std::setw(14)
        << (r.final_error ? detail::fmt_g(*r.final_error) : std::string("-")) << std::setw(9)
        << r.solves << std::setw(9) << r.krylov << '\n';
  }

  if (!opt.out.empty()) {
    try {
      if (opt.format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const Row& r : rows) {
          nlohmann::json rj;
          rj["method"] = method_name(r.method);
          rj["noise_level"] = r.level;
          rj["seed"] = r.seed;
          rj["stop"] = stop_reason_name(r.stop);
          rj["steps"] = r.steps;
          rj["final_residual"] = r.final_residual;
          rj["final_error"] = r.final_error ? nlohmann::json(*r.final_error) : nlohmann::json(nullptr);
          rj["linear_solves"] = r.solves;
          rj["krylov_iterations"] = r.krylov;
          j.push_back(rj);
        }
        std::ofstream f(opt.out);
        if (!f) throw TraceIoError("cannot write " + opt.out);
        f << j.dump(2) << '\n';
      } else {
        std::ofstream f(opt.out);
        if (!f) throw TraceIoError("cannot write " + opt.out);
        f << "method,noise_level,seed,stop,steps,final_residual,final_error,linear_solves,"
             "krylov_iterations\n";
        for (const Row& r : rows) {
          f << method_name(r.method) << ',' << detail::fmt17(r.level) << ',' << r.seed << ','
            << stop_reason_name(r.stop) << ',' << r.steps << ','
            << detail::fmt17(r.final_residual) << ','
            << (r.final_error ? detail::fmt17(*r.final_error) : std::string()) << ',' << r.solves
            << ',' << r.krylov << '\n';
        }
      }
      out << "table: " << opt.out << '\n';
    } catch (const std::exception& e) {
      err << "compare: " << e.what() << '\n';
      return exit_code::bad_trace;
    }
  }
  return exit_code::ok;
}

struct VerifyCliOptions {
  std::string trace_path;
  std::string manifest_path;  // default: trace_path + ".manifest.json"
};

inline int cmd_verify(VerifyCliOptions opt, std::ostream& out, std::ostream& err) {
  if (opt.trace_path.empty()) {
    err << "verify: a trace path is required\n";
    return exit_code::usage;
  }
  Problem prob;
  SolverConfig cfg;
  RunTrace trace;
  try {
    const std::string manifest_path =
        opt.manifest_path.empty() ? opt.trace_path + ".manifest.json" : opt.manifest_path;
    const Manifest m = read_manifest(manifest_path);
    std::vector<IterationRecord> records = opt.trace_path.ends_with(".json")
                                               ? read_trace_json(opt.trace_path)
                                               : read_trace_csv(opt.trace_path);
    trace = assemble_trace(m, std::move(records));
    cfg = m.config;
    prob = build_problem(m.problem);
  } catch (const std::exception& e) {
    err << "verify: " << e.what() << '\n';
    return exit_code::bad_trace;
  }

  const VerifyReport rep = verify_trace(prob, cfg, trace);
  for (const VerifyCheck& c : rep.checks) {
    const char* status = c.status == CheckStatus::pass
                             ? "PASS"
                             : (c.status == CheckStatus::fail ? "FAIL" : "SKIPPED");
    out << "check " << std::left << std::setw(28) << c.name << ' ' << status;
    if (!c.detail.empty()) out << "  (" << c.detail << ')';
    out << '\n';
  }
  out << (rep.all_passed() ? "verify: all checks passed\n" : "verify: FAILURES present\n");
  return rep.all_passed() ? exit_code::ok : exit_code::verify_failed;
}

}  // namespace rrnit
