#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrnit/iteration.hpp"
#include "rrnit/problem.hpp"
#include "rrnit/version.hpp"

namespace rrnit {

class TraceIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// 17 significant digits: enough for binary64 round trips, so replay sees
/// bitwise the numbers the run produced.
inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw TraceIoError("trace: bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

inline long long parse_int(const std::string& s, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw TraceIoError("trace: bad integer '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline constexpr const char* trace_csv_header = "k,lambda,residual,error,inner_iters,cum_linear_solves";

inline const char* method_name(Method m) {
  switch (m) {
    case Method::rrnit: return "rrnit";
    case Method::gnit: return "gnit";
    case Method::sit: return "sit";
  }
  return "rrnit";
}

inline Method parse_method(const std::string& s) {
  if (s == "rrnit") return Method::rrnit;
  if (s == "gnit") return Method::gnit;
  if (s == "sit") return Method::sit;
  throw TraceIoError("unknown method '" + s + "'");
}

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::discrepancy: return "discrepancy";
    case StopReason::max_outer: return "max_outer";
    case StopReason::inner_failure: return "inner_failure";
    case StopReason::instability: return "instability";
  }
  return "discrepancy";
}

inline StopReason parse_stop_reason(const std::string& s) {
  if (s == "discrepancy") return StopReason::discrepancy;
  if (s == "max_outer") return StopReason::max_outer;
  if (s == "inner_failure") return StopReason::inner_failure;
  if (s == "instability") return StopReason::instability;
  throw TraceIoError("unknown stop reason '" + s + "'");
}

inline const char* warm_start_name(WarmStart w) {
  return w == WarmStart::previous ? "previous" : "extrapolate";
}

inline WarmStart parse_warm_start(const std::string& s) {
  if (s == "extrapolate") return WarmStart::extrapolate;
  if (s == "previous") return WarmStart::previous;
  throw TraceIoError("unknown warm start mode '" + s + "'");
}

inline const char* solve_mode_name(SolveMode m) {
  switch (m) {
    case SolveMode::automatic: return "auto";
    case SolveMode::cg: return "cg";
    case SolveMode::dense: return "dense";
  }
  return "auto";
}

inline SolveMode parse_solve_mode(const std::string& s) {
  if (s == "auto" || s == "automatic") return SolveMode::automatic;
  if (s == "cg") return SolveMode::cg;
  if (s == "dense") return SolveMode::dense;
  throw TraceIoError("unknown solve mode '" + s + "'");
}

inline const char* boundary_name(Boundary b) {
  return b == Boundary::zero_pad ? "zero_pad" : "periodic";
}

inline Boundary parse_boundary(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "zero_pad") return Boundary::zero_pad;
  throw TraceIoError("unknown boundary '" + s + "'");
}

inline const char* ground_truth_name(GroundTruth g) {
  return g == GroundTruth::ramp ? "ramp" : "ones";
}

inline GroundTruth parse_ground_truth(const std::string& s) {
  if (s == "ones") return GroundTruth::ones;
  if (s == "ramp") return GroundTruth::ramp;
  throw TraceIoError("unknown ground truth '" + s + "'");
}

inline void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw TraceIoError("cannot write " + path);
  out << trace_csv_header << '\n';
  for (const IterationRecord& rec : trace.records) {
    out << rec.k << ',' << detail::fmt17(rec.lambda) << ',' << detail::fmt17(rec.residual) << ',';
    if (rec.error) out << detail::fmt17(*rec.error);
    out << ',' << rec.inner_iterations << ',' << rec.cumulative_linear_solves << '\n';
  }
  if (!out) throw TraceIoError("write failed for " + path);
}

inline std::vector<IterationRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceIoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw TraceIoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != trace_csv_header) {
    throw TraceIoError(path + ": unexpected header '" + line + "'");
  }
  std::vector<IterationRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 6) {
      throw TraceIoError(path + ": expected 6 fields on line " + std::to_string(lineno));
    }
    IterationRecord rec;
    rec.k = static_cast<std::size_t>(detail::parse_int(f[0], lineno));
    rec.lambda = detail::parse_double(f[1], lineno);
    rec.residual = detail::parse_double(f[2], lineno);
    if (!f[3].empty()) rec.error = detail::parse_double(f[3], lineno);
    rec.inner_iterations = static_cast<int>(detail::parse_int(f[4], lineno));
    rec.cumulative_linear_solves = detail::parse_int(f[5], lineno);
    records.push_back(rec);
  }
  return records;
}

namespace detail {

inline nlohmann::json record_json(const IterationRecord& rec) {
  nlohmann::json j;
  j["k"] = rec.k;
  j["lambda"] = rec.lambda;
  j["residual"] = rec.residual;
  if (rec.error) {
    j["error"] = *rec.error;
  } else {
    j["error"] = nullptr;
  }
  j["inner_iters"] = rec.inner_iterations;
  j["cum_linear_solves"] = rec.cumulative_linear_solves;
  return j;
}

}  // namespace detail

inline void write_trace_json(const std::string& path, const RunTrace& trace) {
  nlohmann::json j;
  j["records"] = nlohmann::json::array();
  for (const IterationRecord& rec : trace.records) j["records"].push_back(detail::record_json(rec));
  std::ofstream out(path);
  if (!out) throw TraceIoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw TraceIoError("write failed for " + path);
}

inline std::vector<IterationRecord> read_trace_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceIoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(path + ": " + e.what());
  }
  try {
    std::vector<IterationRecord> records;
    for (const nlohmann::json& rj : j.at("records")) {
      IterationRecord rec;
      rec.k = rj.at("k").get<std::size_t>();
      rec.lambda = rj.at("lambda").get<double>();
      rec.residual = rj.at("residual").get<double>();
      if (rj.contains("error") && !rj.at("error").is_null()) {
        rec.error = rj.at("error").get<double>();
      }
      rec.inner_iterations = rj.at("inner_iters").get<int>();
      rec.cumulative_linear_solves = rj.at("cum_linear_solves").get<std::int64_t>();
      records.push_back(rec);
    }
    return records;
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(path + ": " + e.what());
  }
}

/// Run metadata that pairs with a trace file; carries the exact problem and
/// solver configuration so a verifier can rebuild the instance and replay.
struct Manifest {
  ProblemSpec problem;
  SolverConfig config;
  double delta = 0.0;
  double initial_residual = 0.0;
  std::optional<double> initial_error;
  StopReason stop_reason = StopReason::discrepancy;
  std::optional<std::size_t> k_star;
  std::int64_t total_linear_solves = 0;
  std::int64_t total_krylov_iterations = 0;
  double step_sq_sum = 0.0;
  double weighted_residual_sum = 0.0;
  std::string failure_detail;
  std::string created_utc;
  std::string library_version_str = library_version;
};

inline Manifest make_manifest(const Problem& prob, const SolverConfig& cfg,
                              const RunTrace& trace) {
  Manifest m;
  m.problem = prob.spec;
  m.config = cfg;
  m.delta = prob.delta;
  m.initial_residual = trace.initial_residual;
  m.initial_error = trace.initial_error;
  m.stop_reason = trace.stop_reason;
  m.k_star = trace.k_star;
  m.total_linear_solves = trace.total_linear_solves;
  m.total_krylov_iterations = trace.total_krylov_iterations;
  m.step_sq_sum = trace.step_sq_sum;
  m.weighted_residual_sum = trace.weighted_residual_sum;
  m.failure_detail = trace.failure_detail;
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m.created_utc = buf;
  return m;
}

inline nlohmann::json problem_spec_json(const ProblemSpec& s) {
  nlohmann::json j;
  j["kind"] = s.kind;
  j["n"] = s.n;
  j["ground_truth"] = ground_truth_name(s.ground_truth);
  j["image_rows"] = s.image_rows;
  j["image_cols"] = s.image_cols;
  j["tile"] = s.tile;
  j["psf_size"] = s.psf_size;
  j["sigma"] = s.sigma;
  j["boundary"] = boundary_name(s.boundary);
  j["image_path"] = s.image_path;
  j["noise_level"] = s.noise_level;
  j["seed"] = s.seed;
  return j;
}

inline ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
  ProblemSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.n = j.at("n").get<std::size_t>();
  s.ground_truth = parse_ground_truth(j.at("ground_truth").get<std::string>());
  s.image_rows = j.at("image_rows").get<std::size_t>();
  s.image_cols = j.at("image_cols").get<std::size_t>();
  s.tile = j.at("tile").get<std::size_t>();
  s.psf_size = j.at("psf_size").get<std::size_t>();
  s.sigma = j.at("sigma").get<double>();
  s.boundary = parse_boundary(j.at("boundary").get<std::string>());
  s.image_path = j.at("image_path").get<std::string>();
  s.noise_level = j.at("noise_level").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

inline nlohmann::json solver_config_json(const SolverConfig& c) {
  nlohmann::json j;
  j["method"] = method_name(c.method);
  j["p"] = c.p;
  j["q"] = c.q;
  j["lambda_bar"] = c.lambda_bar;
  j["tau"] = c.tau;
  j["max_outer"] = c.max_outer;
  j["m1"] = c.m1;
  j["m2"] = c.m2;
  j["m3"] = c.m3;
  j["warm_start"] = warm_start_name(c.warm_start);
  j["inner_cap"] = c.inner_cap;
  j["bisection_cap"] = c.bisection_cap;
  j["solve_mode"] = solve_mode_name(c.solve_mode);
  j["cg_tol"] = c.cg_tol;
  j["cg_max_iter"] = c.cg_max_iter;
  return j;
}

inline SolverConfig solver_config_from_json(const nlohmann::json& j) {
  SolverConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.p = j.at("p").get<double>();
  c.q = j.at("q").get<double>();
  c.lambda_bar = j.at("lambda_bar").get<double>();
  c.tau = j.at("tau").get<double>();
  c.max_outer = j.at("max_outer").get<std::size_t>();
  c.m1 = j.at("m1").get<bool>();
  c.m2 = j.at("m2").get<bool>();
  c.m3 = j.at("m3").get<bool>();
  c.warm_start = parse_warm_start(j.at("warm_start").get<std::string>());
  c.inner_cap = j.at("inner_cap").get<int>();
  c.bisection_cap = j.at("bisection_cap").get<int>();
  c.solve_mode = parse_solve_mode(j.at("solve_mode").get<std::string>());
  c.cg_tol = j.at("cg_tol").get<double>();
  c.cg_max_iter = j.at("cg_max_iter").get<std::size_t>();
  return c;
}

inline void write_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json j;
  j["library_version"] = m.library_version_str;
  j["created_utc"] = m.created_utc;
  j["problem"] = problem_spec_json(m.problem);
  j["config"] = solver_config_json(m.config);
  j["delta"] = m.delta;
  j["initial_residual"] = m.initial_residual;
  j["initial_error"] = m.initial_error ? nlohmann::json(*m.initial_error) : nlohmann::json(nullptr);
  j["stop_reason"] = stop_reason_name(m.stop_reason);
  j["k_star"] = m.k_star ? nlohmann::json(*m.k_star) : nlohmann::json(nullptr);
  j["total_linear_solves"] = m.total_linear_solves;
  j["total_krylov_iterations"] = m.total_krylov_iterations;
  j["step_sq_sum"] = m.step_sq_sum;
  j["weighted_residual_sum"] = m.weighted_residual_sum;
  j["failure_detail"] = m.failure_detail;
  std::ofstream out(path);
  if (!out) throw TraceIoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw TraceIoError("write failed for " + path);
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceIoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(path + ": " + e.what());
  }
  try {
    Manifest m;
    m.library_version_str = j.at("library_version").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.problem = problem_spec_from_json(j.at("problem"));
    m.config = solver_config_from_json(j.at("config"));
    m.delta = j.at("delta").get<double>();
    m.initial_residual = j.at("initial_residual").get<double>();
    if (!j.at("initial_error").is_null()) m.initial_error = j.at("initial_error").get<double>();
    m.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    if (!j.at("k_star").is_null()) m.k_star = j.at("k_star").get<std::size_t>();
    m.total_linear_solves = j.at("total_linear_solves").get<std::int64_t>();
    m.total_krylov_iterations = j.at("total_krylov_iterations").get<std::int64_t>();
    m.step_sq_sum = j.at("step_sq_sum").get<double>();
    m.weighted_residual_sum = j.at("weighted_residual_sum").get<double>();
    m.failure_detail = j.at("failure_detail").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError(path + ": " + e.what());
  }
}

/// Reassemble a RunTrace from a manifest plus trace records, the state the
/// verifier works from.
inline RunTrace assemble_trace(const Manifest& m, std::vector<IterationRecord> records) {
  RunTrace tr;
  tr.records = std::move(records);
  tr.stop_reason = m.stop_reason;
  tr.k_star = m.k_star;
  tr.initial_residual = m.initial_residual;
  tr.initial_error = m.initial_error;
  tr.step_sq_sum = m.step_sq_sum;
  tr.weighted_residual_sum = m.weighted_residual_sum;
  tr.total_linear_solves = m.total_linear_solves;
  tr.total_krylov_iterations = m.total_krylov_iterations;
  tr.failure_detail = m.failure_detail;
  return tr;
}

}  // namespace rrnit
