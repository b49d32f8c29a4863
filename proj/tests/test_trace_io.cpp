#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rrnit/iteration.hpp"
#include "rrnit/trace_io.hpp"

namespace {

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

rrnit::RunTrace sample_trace(bool with_error) {
  rrnit::RunTrace tr;
  tr.initial_residual = 3.25;
  if (with_error) tr.initial_error = 5.0;
  tr.stop_reason = rrnit::StopReason::discrepancy;
  tr.k_star = 3;
  tr.total_linear_solves = 9;
  for (std::size_t k = 1; k <= 3; ++k) {
    rrnit::IterationRecord rec;
    rec.k = k;
    rec.lambda = 0.1 + static_cast<double>(k) / 3.0;  // non-terminating binary fractions
    rec.residual = 1.0 / static_cast<double>(3 * k);
    if (with_error) rec.error = 2.0 / static_cast<double>(7 * k);
    rec.inner_iterations = static_cast<int>(k);
    rec.cumulative_linear_solves = static_cast<std::int64_t>(3 * k);
    tr.records.push_back(rec);
  }
  return tr;
}

void expect_same_records(const std::vector<rrnit::IterationRecord>& got,
                         const std::vector<rrnit::IterationRecord>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got[i].k, want[i].k);
    EXPECT_EQ(got[i].lambda, want[i].lambda);      // bitwise: %.17g round-trips
    EXPECT_EQ(got[i].residual, want[i].residual);  // bitwise
    EXPECT_EQ(got[i].error.has_value(), want[i].error.has_value());
    if (want[i].error) {
      EXPECT_EQ(*got[i].error, *want[i].error);
    }
    EXPECT_EQ(got[i].inner_iterations, want[i].inner_iterations);
    EXPECT_EQ(got[i].cumulative_linear_solves, want[i].cumulative_linear_solves);
  }
}

TEST(Format17, RoundTripsBitwise) {
  for (double v : {1.0 / 3.0, 0.0, -2.5e-308, 1.9999999999999998, 6.02e23, -0.1}) {
    EXPECT_EQ(rrnit::detail::parse_double(rrnit::detail::fmt17(v), 1), v);
  }
}

TEST(TraceCsv, RoundTripsBitwise) {
  for (bool with_error : {true, false}) {
    const std::string path = temp_path(with_error ? "t_err.csv" : "t_noerr.csv");
    const rrnit::RunTrace tr = sample_trace(with_error);
    rrnit::write_trace_csv(path, tr);
    expect_same_records(rrnit::read_trace_csv(path), tr.records);
    std::remove(path.c_str());
  }
}

TEST(TraceCsv, FirstLineIsTheDocumentedHeader) {
  const std::string path = temp_path("t_hdr.csv");
  rrnit::write_trace_csv(path, sample_trace(true));
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, rrnit::trace_csv_header);
  std::remove(path.c_str());
}

TEST(TraceCsv, RejectsMalformedInput) {
  const std::string path = temp_path("t_bad.csv");
  {
    std::ofstream f(path);
    f << "completely,wrong,header\n1,2,3\n";
  }
  EXPECT_THROW(rrnit::read_trace_csv(path), rrnit::TraceIoError);
  {
    std::ofstream f(path);
    f << rrnit::trace_csv_header << "\n1,0.5,0.25\n";  // too few fields
  }
  EXPECT_THROW(rrnit::read_trace_csv(path), rrnit::TraceIoError);
  {
    std::ofstream f(path);
    f << rrnit::trace_csv_header << "\n1,not_a_number,0.25,,0,1\n";
  }
  EXPECT_THROW(rrnit::read_trace_csv(path), rrnit::TraceIoError);
  EXPECT_THROW(rrnit::read_trace_csv(temp_path("missing.csv")), rrnit::TraceIoError);
  std::remove(path.c_str());
}

TEST(TraceJson, RoundTripsBitwise) {
  for (bool with_error : {true, false}) {
    const std::string path = temp_path(with_error ? "t_err.json" : "t_noerr.json");
    const rrnit::RunTrace tr = sample_trace(with_error);
    rrnit::write_trace_json(path, tr);
    expect_same_records(rrnit::read_trace_json(path), tr.records);
    std::remove(path.c_str());
  }
}

TEST(TraceJson, RejectsMalformedInput) {
  const std::string path = temp_path("t_bad.json");
  {
    std::ofstream f(path);
    f << "{\"recordz\": []}";
  }
  EXPECT_THROW(rrnit::read_trace_json(path), rrnit::TraceIoError);
  {
    std::ofstream f(path);
    f << "not json at all";
  }
  EXPECT_THROW(rrnit::read_trace_json(path), rrnit::TraceIoError);
  std::remove(path.c_str());
}

TEST(EnumNames, RoundTripEveryValue) {
  for (rrnit::Method m : {rrnit::Method::rrnit, rrnit::Method::gnit, rrnit::Method::sit}) {
    EXPECT_EQ(rrnit::parse_method(rrnit::method_name(m)), m);
  }
  for (rrnit::StopReason r :
       {rrnit::StopReason::discrepancy, rrnit::StopReason::max_outer,
        rrnit::StopReason::inner_failure, rrnit::StopReason::instability}) {
    EXPECT_EQ(rrnit::parse_stop_reason(rrnit::stop_reason_name(r)), r);
  }
  for (rrnit::WarmStart w : {rrnit::WarmStart::extrapolate, rrnit::WarmStart::previous}) {
    EXPECT_EQ(rrnit::parse_warm_start(rrnit::warm_start_name(w)), w);
  }
  for (rrnit::SolveMode m :
       {rrnit::SolveMode::automatic, rrnit::SolveMode::cg, rrnit::SolveMode::dense}) {
    EXPECT_EQ(rrnit::parse_solve_mode(rrnit::solve_mode_name(m)), m);
  }
  for (rrnit::Boundary b : {rrnit::Boundary::periodic, rrnit::Boundary::zero_pad}) {
    EXPECT_EQ(rrnit::parse_boundary(rrnit::boundary_name(b)), b);
  }
  for (rrnit::GroundTruth g : {rrnit::GroundTruth::ones, rrnit::GroundTruth::ramp}) {
    EXPECT_EQ(rrnit::parse_ground_truth(rrnit::ground_truth_name(g)), g);
  }
  EXPECT_THROW(rrnit::parse_method("bogus"), rrnit::TraceIoError);
  EXPECT_THROW(rrnit::parse_stop_reason("bogus"), rrnit::TraceIoError);
  EXPECT_THROW(rrnit::parse_solve_mode("bogus"), rrnit::TraceIoError);
}

TEST(Manifest, RoundTripsConfigurationAndOutcome) {
  rrnit::ProblemSpec spec;
  spec.kind = "deblur";
  spec.image_rows = 16;
  spec.image_cols = 24;
  spec.psf_size = 5;
  spec.sigma = 1.25;
  spec.boundary = rrnit::Boundary::zero_pad;
  spec.noise_level = 2.5e-6;
  spec.seed = 42;

  rrnit::SolverConfig cfg;
  cfg.method = rrnit::Method::rrnit;
  cfg.p = 0.35;
  cfg.tau = 3.0;
  cfg.m2 = false;
  cfg.warm_start = rrnit::WarmStart::previous;
  cfg.solve_mode = rrnit::SolveMode::cg;
  cfg.cg_tol = 1e-8;

  rrnit::Manifest m;
  m.problem = spec;
  m.config = cfg;
  m.delta = 1.5e-4;
  m.initial_residual = 7.5;
  m.initial_error = 2.25;
  m.stop_reason = rrnit::StopReason::inner_failure;
  m.k_star = std::nullopt;
  m.total_linear_solves = 77;
  m.total_krylov_iterations = 1234;
  m.step_sq_sum = 0.5;
  m.weighted_residual_sum = 12.5;
  m.failure_detail = "solve_range: no multiplier in range";
  m.created_utc = "2026-01-02T03:04:05Z";

  const std::string path = temp_path("manifest.json");
  rrnit::write_manifest(path, m);
  const rrnit::Manifest got = rrnit::read_manifest(path);
  EXPECT_EQ(got.problem.kind, spec.kind);
  EXPECT_EQ(got.problem.image_rows, spec.image_rows);
  EXPECT_EQ(got.problem.image_cols, spec.image_cols);
  EXPECT_EQ(got.problem.psf_size, spec.psf_size);
  EXPECT_EQ(got.problem.sigma, spec.sigma);
  EXPECT_EQ(got.problem.boundary, spec.boundary);
  EXPECT_EQ(got.problem.noise_level, spec.noise_level);
  EXPECT_EQ(got.problem.seed, spec.seed);
  EXPECT_EQ(got.config.method, cfg.method);
  EXPECT_EQ(got.config.p, cfg.p);
  EXPECT_EQ(got.config.tau, cfg.tau);
  EXPECT_EQ(got.config.m2, cfg.m2);
  EXPECT_EQ(got.config.warm_start, cfg.warm_start);
  EXPECT_EQ(got.config.solve_mode, cfg.solve_mode);
  EXPECT_EQ(got.config.cg_tol, cfg.cg_tol);
  EXPECT_EQ(got.delta, m.delta);
  EXPECT_EQ(got.initial_residual, m.initial_residual);
  ASSERT_TRUE(got.initial_error.has_value());
  EXPECT_EQ(*got.initial_error, 2.25);
  EXPECT_EQ(got.stop_reason, m.stop_reason);
  EXPECT_FALSE(got.k_star.has_value());
  EXPECT_EQ(got.total_linear_solves, 77);
  EXPECT_EQ(got.total_krylov_iterations, 1234);
  EXPECT_EQ(got.step_sq_sum, m.step_sq_sum);
  EXPECT_EQ(got.weighted_residual_sum, m.weighted_residual_sum);
  EXPECT_EQ(got.failure_detail, m.failure_detail);
  EXPECT_EQ(got.created_utc, m.created_utc);
  std::remove(path.c_str());
}

TEST(Manifest, AssembleRebuildsRunTrace) {
  const rrnit::RunTrace tr = sample_trace(true);
  rrnit::ProblemSpec spec;  // defaults: hilbert n=25
  rrnit::SolverConfig cfg;
  rrnit::Problem prob;
  prob.spec = spec;
  prob.delta = 0.125;
  rrnit::Manifest m = rrnit::make_manifest(prob, cfg, tr);
  EXPECT_FALSE(m.created_utc.empty());
  EXPECT_EQ(m.library_version_str, rrnit::library_version);

  const rrnit::RunTrace rebuilt = rrnit::assemble_trace(m, tr.records);
  EXPECT_EQ(rebuilt.initial_residual, tr.initial_residual);
  EXPECT_EQ(rebuilt.stop_reason, tr.stop_reason);
  ASSERT_TRUE(rebuilt.k_star.has_value());
  EXPECT_EQ(*rebuilt.k_star, 3u);
  EXPECT_EQ(rebuilt.total_linear_solves, tr.total_linear_solves);
  expect_same_records(rebuilt.records, tr.records);
}

}  // namespace
