#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrnit/cli.hpp"
#include "rrnit/version.hpp"

namespace {

void attach_problem_flags(CLI::App* cmd, rrnit::ProblemSpec& spec) {
  cmd->add_option("--problem", spec.kind, "Problem kind")
      ->check(CLI::IsMember({"hilbert", "deblur"}))
      ->capture_default_str();
  cmd->add_option("--n", spec.n, "Hilbert matrix dimension")->capture_default_str();
  cmd->add_option_function<std::string>(
         "--x-star",
         [&spec](const std::string& s) { spec.ground_truth = rrnit::parse_ground_truth(s); },
         "Hilbert ground truth: ones or ramp")
      ->check(CLI::IsMember({"ones", "ramp"}));
  cmd->add_option_function<std::size_t>(
         "--image-size",
         [&spec](std::size_t s) {
           spec.image_rows = s;
           spec.image_cols = s;
         },
         "Deblur image side length (square checkerboard)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tile", spec.tile, "Checkerboard tile size")->capture_default_str();
  cmd->add_option("--psf-size", spec.psf_size, "Gaussian blur stencil size (odd)")
      ->capture_default_str();
  cmd->add_option("--sigma", spec.sigma, "Gaussian blur width")->capture_default_str();
  cmd->add_option_function<std::string>(
         "--boundary",
         [&spec](const std::string& s) { spec.boundary = rrnit::parse_boundary(s); },
         "Deblur boundary: periodic or zero_pad")
      ->check(CLI::IsMember({"periodic", "zero_pad"}));
  cmd->add_option("--image", spec.image_path, "PGM ground-truth image (deblur)");
  cmd->add_option("--noise-level", spec.noise_level, "Relative noise level")
      ->capture_default_str();
  cmd->add_option("--seed", spec.seed, "Noise seed")->capture_default_str();
}

void attach_solver_flags(CLI::App* cmd, rrnit::SolverConfig& cfg, bool* tau_set) {
  cmd->add_option("--p", cfg.p, "Range relaxation factor in (0,1)")->capture_default_str();
  cmd->add_option("--q", cfg.q, "Geometric multiplier base (gnit)")->capture_default_str();
  cmd->add_option("--lambda-bar", cfg.lambda_bar, "Constant multiplier (sit)")
      ->capture_default_str();
  cmd->add_option("--tau", cfg.tau, "Discrepancy factor (default 2 hilbert, 3 deblur)")
      ->each([tau_set](const std::string&) { *tau_set = true; });
  cmd->add_option("--max-outer", cfg.max_outer, "Outer iteration cap")->capture_default_str();
  cmd->add_flag("--m1,!--no-m1", cfg.m1, "Greedy Newton numerator");
  cmd->add_flag("--m2,!--no-m2", cfg.m2, "Doubling over-relaxation");
  cmd->add_flag("--m3,!--no-m3", cfg.m3, "Warm start from the multiplier history");
  cmd->add_option_function<std::string>(
         "--warm-start",
         [&cfg](const std::string& s) { cfg.warm_start = rrnit::parse_warm_start(s); },
         "Warm start rule: extrapolate or previous")
      ->check(CLI::IsMember({"extrapolate", "previous"}));
  cmd->add_option("--inner-cap", cfg.inner_cap, "Inner iteration cap per outer step")
      ->capture_default_str();
  cmd->add_option("--bisection-cap", cfg.bisection_cap, "Bisection cap per outer step")
      ->capture_default_str();
  cmd->add_option_function<std::string>(
         "--solve-mode", [&cfg](const std::string& s) { cfg.solve_mode = rrnit::parse_solve_mode(s); },
         "Linear solver: auto, cg, or dense")
      ->check(CLI::IsMember({"auto", "cg", "dense"}));
  cmd->add_option("--cg-tol", cfg.cg_tol, "CG relative tolerance")->capture_default_str();
  cmd->add_option("--cg-max-iter", cfg.cg_max_iter,
                  "CG iteration cap (0 = 10x dimension)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("iterated Tikhonov regularization experiments (v") +
               rrnit::library_version + ")"};
  app.require_subcommand(1);

  rrnit::RunOptions run_opt;
  std::string run_method = "rrnit";
  CLI::App* run_cmd = app.add_subcommand("run", "Run one method on one instance");
  attach_problem_flags(run_cmd, run_opt.problem);
  attach_solver_flags(run_cmd, run_opt.config, &run_opt.tau_set);
  run_cmd->add_option("--method", run_method, "rrnit, gnit, or sit")
      ->check(CLI::IsMember({"rrnit", "gnit", "sit"}))
      ->capture_default_str();
  run_cmd->add_option("--out", run_opt.out, "Trace output path (manifest at <out>.manifest.json)");
  run_cmd->add_option("--format", run_opt.format, "Trace format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  run_cmd->add_option("--save-restored", run_opt.save_restored,
                      "Write the final iterate as a PGM image (deblur)");

  rrnit::CompareOptions cmp_opt;
  std::vector<std::string> cmp_methods = {"rrnit", "gnit"};
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Run a method/noise/seed grid");
  attach_problem_flags(cmp_cmd, cmp_opt.problem);
  attach_solver_flags(cmp_cmd, cmp_opt.config, &cmp_opt.tau_set);
  cmp_cmd->add_option("--methods", cmp_methods, "Comma-separated methods")
      ->delimiter(',')
      ->capture_default_str();
  cmp_cmd->add_option("--noise-levels", cmp_opt.levels, "Comma-separated relative levels")
      ->delimiter(',')
      ->capture_default_str();
  cmp_cmd->add_option("--seeds", cmp_opt.seeds, "Comma-separated seeds")
      ->delimiter(',')
      ->capture_default_str();
  cmp_cmd->add_option("--out", cmp_opt.out, "Optional table output path");
  cmp_cmd->add_option("--format", cmp_opt.format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  rrnit::VerifyCliOptions verify_opt;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Replay a trace and check its invariants");
  verify_cmd->add_option("--trace", verify_opt.trace_path, "Trace file (.csv or .json)")
      ->required();
  verify_cmd->add_option("--manifest", verify_opt.manifest_path,
                         "Manifest path (default <trace>.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rrnit::exit_code::ok : rrnit::exit_code::usage;
  }

  try {
    if (run_cmd->parsed()) {
      run_opt.config.method = rrnit::parse_method(run_method);
      return rrnit::cmd_run(run_opt, std::cout, std::cerr);
    }
    if (cmp_cmd->parsed()) {
      cmp_opt.methods.clear();
      for (const std::string& s : cmp_methods) cmp_opt.methods.push_back(rrnit::parse_method(s));
      return rrnit::cmd_compare(cmp_opt, std::cout, std::cerr);
    }
    return rrnit::cmd_verify(verify_opt, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rrnit::exit_code::usage;
  }
}
