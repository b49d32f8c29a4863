#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rrnit/pgm.hpp"
#include "rrnit/trace_io.hpp"

namespace {

namespace fs = std::filesystem;

/// Runs the command line under test. The binary path arrives via the
/// RRNIT_CLI environment variable so the suite follows the build tree.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* bin = std::getenv("RRNIT_CLI");
    if (bin == nullptr || *bin == '\0') {
      GTEST_SKIP() << "RRNIT_CLI is not set; skipping command-line tests";
    }
    bin_ = bin;
    dir_ = fs::temp_directory_path() /
           ("rrnit_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }

  void TearDown() override {
    if (!dir_.empty()) fs::remove_all(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run_cli(const std::string& args, std::string* output = nullptr) const {
    const std::string out_file = path("cmd_output.txt");
    const std::string cmd = "'" + bin_ + "' " + args + " >'" + out_file + "' 2>&1";
    const int raw = std::system(cmd.c_str());
    if (output != nullptr) {
      std::ifstream in(out_file);
      std::ostringstream ss;
      ss << in.rdbuf();
      *output = ss.str();
    }
    if (raw == -1) return -1;
    return WEXITSTATUS(raw);
  }

  std::string bin_;
  fs::path dir_;
};

TEST_F(CliTest, RunProducesTraceManifestAndSummary) {
  const std::string trace = path("run.csv");
  std::string out;
  const int code = run_cli(
      "run --method rrnit --problem hilbert --n 25 --noise-level 1e-4 --seed 1 --out " + trace,
      &out);
  EXPECT_EQ(code, 0) << out;
  EXPECT_TRUE(fs::exists(trace));
  EXPECT_TRUE(fs::exists(trace + ".manifest.json"));
  EXPECT_NE(out.find("stop=discrepancy"), std::string::npos) << out;
  EXPECT_NE(out.find("k_star="), std::string::npos) << out;

  const std::vector<rrnit::IterationRecord> recs = rrnit::read_trace_csv(trace);
  EXPECT_FALSE(recs.empty());
  const rrnit::Manifest m = rrnit::read_manifest(trace + ".manifest.json");
  EXPECT_EQ(m.problem.kind, "hilbert");
  EXPECT_EQ(m.stop_reason, rrnit::StopReason::discrepancy);
}

TEST_F(CliTest, VerifyAcceptsItsOwnRun) {
  const std::string trace = path("run.csv");
  ASSERT_EQ(run_cli("run --noise-level 1e-4 --seed 2 --out " + trace), 0);
  std::string out;
  const int code = run_cli("verify --trace " + trace, &out);
  EXPECT_EQ(code, 0) << out;
  EXPECT_NE(out.find("verify: all checks passed"), std::string::npos) << out;
  EXPECT_NE(out.find("check residual_decay"), std::string::npos) << out;
}

TEST_F(CliTest, VerifyRejectsTamperedTrace) {
  const std::string trace = path("run.csv");
  ASSERT_EQ(run_cli("run --noise-level 1e-4 --seed 2 --out " + trace), 0);

  // Double one multiplier, keeping the file otherwise intact.
  std::ifstream in(trace);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  ASSERT_GE(lines.size(), 3u);
  {
    const auto fields = rrnit::detail::split_csv_line(lines[2]);
    ASSERT_EQ(fields.size(), 6u);
    std::ostringstream forged;
    forged << fields[0] << ',' << rrnit::detail::fmt17(2.0 * std::stod(fields[1]));
    for (std::size_t i = 2; i < fields.size(); ++i) forged << ',' << fields[i];
    lines[2] = forged.str();
  }
  std::ofstream outf(trace);
  for (const std::string& l : lines) outf << l << '\n';
  outf.close();

  std::string out;
  const int code = run_cli("verify --trace " + trace, &out);
  EXPECT_EQ(code, 1) << out;
  EXPECT_NE(out.find("verify: FAILURES present"), std::string::npos) << out;
}

TEST_F(CliTest, VerifyRejectsMalformedTraceFile) {
  const std::string trace = path("garbage.csv");
  {
    std::ofstream f(trace);
    f << "this,is,not\na,trace,file\n";
  }
  std::string out;
  EXPECT_EQ(run_cli("verify --trace " + trace, &out), 65) << out;
}

TEST_F(CliTest, ExitCodesFollowStopReasons) {
  std::string out;
  // Iteration cap.
  EXPECT_EQ(run_cli("run --noise-level 1e-5 --seed 1 --max-outer 1 --out " + path("cap.csv"),
                    &out),
            2)
      << out;
  // Instability flag on the geometric method at deep noise.
  EXPECT_EQ(run_cli("run --method gnit --q 4 --noise-level 1e-7 --seed 1 --out " +
                        path("unstable.csv"),
                    &out),
            4)
      << out;
  // Inner search failure when the budgets are strangled.
  EXPECT_EQ(run_cli("run --noise-level 1e-5 --seed 1 --inner-cap 1 --bisection-cap 0 --out " +
                        path("inner.csv"),
                    &out),
            3)
      << out;
}

TEST_F(CliTest, UsageErrorsReportCode64) {
  std::string out;
  EXPECT_EQ(run_cli("run --no-such-flag", &out), 64);
  EXPECT_EQ(run_cli("verify", &out), 64);  // --trace is required
  EXPECT_EQ(run_cli("run --problem nonsense --out " + path("x.csv"), &out), 64);
  EXPECT_EQ(run_cli("--help", &out), 0);
}

TEST_F(CliTest, JsonFormatRoundTrips) {
  const std::string trace = path("run.json");
  ASSERT_EQ(run_cli("run --noise-level 1e-4 --seed 3 --format json --out " + trace), 0);
  const std::vector<rrnit::IterationRecord> recs = rrnit::read_trace_json(trace);
  EXPECT_FALSE(recs.empty());
  std::string out;
  EXPECT_EQ(run_cli("verify --trace " + trace, &out), 0) << out;
}

TEST_F(CliTest, DeblurRunSavesRestoredImage) {
  const std::string trace = path("deblur.csv");
  const std::string img = path("restored.pgm");
  std::string out;
  const int code = run_cli("run --problem deblur --image-size 16 --psf-size 5 --sigma 1.0 "
                           "--noise-level 1e-3 --seed 1 --save-restored " +
                               img + " --out " + trace,
                           &out);
  EXPECT_EQ(code, 0) << out;
  const rrnit::GrayImage restored = rrnit::read_pgm(img);
  EXPECT_EQ(restored.rows, 16u);
  EXPECT_EQ(restored.cols, 16u);
  // Restored intensities stay in a sane display range.
  for (double px : restored.pixels) {
    EXPECT_GE(px, 0.0);
    EXPECT_LE(px, 1.0);
  }
}

TEST_F(CliTest, SaveRestoredRequiresDeblur) {
  std::string out;
  EXPECT_EQ(run_cli("run --problem hilbert --save-restored " + path("x.pgm") + " --out " +
                        path("t.csv"),
                    &out),
            64)
      << out;
}

TEST_F(CliTest, CompareRunsTheGridAndWritesTable) {
  const std::string table = path("table.csv");
  std::string out;
  const int code = run_cli(
      "compare --methods rrnit,gnit --noise-levels 1e-3,1e-4 --seeds 1 --out " + table, &out);
  EXPECT_EQ(code, 0) << out;
  EXPECT_NE(out.find("method"), std::string::npos);
  EXPECT_NE(out.find("rrnit"), std::string::npos);
  EXPECT_NE(out.find("gnit"), std::string::npos);
  EXPECT_TRUE(fs::exists(table));
  std::ifstream f(table);
  std::string header;
  ASSERT_TRUE(std::getline(f, header));
  EXPECT_NE(header.find("method"), std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, 4);  // 2 methods x 2 levels x 1 seed
}

}  // namespace
