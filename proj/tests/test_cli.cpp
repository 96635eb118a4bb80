#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using difflight::cli::run;

namespace {

struct Invocation {
  int code = 0;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "difflight");
  std::ostringstream out, err;
  Invocation r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("difflight_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string read(const std::string& name) const {
    std::ifstream f(dir_ / name);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
  std::size_t lines(const std::string& name) const {
    std::string text = read(name);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RunWritesReports) {
  auto r = invoke({"run", "--preset", "ddpm-toy", "--trace", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "trace.csv"));
  auto j = nlohmann::json::parse(read("report.json"));
  EXPECT_GT(j["gops"].get<double>(), 0.0);
  EXPECT_EQ(j["arch"], "4,12,3,6,6,3");
  EXPECT_NE(r.out.find("GOPS"), std::string::npos);
}

TEST_F(CliTest, RerunIsByteIdentical) {
  ASSERT_EQ(invoke({"run", "--preset", "sdm-toy", "--opts", "sparsity,pipeline", "--out", dir_.string()}).code, 0);
  const std::string first = read("report.csv") + read("report.json");
  ASSERT_EQ(invoke({"run", "--preset", "sdm-toy", "--opts", "sparsity,pipeline", "--out", dir_.string()}).code, 0);
  EXPECT_EQ(read("report.csv") + read("report.json"), first);
}

TEST_F(CliTest, WaveguideViolationCitesLimit) {
  auto r = invoke({"run", "--preset", "ddpm-toy", "--arch", "4,40,3,6,6,3", "--out", dir_.string()});
  EXPECT_EQ(r.code, difflight::cli::kInfeasible);
  EXPECT_NE(r.err.find("36"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "report.csv"));
}

TEST_F(CliTest, AblateWritesFiveRowsPerWorkload) {
  ASSERT_EQ(invoke({"ablate", "--out", dir_.string()}).code, 0);
  EXPECT_EQ(lines("ablation.csv"), 1u + 5u * 3u);
  const std::string first = read("ablation.csv");
  ASSERT_EQ(invoke({"ablate", "--out", dir_.string()}).code, 0);
  EXPECT_EQ(read("ablation.csv"), first);
}

TEST_F(CliTest, DseOverSpaceFile) {
  std::ofstream(path("space.cfg")) << "dse.y = 2,4\ndse.n = 12,40\ndse.workloads = ldm-toy\n";
  auto r = invoke({"dse", "--space", path("space.cfg"), "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines("dse_ranked.csv"), 1u + 4u);
  const std::string ranked = read("dse_ranked.csv");
  EXPECT_NE(ranked.find("36"), std::string::npos);
  EXPECT_GE(lines("dse_frontier.csv"), 2u);
}

TEST_F(CliTest, DseAllInfeasible) {
  std::ofstream(path("space.cfg")) << "dse.n = 37\ndse.workloads = ldm-toy\n";
  EXPECT_EQ(invoke({"dse", "--space", path("space.cfg"), "--out", dir_.string()}).code, difflight::cli::kInfeasible);
}

TEST_F(CliTest, VerifyPassesEveryCombination) {
  auto r = invoke({"verify", "--preset", "sdm-toy", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_EQ(lines("verify.csv"), 1u + 8u);
  EXPECT_EQ(read("verify.csv").find("workload,opts,max_relative_error"), 0u);
}

TEST_F(CliTest, BadInputsExitNonzero) {
  EXPECT_EQ(invoke({"run", "--workload", path("missing.json"), "--out", dir_.string()}).code, difflight::cli::kBadInput);
  EXPECT_EQ(invoke({"run", "--preset", "nope", "--out", dir_.string()}).code, difflight::cli::kBadInput);
  EXPECT_NE(invoke({"run", "--preset", "ddpm-toy", "--opts", "turbo", "--out", dir_.string()}).code, 0);
  EXPECT_NE(invoke({"frobnicate"}).code, 0);
  std::ofstream(path("bad.json")) << "{\"name\": \"x\"";
  EXPECT_EQ(invoke({"run", "--workload", path("bad.json"), "--out", dir_.string()}).code, difflight::cli::kBadInput);
}

TEST_F(CliTest, ProfileFromEnvironment) {
  std::ofstream(path("slow.cfg")) << "eo_tune.latency = 40ns\n";
  ASSERT_EQ(invoke({"run", "--preset", "ldm-toy", "--out", dir_.string()}).code, 0);
  const double base = nlohmann::json::parse(read("report.json"))["latency_s"].get<double>();
  ::setenv("DIFFLIGHT_PROFILE", path("slow.cfg").c_str(), 1);
  auto r = invoke({"run", "--preset", "ldm-toy", "--out", dir_.string()});
  ::unsetenv("DIFFLIGHT_PROFILE");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(nlohmann::json::parse(read("report.json"))["latency_s"].get<double>(), base);
  auto flag = invoke({"run", "--preset", "ldm-toy", "--profile", path("slow.cfg"), "--out", dir_.string()});
  ASSERT_EQ(flag.code, 0) << flag.err;
  EXPECT_GT(nlohmann::json::parse(read("report.json"))["latency_s"].get<double>(), base);
}
