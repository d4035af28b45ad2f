#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfassign/data.hpp"
#include "rfassign/forest.hpp"

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rfassign_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, std::string* output = nullptr) const {
    const auto log = dir_ / "stdout.txt";
    const std::string cmd = "\"" RFASSIGN_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (output) {
      std::ifstream in(log);
      std::stringstream ss;
      ss << in.rdbuf();
      *output = ss.str();
    }
    return rc;
  }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, SimulateCorruptTrainPredict) {
  ASSERT_EQ(run("simulate --n 150 --seed 3 --out " + path("train.csv")), 0);
  ASSERT_EQ(run("corrupt --in " + path("train.csv") + " --out " + path("corrupt.csv") +
                " --rates 0.2,0,0.1,0.4,0 --seed 4"),
            0);
  const auto clean = rfassign::read_csv(path("train.csv"));
  const auto corrupt = rfassign::read_csv(path("corrupt.csv"));
  EXPECT_EQ(clean.rows(), 150u);
  EXPECT_TRUE(clean.has_truth());
  EXPECT_GT(corrupt.missing_count(3), 0u);
  EXPECT_EQ(corrupt.missing_count(1), 0u);

  ASSERT_EQ(run("simulate --n 60 --seed 5 --out " + path("test.csv")), 0);
  for (const char* strategy : {"assignation", "mia", "median"}) {
    ASSERT_EQ(run(std::string("train --in ") + path("corrupt.csv") + " --out " + path("forest.json") +
                  " --trees 6 --strategy " + strategy),
              0)
        << strategy;
    EXPECT_EQ(rfassign::load_forest(path("forest.json")).size(), 6u);
    std::string out;
    ASSERT_EQ(run("predict --forest " + path("forest.json") + " --in " + path("test.csv") +
                      " --out " + path("pred.csv"),
                  &out),
              0);
    EXPECT_NE(out.find("mse_vs_truth"), std::string::npos);
    std::ifstream in(path("pred.csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 61u);
  }
}

TEST_F(Cli, ReportsErrorsWithNonzeroStatus) {
  std::string out;
  EXPECT_NE(run("predict --forest " + path("missing.json") + " --in " + path("x.csv"), &out), 0);
  EXPECT_NE(out.find("error:"), std::string::npos);
  ASSERT_EQ(run("simulate --n 20 --out " + path("d.csv")), 0);
  EXPECT_NE(run("train --in " + path("d.csv") + " --out " + path("f.json") + " --strategy knn", &out), 0);
  EXPECT_NE(out.find("valid:"), std::string::npos);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "x1,y\n0.5,1\nabc,2\n";
  }
  EXPECT_NE(run("train --in " + path("bad.csv") + " --out " + path("f.json"), &out), 0);
  EXPECT_NE(out.find("3"), std::string::npos);
  EXPECT_NE(run("bench --reps 0 --out " + path("b"), &out), 0);
}

TEST_F(Cli, BenchWritesJson) {
  ASSERT_EQ(run("bench --reps 1 --n-train 50 --n-test 50 --trees 3 --x4-rates 0.5 "
                "--strategies median,complete --format json --quiet --out " +
                path("bench")),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "bench" / "results.json"));
  EXPECT_FALSE(fs::exists(dir_ / "bench" / "results.csv"));
}

}  // namespace
