#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;
using wdnse::fixtures::data_path;

namespace {

struct Outcome
{
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("wdnse_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome wdnse(const std::string& args) const
  {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + WDNSE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  std::string estimate_args(const std::string& net, const std::string& meas, const fs::path& out) const
  {
    return "estimate --network \"" + data_path(net) + "\" --measurements \"" + data_path(meas) + "\" --out \"" +
           out.string() + "\"";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingMeasurementsNamesThePath)
{
  const auto o = wdnse("estimate --network \"" + data_path("three_node.inp") + "\" --measurements /no/such/meas.json --out \"" +
                       (dir_ / "o").string() + "\"");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("/no/such/meas.json"), std::string::npos);
}

TEST_F(Cli, IterationLimitExitsWithTwo)
{
  const auto o = wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o") + " --max-iter 1");
  EXPECT_EQ(o.code, 2);
  const auto report = nlohmann::json::parse(slurp(dir_ / "o" / "report.json"));
  EXPECT_EQ(report["status"], "iteration-limit");
  EXPECT_EQ(report["iterations"], 1);
}

TEST_F(Cli, ThreeNodeEstimateConverges)
{
  const auto o = wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o"));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto report = nlohmann::json::parse(slurp(dir_ / "o" / "report.json"));
  EXPECT_EQ(report["status"], "converged");
  EXPECT_LT(report["final_error"].get<double>(), report["threshold"].get<double>());
  EXPECT_EQ(report["objective"], "wls");

  const auto state = nlohmann::json::parse(slurp(dir_ / "o" / "state.json"));
  EXPECT_EQ(state["format"], "wdnse-state");
  EXPECT_EQ(state["units"]["head"], "ft");
  EXPECT_EQ(state["units"]["flow"], "gpm");
  ASSERT_EQ(state["steps"].size(), 1u);
  const auto& step = state["steps"][0];
  EXPECT_EQ(step["heads"].size(), 3u);
  EXPECT_EQ(step["flows"].size(), 2u);
  for (const auto& h : step["heads"]) {
    EXPECT_TRUE(h.contains("id"));
    EXPECT_TRUE(h.contains("kind"));
    EXPECT_TRUE(h["head_ft"].is_number());
  }

  const auto trace = slurp(dir_ / "o" / "trace.csv");
  EXPECT_EQ(trace.rfind("n,error,objective,accelerated\n", 0), 0u);
}

TEST_F(Cli, HydrostaticSimulateHasNoFlow)
{
  const auto o = wdnse("simulate --network \"" + data_path("hydrostatic.inp") + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto truth = nlohmann::json::parse(slurp(dir_ / "truth.json"));
  EXPECT_EQ(truth["source"], "hydraulics");
  for (const auto& f : truth["steps"][0]["flows"]) EXPECT_NEAR(f["flow_gpm"].get<double>(), 0.0, 1e-6);
  for (const auto& h : truth["steps"][0]["heads"]) EXPECT_NEAR(h["head_ft"].get<double>(), 120.0, 1e-9);
}

TEST_F(Cli, DisconnectedNetworkIsRejected)
{
  const auto o = wdnse("simulate --network \"" + data_path("disconnected.inp") + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("J2"), std::string::npos);
}

TEST_F(Cli, CompareIdenticalFilesGivesZero)
{
  ASSERT_EQ(wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o")).code, 0);
  const auto state = (dir_ / "o" / "state.json").string();
  const auto o = wdnse("compare --estimate \"" + state + "\" --truth \"" + state + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_DOUBLE_EQ(std::stod(o.out), 0.0);
  const auto csv = slurp(dir_ / "compare.csv");
  EXPECT_EQ(csv.rfind("variable,estimate,truth,abs_error\n", 0), 0u);
}

TEST_F(Cli, CompareAgainstGlobalReference)
{
  ASSERT_EQ(wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o")).code, 0);
  const auto sim = wdnse("simulate --global --network \"" + data_path("three_node.inp") + "\" --measurements \"" +
                         data_path("three_node_determined.json") + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto truth = nlohmann::json::parse(slurp(dir_ / "truth.json"));
  EXPECT_EQ(truth["source"], "global-search");
  EXPECT_EQ(truth["starts"], 32);
  const auto o = wdnse("compare --estimate \"" + (dir_ / "o" / "state.json").string() + "\" --truth \"" +
                       (dir_ / "truth.json").string() + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LT(std::stod(o.out), 0.1);
}

TEST_F(Cli, CompareRejectsMismatchedVariables)
{
  ASSERT_EQ(wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o")).code, 0);
  auto doc = nlohmann::ordered_json::parse(slurp(dir_ / "o" / "state.json"));
  doc["steps"][0]["flows"].push_back({{"id", "99"}, {"kind", "pipe"}, {"flow_gpm", 1.0}});
  std::ofstream(dir_ / "extra.json") << doc.dump(2);
  const auto o = wdnse("compare --estimate \"" + (dir_ / "extra.json").string() + "\" --truth \"" +
                       (dir_ / "o" / "state.json").string() + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(o.code, 1);
}

TEST_F(Cli, BadArgumentsExitWithOne)
{
  EXPECT_EQ(wdnse("").code, 1);
  EXPECT_EQ(wdnse(estimate_args("three_node.inp", "three_node_determined.json", dir_ / "o") + " --objective l2").code, 1);
}

TEST_F(Cli, EstimateIsDeterministic)
{
  const auto a = wdnse(estimate_args("net8.inp", "net8_case1.json", dir_ / "a"));
  const auto b = wdnse(estimate_args("net8.inp", "net8_case1.json", dir_ / "b"));
  ASSERT_EQ(a.code, b.code);
  EXPECT_EQ(slurp(dir_ / "a" / "state.json"), slurp(dir_ / "b" / "state.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "trace.csv"), slurp(dir_ / "b" / "trace.csv"));
  auto ra = nlohmann::json::parse(slurp(dir_ / "a" / "report.json"));
  auto rb = nlohmann::json::parse(slurp(dir_ / "b" / "report.json"));
  ra.erase("wall_time_s");
  rb.erase("wall_time_s");
  EXPECT_EQ(ra, rb);
}
