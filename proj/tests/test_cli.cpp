#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "rosplab/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr sent to `err_path` (or discarded).
Run run_cli(const std::string& args, const std::string& err_path = "/dev/null") {
  const std::string cmd = std::string(ROSPLAB_CLI) + " " + args + " 2>" + err_path;
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rosplab-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(Io, ParsesLabelAndJsonDistributions) {
  using rosplab::io::parse_distribution;
  EXPECT_DOUBLE_EQ(parse_distribution("triangular(0 1.5 1.5)").mean(), 1.0);
  EXPECT_DOUBLE_EQ(parse_distribution("triangular(0, 0, 3)").mean(), 1.0);
  EXPECT_DOUBLE_EQ(parse_distribution("exponential(2)").mean(), 0.5);
  EXPECT_NEAR(parse_distribution("lognormal(-0.5 1)").mean(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(parse_distribution(R"({"kind":"exponential","rate":4})").mean(), 0.25);
  EXPECT_DOUBLE_EQ(parse_distribution("pointmass(2)").mean(), 2.0);
  EXPECT_THROW(parse_distribution("weibull(1 2)"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("exponential(1 2)"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("exponential(x)"), std::invalid_argument);
  EXPECT_THROW(parse_distribution(R"({"kind":"triangular","a":0})"), std::invalid_argument);
}

TEST(Io, DistributionJsonRoundTrip) {
  using namespace rosplab;
  for (const auto& d : {dist::Distribution::triangular(0.5, 0.5, 2), dist::Distribution::lognormal(-0.5, 1.0),
                        dist::Distribution::empirical({1.0, 2.0}), dist::Distribution::point_mass(3.0)}) {
    const auto back = io::distribution_from_json(io::to_json(d));
    EXPECT_EQ(back.label(), d.label());
    EXPECT_EQ(back.mean(), d.mean());
  }
}

TEST(Io, StudyRowFormat) {
  std::ostringstream os;
  rosplab::io::write_study_header(os);
  rosplab::io::write_study_row(os, {"s", "mpc", 2, 0.99, "exponential(1)", 0.1, 0.0, 5, 7, "semi-analytic"});
  EXPECT_EQ(os.str(),
            "study_id,method,N,beta,distribution,value_mean,value_stderr,realizations,seed,inner_mode\n"
            "s,mpc,2,0.98999999999999999,exponential(1),0.10000000000000001,0,5,7,semi-analytic\n");
}

TEST_F(CliTest, FigureOutputIsByteIdenticalAcrossRunsAndWorkers) {
  const auto a = run_cli("figure --id 4 --outer 100 --seed 7 --out " + path("a.csv"));
  const auto b = run_cli("figure --id 4 --outer 100 --seed 7 --workers 3 --out " + path("b.csv"));
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_FALSE(slurp(path("a.csv")).empty());
  const auto side = nlohmann::json::parse(slurp(path("a.csv.json")));
  EXPECT_EQ(side["config"]["seed"], 7);
  EXPECT_EQ(side["config"]["outer"], 100);
  const auto c = run_cli("figure --id 4 --outer 100 --seed 8 --out " + path("c.csv"));
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, FigureSchemaCoversMethodsAndSizes) {
  const auto r = run_cli("figure --id 1 --outer 20 --out -");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "study_id,method,N,beta,distribution,value_mean,value_stderr,realizations,seed,inner_mode");
  std::set<std::string> methods;
  std::set<int> sizes;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 10u) << line;
    methods.insert(cells[1]);
    sizes.insert(std::stoi(cells[2]));
    EXPECT_EQ(cells[4], "triangular(0 1.5 1.5)");
  }
  EXPECT_EQ(methods, (std::set<std::string>{"sdp", "mpc"}));
  EXPECT_EQ(sizes.size(), 10u);
  EXPECT_EQ(*sizes.begin(), 1);
  EXPECT_EQ(*sizes.rbegin(), 10);
}

TEST_F(CliTest, FigureSixWritesSymmetricMap) {
  const auto r = run_cli("figure --id 6 --grid-points 4 --out -");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "p1,p2,sdp_minus_mpc");
  std::map<std::pair<std::string, std::string>, std::string> cells;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string a, b, v;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, v, ',');
    cells[{a, b}] = v;
  }
  EXPECT_EQ(cells.size(), 16u);
  for (const auto& [k, v] : cells) EXPECT_EQ(v, (cells[{k.second, k.first}]));
}

TEST_F(CliTest, ConfigFileFillsUnsetOptionsOnly) {
  std::ofstream(path("cfg.json")) << R"({"outer": 10, "sizes": [2, 3], "seed": 9, "beta": 0.95})";
  const auto r = run_cli("--config " + path("cfg.json") + " figure --id 2 --beta 0.9 --out " + path("f.csv"));
  ASSERT_EQ(r.code, 0);
  const auto side = nlohmann::json::parse(slurp(path("f.csv.json")));
  EXPECT_EQ(side["config"]["outer"], 10);
  EXPECT_EQ(side["config"]["seed"], 9);
  EXPECT_EQ(side["config"]["sizes"], nlohmann::json::array({2, 3}));
  EXPECT_EQ(side["config"]["model"]["beta"], 0.9);

  std::ofstream(path("bad.json")) << R"({"no_such_option": 1})";
  EXPECT_EQ(run_cli("--config " + path("bad.json") + " figure --id 2 --out " + path("g.csv")).code, 2);
}

TEST_F(CliTest, EvalZeroInventoryIsZero) {
  const auto r = run_cli("eval --method sdp --dist 'exponential(1)' --samples 0.5,1.5 --x1 0");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\neval,sdp,2,0.98999999999999999,exponential(1),0,0,0,1,semi-analytic\n"), std::string::npos)
      << r.out;
}

TEST_F(CliTest, EvalAnalyticAndMonteCarloAgree) {
  const auto a = run_cli("eval --method mpc --dist 'exponential(1)' --n 3 --seed 4");
  const auto m = run_cli("eval --method mpc --dist 'exponential(1)' --n 3 --seed 4 --mode mc --paths 20000");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(m.code, 0);
  auto cells = [](const std::string& out) {
    const std::string row = out.substr(out.find('\n') + 1);
    std::vector<std::string> c;
    std::stringstream ls(row);
    for (std::string s; std::getline(ls, s, ',');) c.push_back(s);
    return c;
  };
  const auto ca = cells(a.out), cm = cells(m.out);
  const double se = std::stod(cm[6]);
  EXPECT_GT(se, 0.0);
  EXPECT_NEAR(std::stod(ca[5]), std::stod(cm[5]), 3.0 * se + 1e-3);
}

TEST_F(CliTest, EvalLogsThresholds) {
  const auto r = run_cli("eval --method mpc --dist 'exponential(1)' --samples 0.5,1.5 --verbose", path("err.txt"));
  ASSERT_EQ(r.code, 0);
  const auto err = slurp(path("err.txt"));
  EXPECT_NE(err.find("min_acceptable_price(x1)=-0.01"), std::string::npos) << err;
  EXPECT_NE(err.find("min_acceptable_price(0)=0.98999999999999999"), std::string::npos) << err;
  EXPECT_NE(err.find("mu=1"), std::string::npos) << err;
}

TEST_F(CliTest, EvalRejectsAtomicTruthInAnalyticMode) {
  EXPECT_EQ(run_cli("eval --method mpc --dist 'pointmass(1)' --samples 1").code, 2);
  EXPECT_EQ(run_cli("eval --method mpc --dist 'pointmass(1)' --samples 1 --mode mc --paths 10").code, 0);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("figure --id 9 --out " + path("x.csv")).code, 2);
  EXPECT_EQ(run_cli("figure --id 1 --outer 5 --out /nonexistent-dir/x.csv").code, 2);
  EXPECT_EQ(run_cli("eval --dist 'exponential(1)'").code, 2);
  EXPECT_EQ(run_cli("eval --method foo --dist 'exponential(1)' --n 2").code, 2);
  EXPECT_EQ(run_cli("nonsense").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST_F(CliTest, SampleConditionDistinguishesFailureFromError) {
  const auto fail = run_cli("check-prop5 --dist 'exponential(1)' --samples 0.5,1.5");
  EXPECT_EQ(fail.code, 1);
  EXPECT_EQ(nlohmann::json::parse(fail.out)["holds"], false);
  const auto ok = run_cli("check-prop5 --dist 'exponential(1)' --samples 0.5,3 --c0 1");
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(nlohmann::json::parse(ok.out)["holds"], true);
  EXPECT_EQ(run_cli("check-prop5 --dist 'pointmass(1)' --samples 0.5").code, 2);
}

TEST_F(CliTest, DiscountSweepSmall) {
  const auto r = run_cli("prop6 --outer 200 --out " + path("p6.csv"));
  ASSERT_TRUE(r.code == 0 || r.code == 1);
  const auto side = nlohmann::json::parse(slurp(path("p6.csv.json")));
  EXPECT_EQ(side["summary"]["rows"].size(), 3u);
  EXPECT_EQ(side["summary"]["holds"].get<bool>(), r.code == 0);
  EXPECT_EQ(run_cli("prop6 --betas 0.99,0.9 --outer 10").code, 2);
}

TEST_F(CliTest, BellmanVerifications) {
  const auto t1 = run_cli("bellman verify-theorem1 --example 1");
  ASSERT_EQ(t1.code, 0);
  const auto j1 = nlohmann::json::parse(t1.out);
  EXPECT_LE(j1["gap"].get<double>(), 2e-9);
  EXPECT_TRUE(j1["shape_passed"].get<bool>());
  EXPECT_EQ(run_cli("bellman verify-theorem1 --example 2").code, 0);
  // The convex instance under the robust operator is a contract violation.
  EXPECT_EQ(run_cli("bellman verify-theorem1 --example 2 --shape concave").code, 1);
  EXPECT_EQ(run_cli("bellman verify-theorem2 --example 1").code, 0);
  EXPECT_EQ(run_cli("bellman verify-theorem2 --example 2").code, 0);
  EXPECT_EQ(run_cli("bellman verify-theorem3 --instances 5").code, 0);
  EXPECT_EQ(run_cli("bellman shape --example 2 --operator doo").code, 0);
  EXPECT_EQ(run_cli("bellman verify-theorem1").code, 2);
  EXPECT_EQ(run_cli("bellman").code, 2);
}

TEST_F(CliTest, BellmanExportRoundTrip) {
  ASSERT_EQ(run_cli("bellman export-example --example 1 --out " + path("e1.json")).code, 0);
  const auto r = run_cli("bellman verify-theorem1 --instance " + path("e1.json"));
  EXPECT_EQ(r.code, 0);
  std::ofstream(path("broken.json")) << "{\"beta\": 0.9}";
  EXPECT_EQ(run_cli("bellman verify-theorem1 --instance " + path("broken.json")).code, 2);
}
