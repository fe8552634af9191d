#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jointprice/cli.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData(JOINTPRICE_DATA_DIR);

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = jointprice::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> key_values(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma != std::string::npos) kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return kv;
}

std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::vector<std::vector<std::string>> r;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    r.push_back(cells);
  }
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    static std::mt19937_64 rng(std::random_device{}());
    dir_ = fs::temp_directory_path() / ("jointprice_cli_" + std::to_string(rng()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

std::string table1() { return (kData / "table1.conf").string(); }
std::string figure2x() { return (kData / "figure2x.conf").string(); }

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"nonsense"}).code, 1);
  EXPECT_EQ(run({"region", "--no-such-flag"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  const Result missing = run({"region", "--out", out()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_EQ(run({"region", "--config", out("absent.conf")}).code, 1);
  EXPECT_EQ(run({"region", "--config", table1(), "--zeta", "1.5", "--out", out()}).code, 1);
}

TEST_F(Cli, RegionCurveAndSummary) {
  const Result r = run({"region", "--config", table1(), "--gamma", "2", "--grid", "1001",
                        "--psi-star", "0.008", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto curve = rows(dir_ / "region_curve.csv");
  ASSERT_EQ(curve.size(), 1002u);
  EXPECT_EQ(curve[0], (std::vector<std::string>{"n", "psi_joint", "psi_a_ref", "psi_b_ref"}));
  std::size_t best = 1;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (std::stod(curve[i][1]) < std::stod(curve[best][1])) best = i;
  }
  EXPECT_EQ(curve[best][0], "0.97199999999999998");
  const auto kv = key_values(dir_ / "region_summary.csv");
  EXPECT_EQ(kv.at("exists"), "true");
  EXPECT_EQ(kv.at("n_min"), "0.97197207466084556");
  EXPECT_EQ(kv.at("psi_min"), "0.0046599548908674553");
  EXPECT_EQ(kv.at("n_ct"), "0.98728101373402055");
  EXPECT_EQ(kv.at("n_lower"), "0.85029509306148809");
  EXPECT_EQ(kv.at("n_upper"), "0.98576309364587544");
  // Full precision survives a round trip.
  EXPECT_EQ(std::stod(kv.at("n_min")), 0.97197207466084556);
}

TEST_F(Cli, RegionTextFormat) {
  const Result r = run({"region", "--config", table1(), "--format", "text", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "region_summary.txt"));
  EXPECT_FALSE(fs::exists(dir_ / "region_summary.csv"));
  EXPECT_NE(r.out.find("n_min"), std::string::npos);
}

TEST_F(Cli, RegionWithoutCompetitiveness) {
  const Result r = run({"region", "--pi-a", "1", "--sigma-a", "0.1", "--pi-b", "1", "--sigma-b",
                        "0.3", "--rho", "0.5", "--grid", "11", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(dir_ / "region_summary.csv");
  EXPECT_EQ(kv.at("exists"), "false");
  EXPECT_EQ(rows(dir_ / "region_curve.csv").size(), 12u);
}

TEST_F(Cli, LoadingBelowMinimumIsAValidationError) {
  const Result r = run({"region", "--config", table1(), "--gamma", "2", "--psi-star", "0.001",
                        "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("psi"), std::string::npos) << r.err;
}

TEST_F(Cli, CommandLineOverridesConfig) {
  ASSERT_EQ(run({"region", "--config", table1(), "--zeta", "0.25", "--out", out()}).code, 0);
  EXPECT_EQ(key_values(dir_ / "region_summary.csv").at("zeta"), "0.25");
  ASSERT_EQ(run({"--zeta", "0.3", "region", "--config", table1(), "--out", out()}).code, 0);
  EXPECT_EQ(key_values(dir_ / "region_summary.csv").at("zeta"), "0.29999999999999999");
  ASSERT_EQ(run({"region", "--config", table1(), "--out", out()}).code, 0);
  EXPECT_EQ(key_values(dir_ / "region_summary.csv").at("zeta"), "0.5");
}

TEST_F(Cli, ConfigValidation) {
  const fs::path bad = write("bad.conf", "pi_a = 1\nno_such_key = 3\n");
  EXPECT_EQ(run({"region", "--config", bad.string(), "--out", out()}).code, 1);
  const fs::path junk = write("junk.conf", "this line has no separator\n");
  const Result r = run({"region", "--config", junk.string(), "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigSuppliesCommand) {
  const Result r = run({"--config", figure2x(), "--grid", "5", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "sweep.csv"));
}

TEST_F(Cli, DecideVerdicts) {
  struct Case {
    const char* qa;
    const char* qb;
    const char* sufficient;
    const char* banded;
  };
  for (const Case& c : {Case{"0.5", "0.5", "SeparateFavored", "SeparateFavored"},
                        Case{"3", "3", "JointFavored", "JointFavored"},
                        Case{"1.5", "1.5", "JointFavored", "Indeterminate"}}) {
    const Result r = run({"decide", "--config", figure2x(), "--q-a", c.qa, "--q-b", c.qb,
                          "--demand-share", "0.3", "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = key_values(dir_ / "decision.csv");
    EXPECT_EQ(kv.at("sufficient_verdict"), c.sufficient) << c.qa;
    EXPECT_EQ(kv.at("banded_verdict"), c.banded) << c.qa;
    EXPECT_EQ(kv.at("sufficient_regime"), "below");
    if (std::string(c.banded) == "Indeterminate") {
      EXPECT_NE(kv.at("banded_advisory_d_ptf"), "NA");
    }
  }
}

TEST_F(Cli, DecideRequiresMarket) {
  EXPECT_EQ(run({"decide", "--config", table1(), "--q-a", "1", "--q-b", "1",
                 "--demand-share", "1.2", "--out", out()}).code,
            1);
}

TEST_F(Cli, SweepPresets) {
  const Result r = run({"sweep", "--config", figure2x(), "--grid", "19", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sweep = rows(dir_ / "sweep.csv");
  ASSERT_EQ(sweep.size(), 1u + 4 * 19);
  EXPECT_EQ(sweep[0], (std::vector<std::string>{"q_a", "q_b", "w_d", "psi_star", "rel_d_ptf", "status"}));
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const double rel = std::stod(sweep[i][4]);
    const std::string q = sweep[i][0] + ":" + sweep[i][1];
    EXPECT_EQ(sweep[i][5], "ok");
    if (q == "0.5:0.5") EXPECT_LT(rel, 0.0);
    if (q == "3:3" || q == "0.5:3") EXPECT_GT(rel, 0.0);
  }
  EXPECT_EQ(rows(dir_ / "sweep_thresholds.csv").size(), 5u);
}

TEST_F(Cli, SweepSinglePointUsesMidpoint) {
  ASSERT_EQ(run({"sweep", "--config", figure2x(), "--grid", "1", "--q-pairs", "1:1", "--out", out()}).code, 0);
  const auto sweep = rows(dir_ / "sweep.csv");
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_EQ(sweep[1][2], "0.5");
}

TEST_F(Cli, SweepRejectsBadScenarioList) {
  EXPECT_EQ(run({"sweep", "--config", figure2x(), "--q-pairs", "1-1", "--out", out()}).code, 1);
}

TEST_F(Cli, SimulateIsDeterministic) {
  const std::vector<std::string> base{"simulate", "--mortality-a", (kData / "mortality_a.csv").string(),
                                      "--mortality-b", (kData / "mortality_b.csv").string(),
                                      "--sims", "1500"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(run(with({"--seed", "7", "--out", out("a"), "--dump-scenarios"})).code, 0);
  ASSERT_EQ(run(with({"--seed", "7", "--out", out("b"), "--dump-scenarios"})).code, 0);
  ASSERT_EQ(run(with({"--seed", "8", "--out", out("c")})).code, 0);
  EXPECT_EQ(slurp(dir_ / "a/simulation_summary.csv"), slurp(dir_ / "b/simulation_summary.csv"));
  EXPECT_EQ(slurp(dir_ / "a/scenarios.csv"), slurp(dir_ / "b/scenarios.csv"));
  EXPECT_EQ(slurp(dir_ / "a/region_curve.csv"), slurp(dir_ / "b/region_curve.csv"));
  EXPECT_NE(slurp(dir_ / "a/simulation_summary.csv"), slurp(dir_ / "c/simulation_summary.csv"));

  const auto kv = key_values(dir_ / "a/simulation_summary.csv");
  EXPECT_LT(std::stod(kv.at("rho")), 0.0);
  EXPECT_EQ(kv.at("sample_count"), "1500");
  EXPECT_EQ(kv.at("seed"), "7");

  // The summary feeds straight back in as pair statistics.
  const Result r = run({"region", "--stats", (dir_ / "a/simulation_summary.csv").string(),
                        "--out", out("d")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, SimulateCalibration) {
  const Result r = run({"simulate", "--mortality-a", (kData / "gaussian_a.csv").string(),
                        "--mortality-b", (kData / "gaussian_b.csv").string(), "--sims", "3000",
                        "--calibrate-var", "0.95", "--grid", "11", "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(dir_ / "simulation_summary.csv");
  EXPECT_EQ(kv.at("gamma_calibrated"), "true");
  EXPECT_NEAR(std::stod(kv.at("gamma")), 1.6449, 0.1);
  const auto curve = rows(dir_ / "region_curve.csv");
  EXPECT_EQ(curve.size(), 12u);
  EXPECT_EQ(curve[0].back(), "psi_var");
}

TEST_F(Cli, SimulateInputErrors) {
  const fs::path bad = write("bad.csv", "age,2000,2001\n30,0.01,x\n");
  const Result r = run({"simulate", "--mortality-a", bad.string(), "--mortality-b", bad.string(),
                        "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run({"simulate", "--mortality-a", (kData / "mortality_a.csv").string(),
                 "--mortality-b", (kData / "mortality_b.csv").string(), "--annuity-age", "80",
                 "--out", out()}).code,
            1);
}

TEST_F(Cli, ScreenOutputs) {
  const std::string losses = (kData / "losses_3.csv").string();
  ASSERT_EQ(run({"screen", "--losses", losses, "--out", out("a")}).code, 0);
  ASSERT_EQ(run({"screen", "--losses", losses, "--out", out("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "a/screen_report.csv"), slurp(dir_ / "b/screen_report.csv"));
  EXPECT_EQ(slurp(dir_ / "a/screen_curves.csv"), slurp(dir_ / "b/screen_curves.csv"));
  const std::string report = slurp(dir_ / "a/screen_report.csv");
  EXPECT_NE(report.find("[matrix]"), std::string::npos);
  // Three pairs of 101 points each plus a header.
  EXPECT_EQ(rows(dir_ / "a/screen_curves.csv").size(), 1u + 3 * 101);

  ASSERT_EQ(run({"screen", "--losses", losses, "--format", "text", "--mean", "trend-end",
                 "--out", out("c")}).code,
            0);
  EXPECT_TRUE(fs::exists(dir_ / "c/screen_report.txt"));
}

TEST_F(Cli, ScreenMalformedRowNamesLine) {
  const fs::path bad = write("bad.csv", "period,line_id,line_name,loss\n2006-H1,1,a,5\n2006-H2,1,a,oops\n");
  const Result r = run({"screen", "--losses", bad.string(), "--out", out()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  const fs::path dup = write("dup.csv", "period,line_id,line_name,loss\n2006-H1,1,a,5\n2006-H1,1,a,6\n");
  EXPECT_EQ(run({"screen", "--losses", dup.string(), "--out", out()}).code, 1);
}

TEST_F(Cli, ScreenDegenerateDataIsAComputationFailure) {
  std::ostringstream csv;
  csv << "period,line_id,line_name,loss\n";
  for (int t = 0; t < 10; ++t) {
    csv << "p" << 10 + t << ",1,flat," << 100 + 5 * t << '\n';
    csv << "p" << 10 + t << ",2,noisy," << 50 + (t % 3) << '\n';
  }
  const fs::path path = write("flat.csv", csv.str());
  const Result r = run({"screen", "--losses", path.string(), "--out", out()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("variance"), std::string::npos) << r.err;
}

TEST_F(Cli, ScreenReportsRejectedLines) {
  const fs::path path = write("gap.csv",
                              "period,line_id,line_name,loss\n"
                              "p1,1,a,5\np2,1,a,6\np3,1,a,7\np4,1,a,6\np5,1,a,9\np6,1,a,8\np7,1,a,10\np8,1,a,9\n"
                              "p1,2,b,5\np2,2,b,4\np3,2,b,6\np4,2,b,8\np5,2,b,6\np6,2,b,7\np7,2,b,9\np8,2,b,8\n"
                              "p1,3,c,5\n");
  const Result r = run({"screen", "--losses", path.string(), "--out", out()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("line_id 3"), std::string::npos) << r.err;
}
