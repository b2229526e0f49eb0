#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"

namespace eqimpact::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "eqimpact");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eqimpact_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string synth(std::size_t size, std::uint64_t seed = 1) const {
    const auto out = path("synth_" + std::to_string(size) + "_" + std::to_string(seed) + ".csv");
    const auto r = cli({"synth", "--size", std::to_string(size), "--seed", std::to_string(seed), "--output", out});
    EXPECT_EQ(r.code, 0) << r.err;
    return out;
  }

  fs::path dir_;
};

TEST_F(CliTest, AuditPerfectClassifier) {
  const auto in = write("perfect.csv",
                        "group,income,truth,decision\n"
                        "a,10,1,1\na,20,0,0\na,30,1,1\nb,15,1,1\nb,40,0,0\n");
  const auto r = cli({"audit", "--input", in});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["kind"], "fairness_report");
  for (const auto* gap : {"fpr", "fnr", "equalized_odds", "equalized_opportunity", "impact", "impact_exact"}) {
    EXPECT_EQ(j["gaps"][gap], 0.0) << gap;
  }
}

TEST_F(CliTest, AuditWritesJsonAndPrintsTable) {
  const auto in = synth(200);
  const auto report = path("report.json");
  const auto r = cli({"audit", "--input", in, "--output", report});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("a1"), std::string::npos);
  EXPECT_FALSE(json::accept(r.out));
  const auto j = json::parse(slurp(report));
  EXPECT_EQ(j["groups"].size(), 2u);
}

TEST_F(CliTest, MissingColumnExitsTwo) {
  const auto in = write("bad.csv", "group,truth,decision\na,1,1\n");
  const auto r = cli({"audit", "--input", in});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("income"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"audit", "--epsilon", "1.5", "--input", synth(10)}).code, 2);
  EXPECT_EQ(cli({"audit", "--no-such-flag"}).code, 2);
  EXPECT_EQ(cli({"repair", "--input", synth(10)}).code, 2);
  EXPECT_EQ(cli({"apply", "--input", synth(10)}).code, 2);
  EXPECT_EQ(cli({"audit", "--input", path("missing.csv")}).code, 2);
  EXPECT_EQ(cli({"audit", "--psi", "quadratic", "--input", synth(10)}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, SchemaOverride) {
  const auto in = write("renamed.csv", "g,inc,y,yhat\na,10,1,0\nb,10,1,1\n");
  const auto r = cli({"audit", "--input", in, "--schema", "group=g,income=inc,truth=y,decision=yhat"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["gaps"]["fnr"], 1.0);
}

TEST_F(CliTest, SynthThenAuditMatchesTargets) {
  const auto r = cli({"audit", "--input", synth(10000)});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["gaps"]["equalized_opportunity"].get<double>(), 0.20, 0.03);
  EXPECT_NEAR(j["gaps"]["fpr"].get<double>(), 0.22, 0.03);
}

TEST_F(CliTest, SynthConfigAndSeedOverride) {
  const auto config = write("synth.cfg", "seed = 5\ngroups = p, q\nsize = 20\n");
  const auto a = cli({"synth", "--config", config});
  const auto b = cli({"synth", "--config", config, "--seed", "5"});
  const auto c = cli({"synth", "--config", config, "--seed", "6"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 41);
}

TEST_F(CliTest, RepairConstantUtilityEqualizesFnr) {
  const auto in = synth(2000);
  const auto dc = path("dc.json");
  const auto r = cli({"repair", "--input", in, "--psi", "constant", "--delta", "0.01", "--output", dc});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_LE(report["gaps"]["fnr"].get<double>(), 0.01 + 1e-9);
  const auto classifier = json::parse(slurp(dc));
  EXPECT_EQ(classifier["kind"], "derived_classifier");
  EXPECT_EQ(classifier["solver"]["status"], "optimal");
}

TEST_F(CliTest, ApplyIdentityKeepsDecisions) {
  const std::string text = "group,income,truth,decision\na,10,1,1\na,20,0,0\nb,15,1,0\nb,40,0,1\n";
  const auto in = write("data.csv", text);
  const auto dc = path("dc.json");
  // Any classifier file will do as a template; its table is overwritten with the identity.
  ASSERT_EQ(cli({"repair", "--input", in, "--delta", "1e9", "--output", dc}).code, 0);
  auto j = json::parse(slurp(dc));
  for (auto& g : j["p"]) {
    for (auto& cell : g["grant_probability"]) cell = json::array({0.0, 1.0});
  }
  const auto identity = write("identity.json", j.dump(2));
  const auto r = cli({"apply", "--input", in, "--classifier", identity});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "group,income,truth,decision,repaired_decision\n"
            "a,10,1,1,1\na,20,0,0,0\nb,15,1,0,0\nb,40,0,1,1\n");
}

TEST_F(CliTest, ApplyRejectsUnknownGroup) {
  const auto in = write("data.csv", "group,income,truth,decision\na,10,1,1\nb,20,1,0\n");
  const auto dc = path("dc.json");
  ASSERT_EQ(cli({"repair", "--input", in, "--output", dc}).code, 0);
  const auto other = write("other.csv", "group,income,truth,decision\nc,10,1,1\n");
  EXPECT_EQ(cli({"apply", "--input", other, "--classifier", dc}).code, 2);
}

TEST_F(CliTest, ApplyMatchesAnalyticRates) {
  const auto in = synth(50000);
  const auto dc = path("dc.json");
  const auto repaired = cli({"repair", "--input", in, "--output", dc});
  ASSERT_EQ(repaired.code, 0) << repaired.err;
  const auto report = json::parse(repaired.out);
  const auto scored = path("scored.csv");
  ASSERT_EQ(cli({"apply", "--input", in, "--classifier", dc, "--seed", "9", "--output", scored}).code, 0);

  std::map<std::string, std::pair<double, double>> fn;  // misses, positives
  std::istringstream lines(slurp(scored));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto f = eqimpact::detail::split_csv_line(line);
    if (f[2] != "1") continue;
    auto& [miss, total] = fn[f[0]];
    total += 1;
    miss += f[4] == "0";
  }
  for (const auto& g : report["groups"]) {
    const double expected = g["fnr"].get<double>();
    const auto [miss, total] = fn.at(g["group"].get<std::string>());
    EXPECT_LE(std::abs(miss / total - expected), 3 * std::sqrt(expected * (1 - expected) / total) + 1e-12)
        << g["group"];
  }
}

TEST_F(CliTest, RoundTripReducesImpactGap) {
  const auto in = synth(3000);
  const auto before = json::parse(cli({"audit", "--input", in}).out);
  const auto dc = path("dc.json");
  ASSERT_EQ(cli({"repair", "--input", in, "--delta", "0", "--output", dc}).code, 0);
  const auto scored = path("scored.csv");
  ASSERT_EQ(cli({"apply", "--input", in, "--classifier", dc, "--output", scored}).code, 0);
  const auto after = cli({"audit", "--input", scored, "--schema", "decision=repaired_decision"});
  ASSERT_EQ(after.code, 0) << after.err;
  const double gap_before = before["gaps"]["impact"].get<double>();
  const double gap_after = json::parse(after.out)["gaps"]["impact"].get<double>();
  EXPECT_LT(gap_after, gap_before);
  EXPECT_LT(gap_after, 0.05);
}

TEST_F(CliTest, OutputsAreByteIdentical) {
  const auto in = synth(1000, 3);
  const auto again = path("again.csv");
  ASSERT_EQ(cli({"synth", "--size", "1000", "--seed", "3", "--output", again}).code, 0);
  EXPECT_EQ(slurp(in), slurp(again));
  std::string first_report, first_dc, first_apply;
  for (int run = 0; run < 2; ++run) {
    const auto dc = path("dc" + std::to_string(run) + ".json");
    const auto r = cli({"repair", "--input", in, "--output", dc});
    ASSERT_EQ(r.code, 0);
    const auto applied = cli({"apply", "--input", in, "--classifier", dc, "--seed", "4"});
    const auto audited = cli({"audit", "--input", in});
    if (run == 0) {
      first_report = r.out + audited.out;
      first_dc = slurp(dc);
      first_apply = applied.out;
    } else {
      EXPECT_EQ(first_report, r.out + audited.out);
      EXPECT_EQ(first_dc, slurp(dc));
      EXPECT_EQ(first_apply, applied.out);
    }
  }
}

TEST_F(CliTest, VerifyTwoByTwo) {
  const auto in = synth(500);
  // Reciprocal utility at epsilon 0.5 gives two buckets: 8 variables in total.
  const auto r = cli({"verify", "--input", in, "--epsilon", "0.5", "--delta", "0.02", "--step", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["kind"], "verification");
  EXPECT_EQ(j["variables"], 8);
  EXPECT_GE(j["gap"].get<double>(), -1e-12);
  EXPECT_LE(j["gap"].get<double>(), 0.05);
}

TEST_F(CliTest, VerifyRejectsBadStep) {
  EXPECT_EQ(cli({"verify", "--input", synth(50), "--epsilon", "0.5", "--step", "0.3"}).code, 2);
}

TEST_F(CliTest, BinaryReportsMissingColumn) {
  const auto in = write("bad.csv", "group,truth,decision\na,1,1\n");
  const std::string cmd = std::string(EQIMPACT_CLI_PATH) + " audit --input " + in + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

}  // namespace
}  // namespace eqimpact::cli
