#include <gtest/gtest.h>

#include <sstream>

#include "mermin/cli.hpp"

using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
  json report() const { return json::parse(out); }
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mermin::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(MERMIN_DATA_DIR) + "/" + name; }

const json& find_check(const json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return c;
  throw std::runtime_error("missing check " + name);
}

}  // namespace

TEST(Cli, VerifyPasses) {
  const auto r = run({"verify", "--n-min", "3", "--n-max", "6", "--trials", "20", "--seed", "7", "--tol", "1e-10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.report();
  EXPECT_EQ(j["status"], "pass");
  EXPECT_EQ(j["parameters"]["seed"], 7);
  for (const auto& c : j["checks"]) {
    EXPECT_EQ(c["status"], "pass") << c.dump();
    EXPECT_LT(c["residual"].get<double>(), 1e-10);
    EXPECT_TRUE(c.contains("wall_time_s"));
  }
  EXPECT_NO_THROW(find_check(j, "mermin_square_expansion_n6"));
}

TEST(Cli, VerifyImpossibleToleranceFails) {
  const auto r = run({"verify", "--n-max", "4", "--tol", "1e-20"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.report()["status"], "fail");
}

TEST(Cli, VerifyArgumentErrors) {
  EXPECT_EQ(run({"verify", "--n-min", "2"}).code, 2);
  EXPECT_EQ(run({"verify", "--n-max", "9"}).code, 2);
  EXPECT_EQ(run({"verify", "--n-min", "5", "--n-max", "4"}).code, 2);
  EXPECT_EQ(run({"verify", "--trials", "abc"}).code, 2);
  EXPECT_EQ(run({"verify", "--seed", "-1"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(Cli, VerifyAcceptsFullSeedRange) {
  EXPECT_EQ(run({"verify", "--n-max", "3", "--trials", "1", "--seed", "18446744073709551615"}).code, 0);
}

TEST(Cli, TableCsv) {
  const auto r = run({"table", "--max-n", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "n,lhv_bound,quantum_max,ratio\n3,2,4,2\n4,4,8,2\n5,4,16,4\n6,8,32,4\n");
  EXPECT_EQ(run({"table", "--max-n", "3"}).out, "n,lhv_bound,quantum_max,ratio\n3,2,4,2\n");
}

TEST(Cli, TableJson) {
  const auto r = run({"table", "--max-n", "5", "--format", "json", "--no-timestamp"});
  ASSERT_EQ(r.code, 0);
  const auto rows = r.report()["result"]["rows"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2]["ratio"], 4);
}

TEST(Cli, TableLimits) {
  EXPECT_EQ(run({"table", "--max-n", "13"}).code, 3);
  EXPECT_EQ(run({"table", "--max-n", "2"}).code, 2);
}

TEST(Cli, Reduce) {
  const auto r = run({"reduce", "--n", "6", "--m", "2", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto res = r.report()["result"];
  EXPECT_EQ(res["factor"].get<double>(), 4.0);
  EXPECT_LT(res["residual"].get<double>(), 1e-10);
  EXPECT_NEAR(res["max_eigenvalue_ratio"].get<double>(), 2.0, 1e-8);
  EXPECT_NEAR(res["eigenvalue_law_ratio"].get<double>(), 1.0, 1e-8);
}

TEST(Cli, ReduceFromPlanarFile) {
  const auto r = run({"reduce", "--settings", data("planar_n6.json"), "--m", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto res = r.report()["result"];
  EXPECT_EQ(res["factor"].get<double>(), 8.0);
  EXPECT_LT(res["residual"].get<double>(), 1e-10);
}

TEST(Cli, ReduceErrors) {
  EXPECT_EQ(run({"reduce", "--n", "5", "--m", "3"}).code, 2);
  EXPECT_EQ(run({"reduce", "--n", "5"}).code, 2);
  EXPECT_EQ(run({"reduce", "--settings", data("planar_n6.json"), "--n", "5", "--m", "1"}).code, 2);
  EXPECT_EQ(run({"reduce", "--settings", "/nonexistent.json", "--m", "0"}).code, 2);
}

TEST(Cli, SpectrumFromFiles) {
  const auto chsh = run({"spectrum", "--settings", data("chsh_canonical.json"), "--family", "chsh"});
  ASSERT_EQ(chsh.code, 0) << chsh.err;
  EXPECT_NEAR(chsh.report()["result"]["max_abs"].get<double>(), 2 * std::sqrt(2.0), 1e-9);

  const auto three = run({"spectrum", "--settings", data("xy_three_particle.json")});
  ASSERT_EQ(three.code, 0) << three.err;
  const auto res = three.report()["result"];
  EXPECT_NEAR(res["max_abs"].get<double>(), 4.0, 1e-9);
  ASSERT_EQ(res["multiplicities"].size(), 3u);
  EXPECT_EQ(res["multiplicities"][1]["count"], 6);
}

TEST(Cli, SpectrumErrors) {
  EXPECT_EQ(run({"spectrum"}).code, 2);
  EXPECT_EQ(run({"spectrum", "--n", "13"}).code, 3);
  EXPECT_EQ(run({"spectrum", "--n", "3", "--family", "chsh"}).code, 2);
  EXPECT_EQ(run({"spectrum", "--n", "3", "--format", "csv"}).code, 2);
}

TEST(Cli, Lhv) {
  const auto r = run({"lhv", "--n", "5"});
  ASSERT_EQ(r.code, 0);
  const auto res = r.report()["result"];
  EXPECT_EQ(res["max_value"], 4);
  EXPECT_EQ(res["witness"].size(), 5u);
  EXPECT_EQ(run({"lhv", "--n", "2", "--family", "chsh"}).report()["result"]["max_value"], 2);
  EXPECT_EQ(run({"lhv", "--n", "13"}).code, 3);
  EXPECT_EQ(run({"lhv", "--n", "1"}).code, 2);
}

TEST(Cli, Optimize) {
  const auto r = run({"optimize", "--n", "4", "--objective", "spectral", "--restarts", "8", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.report();
  EXPECT_NEAR(j["result"]["best_value"].get<double>(), 64.0, 64e-6);
  for (const auto& a : j["result"]["best_angles"]) EXPECT_LT(std::abs(std::cos(a["theta"].get<double>())), 1e-3);
  EXPECT_EQ(find_check(j, "near_max_runs_perpendicular")["status"], "pass");
  EXPECT_EQ(run({"optimize", "--n", "2"}).code, 2);
  EXPECT_EQ(run({"optimize", "--n", "4", "--objective", "other"}).code, 2);
}

TEST(Cli, NoTimestampOutputIsByteIdentical) {
  const std::vector<std::vector<std::string>> commands = {
      {"verify", "--n-max", "4", "--trials", "3", "--seed", "9", "--no-timestamp"},
      {"reduce", "--n", "6", "--m", "2", "--seed", "1", "--no-timestamp"},
      {"optimize", "--n", "3", "--restarts", "2", "--seed", "4", "--no-timestamp"},
      {"lhv", "--n", "4", "--no-timestamp"},
  };
  for (const auto& c : commands) {
    const auto a = run(c), b = run(c);
    EXPECT_EQ(a.out, b.out) << c[0];
    EXPECT_EQ(a.out.find("wall_time_s"), std::string::npos);
    EXPECT_EQ(a.out.find("timestamp"), std::string::npos);
  }
}

TEST(Cli, HelpExitsCleanly) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("verify"), std::string::npos);
}
