#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ntd/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run ntd_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = ntd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "ntd_cli_tests" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string bundle() {
    const std::string b = path("bundle");
    if (!fs::exists(b))
      EXPECT_EQ(ntd_cli({"gen", "--assumption", "A4.2", "--dims", "20,20,15", "--ranks", "4,4,3", "--seed", "3",
                         "--out", b})
                    .code,
                0);
    return b;
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

ntd::Json json_of(const Run& r) { return ntd::Json::parse(r.out); }

}  // namespace

TEST_F(Cli, GenWritesValidatedBundle) {
  const auto r = ntd_cli({"gen", "--assumption", "A4.2", "--dims", "20,20,15", "--ranks", "4,4,3", "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json_of(r)["report"]["overall"], "pass");
  EXPECT_TRUE(fs::exists(path("b") + "/meta.json"));
}

TEST_F(Cli, GenIsDeterministic) {
  for (const char* b : {"x", "y"})
    ASSERT_EQ(ntd_cli({"gen", "--assumption", "A4.4", "--dims", "10,10,12", "--ranks", "3,3,5", "--seed", "9",
                       "--out", path(b)})
                  .code,
              0);
  for (const char* f : {"tensor.json", "truth.json", "meta.json"})
    EXPECT_EQ(slurp(path("x") + "/" + f), slurp(path("y") + "/" + f)) << f;
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(ntd_cli({"gen", "--assumption", "A4.2", "--dims", "20,20,15", "--out", path("b")}).code, 2);
  EXPECT_EQ(ntd_cli({}).code, 2);
  EXPECT_EQ(ntd_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(ntd_cli({"gen", "--assumption", "A4.2", "--dims", "3,3,3", "--ranks", "4,4,3", "--out", path("b")}).code,
            2);
  EXPECT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "7"}).code, 2);
  EXPECT_EQ(ntd_cli({"bench", "--procedures", "1,9"}).code, 2);
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = ntd_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("decompose"), std::string::npos);
}

TEST_F(Cli, CheckDimsOk) {
  EXPECT_EQ(json_of(ntd_cli({"check", "dims-ok", "3", "4"}))["ok"], true);
  EXPECT_EQ(json_of(ntd_cli({"check", "dims-ok", "--r1", "3", "--r2", "3"}))["ok"], false);
  EXPECT_EQ(json_of(ntd_cli({"check", "dims-ok", "2", "9"}))["ok"], false);
}

TEST_F(Cli, CheckKronSufficientBoundary) {
  EXPECT_EQ(json_of(ntd_cli({"check", "kron-sufficient", "3", "1.4142", "3", "1.4142"}))["ok"], true);
  EXPECT_EQ(json_of(ntd_cli({"check", "kron-sufficient", "4", "1.7", "4", "1.7"}))["ok"], false);
  EXPECT_EQ(ntd_cli({"check", "kron-sufficient", "3", "1.5", "3", "1.5"}).code, 2);  // p above sqrt(r - 1)
}

TEST_F(Cli, CheckMatrixFiles) {
  std::ofstream(path("i4.json")) << "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]";
  std::ofstream(path("flat.json")) << "[[1,1],[1,1]]";
  const auto ssc = json_of(ntd_cli({"check", "ssc", path("i4.json")}));
  EXPECT_EQ(ssc["ssc"], true);
  EXPECT_EQ(ssc["anchors"], (ntd::Json{1, 2, 3, 4}));
  EXPECT_EQ(json_of(ntd_cli({"check", "separable", path("flat.json")}))["separable"], false);
  EXPECT_EQ(json_of(ntd_cli({"check", "pssc", path("i4.json"), "--p", "1"}))["pssc"], true);
  EXPECT_EQ(ntd_cli({"check", "pssc", path("i4.json")}).code, 2);
}

TEST_F(Cli, CheckIoErrorsExitThree) {
  std::ofstream(path("bad.json")) << "[[1,2],[3]]";
  EXPECT_EQ(ntd_cli({"check", "ssc", path("missing.json")}).code, 3);
  EXPECT_EQ(ntd_cli({"check", "separable", path("bad.json")}).code, 3);
}

TEST_F(Cli, DecomposeRecoversBundle) {
  const auto r = ntd_cli({"decompose", bundle(), "--procedure", "1", "--seed", "2", "--out", path("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json_of(r);
  EXPECT_EQ(j["matched"], true);
  EXPECT_LE(j["residual"].get<double>(), 1e-9);
  EXPECT_EQ(ntd::read_model(path("m.json")).factors.size(), 3u);
}

TEST_F(Cli, DecomposeSliceIndexAndConfig) {
  std::ofstream(path("cfg.txt")) << "restarts = 2\nseed = 11\n";
  const auto r = ntd_cli({"decompose", bundle(), "--procedure", "1", "--slice-index", "1,2", "--solver-config",
                          path("cfg.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json_of(r)["seed"], 11);
  EXPECT_EQ(json_of(ntd_cli({"decompose", bundle(), "--procedure", "1", "--solver-config", path("cfg.txt"),
                             "--seed", "4"}))["seed"],
            4);
  std::ofstream(path("bad.txt")) << "restarts = many\n";
  EXPECT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "1", "--solver-config", path("bad.txt")}).code, 3);
  EXPECT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "1", "--slice-index", "99"}).code, 2);
  EXPECT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "2", "--slice-index", "1"}).code, 2);
}

TEST_F(Cli, DecomposePreconditionsExitTwo) {
  EXPECT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "0"}).code, 2);  // r3 != r1 r2
  const std::string b4 = path("b4");
  ASSERT_EQ(ntd_cli({"gen", "--assumption", "A5.4", "--dims", "8,10,6,6", "--ranks", "3,3,2,2", "--out", b4}).code, 0);
  EXPECT_EQ(ntd_cli({"decompose", b4, "--procedure", "d3", "--partition", "1|3|2"}).code, 2);
  EXPECT_EQ(ntd_cli({"decompose", b4, "--procedure", "d3", "--partition", "1|3,4"}).code, 2);
  EXPECT_EQ(ntd_cli({"decompose", b4, "--procedure", "d3", "--partition", "1|3,4|2"}).code, 0);
  EXPECT_EQ(ntd_cli({"decompose", path("b4") + "/tensor.json", "--procedure", "d1"}).code, 2);  // no ranks
}

TEST_F(Cli, DecomposeAssumptionFailureExitsFour) {
  const std::string b = path("stress");
  ASSERT_EQ(ntd_cli({"gen", "--assumption", "A4.3", "--dims", "20,20,15", "--ranks", "4,4,3", "--out", b}).code, 0);
  EXPECT_EQ(ntd_cli({"decompose", b, "--procedure", "1"}).code, 4);
  EXPECT_EQ(ntd_cli({"decompose", b, "--procedure", "2"}).code, 0);
}

TEST_F(Cli, EvalAgainstTruth) {
  ASSERT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "1", "--out", path("m.json")}).code, 0);
  const auto j = json_of(ntd_cli({"eval", "--model", path("m.json"), "--truth", bundle(), "--tensor", bundle()}));
  EXPECT_EQ(j["matched"], true);
  EXPECT_LE(j["recon_error"].get<double>(), 1e-9);
  const auto self = json_of(ntd_cli({"eval", "--model", path("m.json"), "--truth", path("m.json")}));
  EXPECT_EQ(self["core_error"], 0.0);
  for (const auto& e : self["factor_errors"]) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(self["perms"][0], (ntd::Json{1, 2, 3, 4}));
}

TEST_F(Cli, EvalDimsMismatchExitsThree) {
  ASSERT_EQ(ntd_cli({"decompose", bundle(), "--procedure", "1", "--out", path("m.json")}).code, 0);
  ASSERT_EQ(
      ntd_cli({"gen", "--assumption", "A4.2", "--dims", "20,20,16", "--ranks", "4,4,3", "--out", path("o")}).code,
      0);
  EXPECT_EQ(ntd_cli({"eval", "--model", path("m.json"), "--truth", path("o")}).code, 3);
}

TEST_F(Cli, BenchCsv) {
  const auto r = ntd_cli({"bench", "--procedures", "1,0", "--seeds", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], "command,procedure,seed,matched,max_factor_err,core_err,recon_err,ms");
  EXPECT_EQ(rows[1].rfind("bench,0,0,true,", 0), 0u);
  EXPECT_EQ(rows[6].rfind("bench,1,2,true,", 0), 0u);
  EXPECT_EQ(ntd_cli({"bench", "--seeds", "0"}).out, rows[0] + "\n");
  EXPECT_EQ(ntd_cli({"bench", "--procedures", "1,0", "--seeds", "3"}).out, r.out);
}

TEST_F(Cli, BenchSpecOverridesAndErrors) {
  std::ofstream(path("spec.json")) << R"({"1": {"dims": [12, 12, 10], "ranks": [3, 3, 3]}})";
  const auto r = ntd_cli({"bench", "--procedures", "1", "--seeds", "2", "--spec", path("spec.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("bench,1,1,true"), std::string::npos);
  std::ofstream(path("bad.json")) << R"({"7": {}})";
  EXPECT_EQ(ntd_cli({"bench", "--spec", path("bad.json")}).code, 3);
  EXPECT_EQ(ntd_cli({"bench", "--spec", path("none.json")}).code, 3);
}
