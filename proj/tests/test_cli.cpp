#include "phaseret/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using phaseret::Json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("phaseret_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" PHASERET_CLI "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Value of `key=` in a summary line.
  static double field(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + "=");
    if (pos == std::string::npos) return std::nan("");
    return std::stod(text.substr(pos + key.size() + 1));
  }

  fs::path dir_;
};

TEST_F(Cli, GenWritesRequestedShape) {
  CliRun r = run("gen --kind gaussian --n 16 --m 64 --seed 1 -o inst.json");
  ASSERT_EQ(r.code, 0) << r.err;
  Json j = phaseret::read_json_file(dir_ / "inst.json");
  EXPECT_EQ(j.at("ensemble").at("m"), 64);
  EXPECT_EQ(j.at("y").size(), 64u);

  r = run("gen --kind masked-fourier --n 16 --k 4 --seed 1 -o mf.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(phaseret::read_json_file(dir_ / "mf.json").at("ensemble").at("m"), 64);
}

TEST_F(Cli, GenRejectsBadShapes) {
  CliRun r = run("gen --kind masked-fourier --n 16 --m 63 --seed 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("multiple of N"), std::string::npos);
  EXPECT_EQ(run("gen --kind gaussian --n 16 --m 64").code, 2);
  EXPECT_EQ(run("gen --kind gaussian --n 16 --m 64 --seed 1 --bogus").code, 2);
  EXPECT_EQ(run("gen --kind gaussian --n 16 --m 64 --seed 1 --signal harmonic").code, 2);
}

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --n 8 --m 24 --seed 5 --snr-db 10 --signal random -o a.json").code, 0);
  ASSERT_EQ(run("gen --n 8 --m 24 --seed 5 --snr-db 10 --signal random -o b.json").code, 0);
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
}

TEST_F(Cli, SolveNoiselessLsFppReachesZeroCost) {
  ASSERT_EQ(run("gen --kind gaussian --n 16 --m 64 --seed 1 -o inst.json").code, 0);
  CliRun r = run("solve --algo lsfpp --lambda 10 inst.json --out-dir out");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(field(r.out, "ls_cost"), 1e-8);
  EXPECT_LT(field(r.out, "mse_db"), -60.0);
  const Json est = phaseret::read_json_file(dir_ / "out" / "estimate.json");
  EXPECT_LT(est.at("ls_cost").get<double>(), 1e-8);
  EXPECT_EQ(est.at("estimate").at("n"), 16);
  std::ifstream trace(dir_ / "out" / "trace.jsonl");
  int lines = 0;
  for (std::string line; std::getline(trace, line);) {
    EXPECT_TRUE(Json::parse(line).contains("objective"));
    ++lines;
  }
  EXPECT_EQ(lines, est.at("iterations").get<int>());
}

TEST_F(Cli, SolveEchoesResolvedConfig) {
  ASSERT_EQ(run("gen --n 8 --m 32 --seed 2 --snr-db 20 -o inst.json").code, 0);
  std::ofstream(dir_ / "overlay.json") << R"({"fpp": {"lambda": 3.0, "epsilon": 0.1}})";
  CliRun r = run("solve --algo bfpp --epsilon 0.4 --config overlay.json inst.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto line = r.out.substr(0, r.out.find('\n'));
  const Json echoed = Json::parse(line.substr(line.find('{')));
  EXPECT_EQ(echoed.at("fpp").at("epsilon"), 0.4);
  EXPECT_EQ(echoed.at("fpp").at("lambda"), 3.0);
}

TEST_F(Cli, SolveErrorsMapToExitCodes) {
  EXPECT_EQ(run("solve --algo wf missing.json").code, 1);
  ASSERT_EQ(run("gen --n 8 --m 48 --seed 3 -o inst.json").code, 0);
  EXPECT_EQ(run("solve --algo nope inst.json").code, 2);
  EXPECT_EQ(run("solve --algo lsfpp --init random inst.json").code, 2);
  CliRun r = run("solve --algo wf --mu-max 1e6 --tau0 1e-3 inst.json");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("iteration"), std::string::npos);
}

TEST_F(Cli, CrbRanksAndScaling) {
  ASSERT_EQ(run("gen --n 16 --m 64 --seed 1 -o inst.json").code, 0);
  CliRun a = run("crb inst.json --sigma 0.2");
  CliRun b = run("crb inst.json --sigma 0.4");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(field(a.out, "rank"), 31.0);
  EXPECT_NEAR(field(b.out, "crb_trace_db") - field(a.out, "crb_trace_db"), 10.0 * std::log10(4.0), 1e-3);
  EXPECT_EQ(run("crb inst.json").code, 2);  // noiseless, no override

  ASSERT_EQ(run("gen --n 8 --m 40 --seed 1 --signal harmonic --frequencies -0.15,0.15 -o h.json").code, 0);
  CliRun h = run("crb h.json --param harmonic --snr-db 10");
  ASSERT_EQ(h.code, 0) << h.err;
  EXPECT_EQ(field(h.out, "rank"), 5.0);
  EXPECT_TRUE(phaseret::read_json_file(dir_ / "crb.json").contains("eigenvalues"));
}

TEST_F(Cli, CrbAmpPhaseRejectsZeroAmplitude) {
  ASSERT_EQ(run("gen --n 4 --m 16 --seed 1 -o inst.json").code, 0);
  Json j = phaseret::read_json_file(dir_ / "inst.json");
  j["truth"]["values"][2] = Json::array({0.0, 0.0});
  phaseret::write_json_file(dir_ / "zero.json", j);
  CliRun r = run("crb zero.json --param amp-phase --sigma 0.1");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("crb zero.json --param complex --sigma 0.1").code, 0);
}

TEST_F(Cli, BenchUnknownPresetListsPresets) {
  CliRun r = run("bench --preset fig99");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("table2"), std::string::npos);
  EXPECT_EQ(run("bench").code, 2);
}

TEST_F(Cli, BenchFig1UsesTheEpsilonGrid) {
  CliRun r = run("bench --preset fig1 --trials 1 --jobs 1 --out-dir out");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "out" / "fig1.csv");
  EXPECT_EQ(csv.rfind("epsilon,", 0), 0u);
  const Json meta = phaseret::read_json_file(dir_ / "out" / "fig1.json");
  EXPECT_EQ(meta.at("rows"), 11);
  EXPECT_EQ(meta.at("spec").at("n"), 16);
  EXPECT_EQ(meta.at("spec").at("m"), 80);
}

TEST_F(Cli, BenchTableLayoutAndDeterminism) {
  CliRun r = run("bench --preset table1 --trials 2 --jobs 2 --out-dir a");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(run("bench --preset table1 --trials 2 --jobs 1 --out-dir b").code, 0);
  const std::string csv = slurp(dir_ / "a" / "table1.csv");
  EXPECT_EQ(csv, slurp(dir_ / "b" / "table1.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "fig3_4.csv"), slurp(dir_ / "b" / "fig3_4.csv"));
  const std::string header = csv.substr(0, csv.find("\r\n"));
  EXPECT_EQ(header.substr(0, header.find(",B-FPP failed")),
            "setting,init,snr_db,CRB,B-FPP,LS-FPP,PhaseLift,PhaseCut,WF,GS");
  EXPECT_NE(csv.find(",n/a,n/a,"), std::string::npos);
}

}  // namespace
