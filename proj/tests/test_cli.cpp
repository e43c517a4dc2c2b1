#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tucker/experiments.hpp"
#include "tucker/tns_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "tucker_cli_tests";

int run(const std::string& args) {
  fs::create_directories(kDir);
  const std::string cmd = std::string("\"") + TUCKER_CLI_PATH + "\" " + args + " > \"" + (kDir / "stdout.txt").string() +
                          "\" 2> \"" + (kDir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("decompose"), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, LowerBound) {
  EXPECT_EQ(run("lower-bound --dims 6,6,6 --rank 2 --xi 1"), 0);
  EXPECT_NE(slurp(kDir / "stdout.txt").find("\"status\": \"PASS\""), std::string::npos);
  EXPECT_EQ(run("lower-bound --dims 3,3,3 --rank 2 --xi 1"), 1);
}

TEST(Cli, DecomposeWritesOutputs) {
  tucker::Rng rng(1);
  const auto inst = tucker::gen_low_rank_instance({8, 9, 10}, 2, 3.0, rng);
  const fs::path in = kDir / "input.tns";
  fs::create_directories(kDir);
  tucker::write_tns(in, inst.t);
  const fs::path prefix = kDir / "fit";
  EXPECT_EQ(run("decompose --input \"" + in.string() + "\" --ranks 2,2,2 --algo hooi --tmax 10 --out \"" +
                prefix.string() + "\""),
            0);
  for (const char* suffix : {"_core.tns", "_reconstruction.tns", "_factor_1.tns", "_factor_3.tns", "_trace.csv"})
    EXPECT_TRUE(fs::exists(prefix.string() + suffix)) << suffix;
  const auto rec = tucker::read_tns(fs::path(prefix.string() + "_reconstruction.tns"));
  EXPECT_LE(tucker::hs_norm(rec - inst.t), 1e-8 * tucker::hs_norm(inst.t));
  EXPECT_EQ(run("decompose --input \"" + (kDir / "missing.tns").string() + "\" --ranks 2,2,2"), 3);
  EXPECT_EQ(run("decompose --input \"" + in.string() + "\" --ranks 2,2"), 1);
}

TEST(Cli, SimulationRerunIsByteIdentical) {
  const fs::path cfg = kDir / "denoise.json";
  write_file(cfg, R"({"kind":"DENOISE_RECON","dims":[[10,10,10]],"ranks":[2],"sigma":[1],"repetitions":2,"master_seed":4})");
  const fs::path a = kDir / "a.csv", b = kDir / "b.csv", s = kDir / "s.csv";
  ASSERT_EQ(run("denoise-sim --config \"" + cfg.string() + "\" --csv \"" + a.string() + "\" --summary \"" + s.string() +
                "\""),
            0);
  ASSERT_EQ(run("denoise-sim --config \"" + cfg.string() + "\" --csv \"" + b.string() + "\""), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const fs::path svg = kDir / "plot.svg";
  EXPECT_EQ(run("plot --csv \"" + s.string() + "\" --kind fig2a --out \"" + svg.string() + "\""), 0);
  EXPECT_TRUE(fs::exists(svg));
  EXPECT_EQ(run("plot --csv \"" + (kDir / "nothing.csv").string() + "\" --kind fig2a"), 3);
}

TEST(Cli, AuditExitCodes) {
  const fs::path bad = kDir / "bad_audit.json";
  write_file(bad, R"({"kind":"BOUNDS_AUDIT","dims":[[10,10,10]],"ranks":[2],"alpha":[1],"repetitions":1})");
  EXPECT_EQ(run("bounds-audit --config \"" + bad.string() + "\""), 1);
  const fs::path ok = kDir / "ok_audit.json";
  write_file(ok, R"({"kind":"BOUNDS_AUDIT","dims":[[10,10,10]],"ranks":[2],"repetitions":1,"tau_budget":1})");
  EXPECT_EQ(run("bounds-audit --config \"" + ok.string() + "\" --report \"" + (kDir / "r.json").string() + "\""), 0);
  EXPECT_NE(slurp(kDir / "stdout.txt").find("PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(kDir / "r.json"));
}
