#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef GMI_CLI_PATH
#define GMI_CLI_PATH "gmi"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GMI_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) res.output.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "cli_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kToyCsv =
    "t0,time1,status1\n"
    "4.0,6.0,1\n"
    "2.0,1.5,1\n"
    "5.0,9.0,0\n"
    "3.0,4.2,1\n"
    "6.5,7.8,1\n"
    "2.5,5.5,0\n"
    "4.4,3.3,1\n"
    "7.0,9.1,1\n";

}  // namespace

TEST_CASE("cli: usage errors exit with 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("estimate").exit_code == 2);          // --data missing
  CHECK(run_cli("frobnicate --x 1").exit_code == 2);  // unknown subcommand
}

TEST_CASE("cli: data errors exit with 1") {
  CHECK(run_cli("estimate --data does_not_exist.csv --bootstrap 20").exit_code == 1);
  const std::string bad = write_temp("bad.csv", "t0,time1,status1\n-3,1,1\n");
  CHECK(run_cli("estimate --data " + bad + " --bootstrap 20").exit_code == 1);
  std::remove(bad.c_str());
}

TEST_CASE("cli: estimate prints all four methods at the default thresholds") {
  const std::string csv = write_temp("toy.csv", kToyCsv);
  const RunResult res = run_cli("estimate --data " + csv + " --bootstrap 100 --seed 5");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("proposed") != std::string::npos);
  CHECK(res.output.find("km") != std::string::npos);
  CHECK(res.output.find("lognormal") != std::string::npos);
  CHECK(res.output.find("loglogistic") != std::string::npos);
  CHECK(res.output.find("1.3") != std::string::npos);
  CHECK(res.output.find("1.5") != std::string::npos);
  CHECK(res.output.find("1.7") != std::string::npos);
  std::remove(csv.c_str());
}

TEST_CASE("cli: outputs are byte-identical across runs with the same seed") {
  const std::string csv = write_temp("det.csv", kToyCsv);
  const std::string out1 = "cli_det1.csv", out2 = "cli_det2.csv";
  const RunResult r1 =
      run_cli("estimate --data " + csv + " --bootstrap 150 --seed 9 --out " + out1);
  const RunResult r2 =
      run_cli("estimate --data " + csv + " --bootstrap 150 --seed 9 --out " + out2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(r1.output == r2.output);
  CHECK(read_file(out1) == read_file(out2));
  CHECK(!read_file(out1).empty());
  std::remove(csv.c_str());
  std::remove(out1.c_str());
  std::remove(out2.c_str());
}

TEST_CASE("cli: curve export matches the library estimate on a toy file") {
  const std::string csv = write_temp(
      "curve.csv", "t0,time1,status1\n2.0,2.4,1\n4.0,7.2,1\n3.0,4.5,0\n");
  const std::string out = "cli_curve_out.csv";
  const RunResult res = run_cli("curve --data " + csv +
                                " --methods proposed --bootstrap 50 --seed 3 --out " + out);
  CHECK(res.exit_code == 0);
  const std::string curve = read_file(out);
  // two event ratios -> header + 2 rows
  int lines = 0;
  for (const char c : curve) lines += (c == '\n');
  CHECK(lines == 3);
  CHECK(curve.find("method,r,estimate,ci_low,ci_high") == 0);
  CHECK(curve.find("proposed,1.2") != std::string::npos);
  CHECK(curve.find("proposed,1.8") != std::string::npos);
  std::remove(csv.c_str());
  std::remove(out.c_str());
}

TEST_CASE("cli: restrict flag increases censoring") {
  const std::string csv = write_temp("restrict.csv", kToyCsv);
  const RunResult full = run_cli("estimate --data " + csv + " --bootstrap 60 --seed 2");
  const RunResult capped =
      run_cli("estimate --data " + csv + " --bootstrap 60 --seed 2 --restrict 6");
  CHECK(full.exit_code == 0);
  CHECK(capped.exit_code == 0);
  CHECK(full.output.find("censoring 25.0%") != std::string::npos);
  CHECK(capped.output.find("censoring 50.0%") != std::string::npos);
  std::remove(csv.c_str());
}

TEST_CASE("cli: simulate runs a tiny grid from a config file") {
  const std::string cfg = write_temp("sim.cfg",
                                     "sigma = 0.5\n"
                                     "R = 1.0\n"
                                     "corr = 0.5\n"
                                     "censoring = 0.2\n"
                                     "n = 15\n"
                                     "thresholds = 1.3\n"
                                     "replicates = 4\n"
                                     "bootstrap = 8\n"
                                     "seed = 11\n"
                                     "calibration_samples = 20000\n"
                                     "truth_draws = 100000\n");
  const std::string out = "cli_sim_out.csv";
  const RunResult res = run_cli("simulate --config " + cfg + " --quiet --out " + out);
  CHECK(res.exit_code == 0);
  const std::string table = read_file(out);
  CHECK(table.find("sigma,R,corr,censoring,n,r,method,truth,bias,se,see,cp") == 0);
  CHECK(table.find("proposed") != std::string::npos);
  CHECK(table.find("loglogistic") != std::string::npos);
  std::remove(cfg.c_str());
  std::remove(out.c_str());
}

TEST_CASE("cli: calibrate prints alpha and tau") {
  const RunResult res =
      run_cli("calibrate --sigma 0.5 --corr 0.5 --cens 0.2 --samples 20000");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("alpha = ") != std::string::npos);
  CHECK(res.output.find("tau = ") != std::string::npos);
}
