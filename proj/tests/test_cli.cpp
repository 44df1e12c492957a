#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace rumorbd;
using Catch::Matchers::WithinAbs;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "rumorbd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows(const std::string& csv_text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  REQUIRE(it != header.end());
  return static_cast<std::size_t>(it - header.begin());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rumorbd_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(RUMORBD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kData = std::string(RUMORBD_SOURCE_DIR) + "/data/";

}  // namespace

TEST_CASE("moments subcommand") {
  const auto r = run({"moments", "--rates", "constant:1,1", "--j", "1", "--grid", "0:5:100"});
  REQUIRE(r.code == 0);
  auto t = rows(r.out);
  CHECK(t.size() == 101);
  column(t[0], "r_index");

  const auto exact = run({"moments", "--rates", "constant:1,1", "--j", "1", "--grid", "0:5:101"});
  t = rows(exact.out);
  const auto ti = column(t[0], "t");
  const auto fi = column(t[0], "fano_x");
  REQUIRE(t[21][ti] == "1");
  CHECK_THAT(std::stod(t[21][fi]), WithinAbs(2.0, 1e-12));
}

TEST_CASE("absorb subcommand") {
  const auto r = run({"absorb", "--rates", "constant:2,1", "--j", "3", "--grid", "0:20:50"});
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  CHECK(t.size() == 51);
  CHECK_THAT(std::stod(t.back()[1]), WithinAbs(0.125, 1e-6));
}

TEST_CASE("simulate subcommand") {
  const auto r = run({"simulate", "--rates", R"({"kind":"constant","lambda":1,"mu":1})", "--j", "1", "--horizon", "5",
                      "--replicates", "1000", "--seed", "42"});
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 52);
  CHECK(t[0][0] == "t");
  CHECK(t[1][1] == "1");

  const auto tr = run({"simulate", "--rates", "constant:1,1", "--horizon", "5", "--trajectory", "--seed", "3"});
  REQUIRE(tr.code == 0);
  CHECK(rows(tr.out)[0] == std::vector<std::string>{"time", "event", "n", "k"});
}

TEST_CASE("the same seed reproduces the same file") {
  const auto a = scratch("sim_a.csv");
  const auto b = scratch("sim_b.csv");
  const std::string args = "simulate --rates cosine:1.2,1,0.5,2 --j 2 --horizon 4 --replicates 3000 --seed 9 --out ";
  REQUIRE(shell(args + a.string()) == 0);
  REQUIRE(shell("--threads 1 " + args + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).size() > 100);
}

TEST_CASE("exit codes") {
  CHECK(shell("simulate --rates constant:1,1 --j 0") == 2);
  CHECK(shell("frobnicate") == 2);
  CHECK(shell("moments --rates constant:1") == 2);
  CHECK(shell("moments --rates constant:1,1 --grid 3:1:10") == 2);
  CHECK(shell("fit --data /no/such/file.csv") == 4);
  CHECK(shell("oracle --rates constant:3,0.5 --t 4 --n-max 10 --k-max 10") == 3);
  CHECK(shell("--help") == 0);
  CHECK(run({"moments"}).code == 2);
}

TEST_CASE("bad data is a data error") {
  const auto p = scratch("bad.csv");
  std::ofstream(p) << "t,count\n0,5\n1,3\n";
  const auto r = run({"fit", "--data", p.string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("nondecreasing") != std::string::npos);
}

TEST_CASE("oracle subcommand") {
  const auto r = run({"oracle", "--rates", "constant:1,1", "--t", "1", "--n-max", "40", "--k-max", "40"});
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  CHECK(t[0] == std::vector<std::string>{"n", "k", "p"});
  CHECK(t[1][0] == "0");
  CHECK(t[1][1] == "1");
  CHECK_THAT(std::stod(t[1][2]), WithinAbs(0.5 * (1.0 - std::exp(-2.0)), 1e-6));
}

TEST_CASE("fit subcommand") {
  const auto js = scratch("sel.json");
  const auto r = run({"fit", "--data", kData + "ds1_two_waves.csv", "--data", kData + "ds3_gompertz.csv",
                      "--objective", "mse", "--families", "all", "--budget", "3000", "--threads", "1", "--json",
                      js.string()});
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 17);
  const auto fam = column(t[0], "family");
  const auto win = column(t[0], "winner");
  std::vector<std::string> winners;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i][win] == "1") winners.push_back(t[i][fam]);
  }
  CHECK(winners == std::vector<std::string>{"multisig_logistic", "gompertz"});
  const auto j = nlohmann::json::parse(slurp(js));
  REQUIRE(j.size() == 2);
  CHECK(j[0]["winner"] == "multisig_logistic");
  CHECK(j[0]["fits"].size() == 8);
  CHECK(run({"fit", "--data", kData + "ds3_gompertz.csv", "--objective", "l2"}).code == 2);
}

TEST_CASE("reconstruct-y subcommand") {
  const auto r = run({"reconstruct-y", "--curve", R"({"family":"gompertz","alpha":3,"beta":2,"j":1,"rho":2})",
                      "--rho", "2", "--grid", "0:40:5"});
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 6);
  CHECK(t[0] == std::vector<std::string>{"t", "rho", "m_y", "log_m_y", "overflow"});
  CHECK(t[1][2] == "0");
  CHECK_THAT(std::stod(t[5][2]), WithinAbs(std::exp(3.0) - 1.0, 1e-8));

  const auto fitted = run({"reconstruct-y", "--data", kData + "ds3_gompertz.csv", "--family", "gompertz", "--rho",
                           "1.5,3", "--budget", "2000"});
  REQUIRE(fitted.code == 0);
  CHECK(rows(fitted.out).size() == 1 + 2 * 101);
  CHECK(fitted.err.find("gompertz") != std::string::npos);
  CHECK(run({"reconstruct-y", "--rho", "2"}).code == 2);
}

TEST_CASE("config file values sit between flags and defaults") {
  const auto cfg = scratch("run.toml");
  std::ofstream(cfg) << "[moments]\nrates = \"constant:1,1\"\nj = 3\ngrid = \"0:1:3\"\n";
  const auto from_file = run({"--config", cfg.string(), "moments"});
  REQUIRE(from_file.code == 0);
  auto t = rows(from_file.out);
  REQUIRE(t.size() == 4);
  CHECK(t[3][column(t[0], "m_x")] == "3");

  const auto flag_wins = run({"--config", cfg.string(), "moments", "--j", "2"});
  REQUIRE(flag_wins.code == 0);
  t = rows(flag_wins.out);
  CHECK(t[3][column(t[0], "m_x")] == "2");
}
