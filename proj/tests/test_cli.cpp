#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "starspec/cli.hpp"

using starspec::cli::run;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("starspec_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("help and input errors") {
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"solve", "--help"}).code == 0);

  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"solve", "--bogus"},
           {"solve", "--h", "-1"},
           {"solve", "--k", "0"},
           {"solve", "--graph", "broken", "--theta", "2.0"},
           {"solve", "--model", "nonsense"},
           {"--config", "/nonexistent/starspec.toml", "solve"},
           {"sweep-theta", "--thetas", "0.3,2.0"},
       }) {
    const auto r = call(args);
    CHECK(r.code == 2);
    CHECK(lines(r.err) == 1);
  }
}

TEST_CASE("solve on the line: nothing below -4") {
  const auto dir = scratch("solve");
  const auto r = call({"solve", "--graph", "line", "--alpha", "-1", "--R", "6", "--h", "0.15", "--k", "4", "--out",
                       dir.string(), "--dump"});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "solve.json");
  CHECK(j["provenance"]["count_below_threshold"] == 0);
  CHECK(j["provenance"]["threshold"] == -4.0);
  CHECK(j["config"]["graph"] == "line");
  CHECK(j["config"]["mesh"]["R"] == 6.0);
  CHECK(j["config"]["k"] == 4);
  for (const char* f : {"solve.csv", "mesh.txt", "A.txt", "M.txt"}) CHECK(fs::exists(dir / f));
  fs::remove_all(dir);
}

TEST_CASE("weyl example: second quotient smaller") {
  const auto dir = scratch("weyl");
  REQUIRE(call({"weyl", "--k", "0", "--n", "10,100", "--out", dir.string()}).code == 0);
  std::ifstream is(dir / "weyl.csv");
  std::string header, a, b;
  std::getline(is, header);
  std::getline(is, a);
  std::getline(is, b);
  auto quotient = [](const std::string& row) {
    std::stringstream ss(row);
    std::string cell;
    for (int i = 0; i < 5; ++i) std::getline(ss, cell, ',');
    return std::stod(cell);
  };
  CHECK(header.rfind("n,a,norm_squared,residual_squared,quotient", 0) == 0);
  CHECK(quotient(b) < quotient(a));

  // An unattainable decay bound makes the run fail with exit code 1.
  CHECK(call({"weyl", "--k", "0", "--n", "10,100", "--max-ratio", "0.001", "--out", dir.string()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("degrees and radians agree") {
  const auto d1 = scratch("rad"), d2 = scratch("deg");
  REQUIRE(call({"solve", "--theta", "0.4", "--R", "4", "--h", "0.4", "--k", "2", "--out", d1.string()}).code == 0);
  std::ostringstream deg;
  deg.precision(17);
  deg << 0.4 * 180.0 / starspec::kPi;
  REQUIRE(call({"--degrees", "solve", "--theta", deg.str(), "--R", "4", "--h", "0.4",
                "--k", "2", "--out", d2.string()})
              .code == 0);
  const auto a = read_json(d1 / "solve.json"), b = read_json(d2 / "solve.json");
  CHECK(b["config"]["theta"].get<double>() == doctest::Approx(0.4).epsilon(1e-12));
  std::ifstream ia(d1 / "solve.csv"), ib(d2 / "solve.csv");
  std::string la, lb;
  std::getline(ia, la);
  std::getline(ib, lb);
  std::getline(ia, la);
  std::getline(ib, lb);
  CHECK(std::stod(la.substr(2)) == doctest::Approx(std::stod(lb.substr(2))).epsilon(1e-10));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("config file with flag override and output redirection") {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "[solve]\ngraph = \"line\"\nR = 5\nh = 0.5\nk = 2\n";
  }
  const auto out = dir / "out";
  REQUIRE(call({"--config", (dir / "run.toml").string(), "solve", "--h", "0.25", "--out", out.string()}).code == 0);
  const auto j = read_json(out / "solve.json");
  CHECK(j["config"]["graph"] == "line");
  CHECK(j["config"]["mesh"]["R"] == 5.0);
  CHECK(j["config"]["mesh"]["h"] == 0.25);  // flag wins
  CHECK(j["config"]["k"] == 2);

  {
    std::ofstream bad(dir / "bad.toml");
    bad << "[solve]\nunknown_key = 1\n";
  }
  CHECK(call({"--config", (dir / "bad.toml").string(), "solve"}).code == 2);

  const auto env = dir / "env";
  setenv("STARSPEC_OUT", env.string().c_str(), 1);
  const auto r = call({"weyl", "--n", "10,160", "--out", (dir / "ignored").string()});
  unsetenv("STARSPEC_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(env / "weyl.json"));
  CHECK_FALSE(fs::exists(dir / "ignored"));
  fs::remove_all(dir);
}

TEST_CASE("experiment subcommands on coarse meshes") {
  const auto dir = scratch("subcommands");
  const std::string out = dir.string();
  CHECK(call({"scale-check", "--model", "robin", "--theta", "0.5", "--factors", "2,3", "--R", "3", "--h", "0.3",
              "--out", out})
            .code == 0);
  CHECK(call({"threshold", "--graph", "line", "--R-ladder", "3,4,5", "--h", "0.3", "--k", "4", "--out", out}).code ==
        0);
  CHECK(call({"compare", "--thetas", "0.3", "--n", "2", "--R", "4", "--h", "0.5", "--out", out}).code == 0);
  CHECK(call({"converge", "--model", "robin", "--theta", "0.5", "--R", "3", "--R-ladder", "2,2.5,3", "--h-ladder",
              "0.4,0.2,0.1", "--k", "1", "--out", out})
            .code <= 1);
  for (const char* f : {"scale.csv", "threshold.json", "comparison.csv", "convergence.csv"}) CHECK(fs::exists(dir / f));
  fs::remove_all(dir);
}
