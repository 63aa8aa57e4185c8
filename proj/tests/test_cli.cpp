#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssep/io_util.hpp"

namespace fs = std::filesystem;
using namespace ssep;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  std::string cmd = std::string(SSEP_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::path dir = fs::temp_directory_path() / "ssep_cli_test";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}
}  // namespace

TEST_CASE("config parser") {
  Config cfg = Config::parse_text(
      "top = 3\n"
      "[params]\n"
      "N = 64   # lattice half-width\n"
      "rho_minus = 0.2\n"
      "name = \"quoted value\"\n"
      "list = 1.5 2.5 -3\n");
  CHECK(cfg.get_int("", "top", 0) == 3);
  CHECK(cfg.get_int("params", "N", 0) == 64);
  CHECK(cfg.require_num("params", "rho_minus") == doctest::Approx(0.2));
  CHECK(cfg.get("params", "name", "") == "quoted value");
  CHECK(cfg.get_list("params", "list").size() == 3);
  CHECK_THROWS(cfg.require("params", "missing"));
  CHECK(fnv1a64(cfg.canonical_text()) == fnv1a64(cfg.canonical_text()));
}

TEST_CASE("pde run emits the steady kernel when the bias is zero") {
  fs::path cfg = write_config("pde.cfg",
                              "[params]\nN = 8\nrho_minus = 0.2\nrho_plus = 0.8\n"
                              "[grid]\nM = 48\n"
                              "[bias]\nkind = zero\n");
  fs::path out = fs::temp_directory_path() / "ssep_cli_test" / "pde_out";
  REQUIRE(run_tool("pde --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "kh.csv"));
  CHECK(fs::exists(out / "gh.csv"));
  CHECK(fs::exists(out / "manifest.json"));
  std::string rep = slurp(out / "report.json");
  // k0_max_diff close to zero for the unbiased solve
  auto pos = rep.find("\"k0_max_diff\"");
  REQUIRE(pos != std::string::npos);
  double v = std::stod(rep.substr(rep.find(':', pos) + 1));
  CHECK(v < 5e-3);
}

TEST_CASE("dv run reports the reversible oracle agreement") {
  fs::path cfg = write_config("dv.cfg",
                              "[run]\nseed = 5\n"
                              "[dv]\nN_list = 50 100\n");
  fs::path out = fs::temp_directory_path() / "ssep_cli_test" / "dv_out";
  REQUIRE(run_tool("dv --config " + cfg.string() + " --out " + out.string()) == 0);
  std::string rep = slurp(out / "report.json");
  auto pos = rep.find("dv_reversible_vs_variational_worst");
  REQUIRE(pos != std::string::npos);
  double v = std::stod(rep.substr(rep.find(':', pos) + 1));
  CHECK(v <= 1e-6);
}

TEST_CASE("identical config and seed give identical data bytes") {
  fs::path cfg = write_config("sim.cfg",
                              "[params]\nN = 8\nrho_minus = 0.2\nrho_plus = 0.8\n"
                              "[grid]\nM = 32\n"
                              "[bias]\nkind = zero\n"
                              "[simulate]\nT = 5\nburnin = 1\nstride = 1\nbatches = 8\n");
  fs::path out1 = fs::temp_directory_path() / "ssep_cli_test" / "sim1";
  fs::path out2 = fs::temp_directory_path() / "ssep_cli_test" / "sim2";
  REQUIRE(run_tool("simulate --seed 42 --config " + cfg.string() + " --out " + out1.string()) == 0);
  REQUIRE(run_tool("simulate --seed 42 --config " + cfg.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out1 / "khat.csv") == slurp(out2 / "khat.csv"));
  CHECK(slurp(out1 / "occupation.csv") == slurp(out2 / "occupation.csv"));
  CHECK(slurp(out1 / "series.csv") == slurp(out2 / "series.csv"));
  CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
  // a different seed must change the data
  fs::path out3 = fs::temp_directory_path() / "ssep_cli_test" / "sim3";
  REQUIRE(run_tool("simulate --seed 43 --config " + cfg.string() + " --out " + out3.string()) == 0);
  CHECK(slurp(out1 / "khat.csv") != slurp(out3 / "khat.csv"));
}

TEST_CASE("time flags override the config") {
  fs::path cfg = write_config("sim_t.cfg",
                              "[params]\nN = 8\nrho_minus = 0.2\nrho_plus = 0.8\n"
                              "[grid]\nM = 32\n"
                              "[bias]\nkind = zero\n"
                              "[simulate]\nT = 50\nburnin = 5\nstride = 1\nbatches = 4\n");
  fs::path out = fs::temp_directory_path() / "ssep_cli_test" / "sim_t";
  REQUIRE(run_tool("simulate --seed 1 --T 2 --burnin-T 0.5 --config " + cfg.string() +
                   " --out " + out.string()) == 0);
  std::string rep = slurp(out / "report.json");
  auto pos = rep.find("\"T\"");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(rep.substr(rep.find(':', pos) + 1)) == doctest::Approx(2.0));
}

TEST_CASE("invalid configs are rejected with a nonzero exit") {
  fs::path cfg = write_config("bad.cfg", "[bias]\nkind = unknown-kind\n");
  fs::path out = fs::temp_directory_path() / "ssep_cli_test" / "bad_out";
  CHECK(run_tool("simulate --config " + cfg.string() + " --out " + out.string()) != 0);
  CHECK(run_tool("simulate --config /nonexistent/xx.cfg --out " + out.string()) != 0);
}
