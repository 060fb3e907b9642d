#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("maxquad_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MAXQUAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("cli end to end: solve twice is byte-identical, subcommands work") {
  TempDir tmp;
  const fs::path config = tmp.path / "run.ini";
  write(config,
        "[sampling]\nN_in = 40\nN_rg = 80\nN_x = 4\nN_w = 20\nmethod = 2\n"
        "[payoff]\nn_forms = 40\nc_kink = 0.5\ntarget_eps = 1.2\n"
        "[run]\nseed = 5\n");

  const fs::path out_a = tmp.path / "a";
  const fs::path out_b = tmp.path / "b";
  REQUIRE(run_cli("solve " + config.string() + " --out-dir " + out_a.string() +
                  " --threads 1") == 0);
  REQUIRE(run_cli("solve " + config.string() + " --out-dir " + out_b.string() +
                  " --threads 2") == 0);
  const std::string forms_a = slurp(out_a / "value_forms.csv");
  CHECK(!forms_a.empty());
  CHECK(forms_a == slurp(out_b / "value_forms.csv"));
  CHECK(slurp(out_a / "manifest.txt").find("N_in=40") != std::string::npos);

  SUBCASE("oracle subcommand writes the grid") {
    REQUIRE(run_cli("oracle " + config.string() + " --rho 0.8 --nodes 32 --out-dir " +
                    (tmp.path / "oracle").string()) == 0);
    const std::string csv = slurp(tmp.path / "oracle" / "oracle_rho_0.8.csv");
    CHECK(csv.rfind("xi1,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 62);  // header + 61 points
  }

  SUBCASE("dump-payoff writes the approximation report") {
    REQUIRE(run_cli("dump-payoff " + config.string() + " --out-dir " +
                    (tmp.path / "payoff").string()) == 0);
    CHECK(slurp(tmp.path / "payoff" / "payoff.csv").rfind("s,psi,approx\n", 0) == 0);
    CHECK(slurp(tmp.path / "payoff" / "payoff_report.txt").find("achieved_eps=") !=
          std::string::npos);
  }

  SUBCASE("bad config exits nonzero") {
    const fs::path broken = tmp.path / "broken.ini";
    write(broken, "[sampling]\nN_rg = 123\n");
    CHECK(run_cli("solve " + broken.string()) != 0);
    CHECK(run_cli("solve " + (tmp.path / "missing.ini").string()) != 0);
  }
}
