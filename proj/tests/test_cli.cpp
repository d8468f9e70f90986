// Exit-code contract regression: 0 certified, 2 honest infeasibility,
// 1 any error.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  fs::path log = fs::temp_directory_path() / "nnsos_cli_test.log";
  std::string cmd =
      std::string(NNSOS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

struct Fixture {
  fs::path dir;
  Fixture() {
    dir = fs::temp_directory_path() / "nnsos_cli_fixture";
    fs::create_directories(dir);
    std::ofstream(dir / "net.json") << R"({
  "activation": "tanh",
  "layers": [
    {"W": [[0.1], [-0.1]], "b": [0.0, 0.0]},
    {"W": [[0.2, -0.2]], "b": [0.0]}
  ]
})";
    std::ofstream(dir / "stable.toml") << R"(
states = ["z1"]
inputs = ["u"]
dynamics = ["-z1 + u"]
network = "net.json"
[region]
lower = [-1.0]
upper = [1.0]
[degrees]
v = 2
[options]
soundness_samples = 1000
)";
    std::ofstream(dir / "unstable.toml") << R"(
states = ["z1"]
inputs = ["u"]
dynamics = ["z1 + u"]
network = "net.json"
[region]
lower = [-1.0]
upper = [1.0]
[options]
max_shrink = 1
)";
    std::ofstream(dir / "typo.toml") << R"(
states = ["z1"]
inputs = ["u"]
dynamics = ["-zl + u"]
network = "net.json"
[region]
lower = [-1.0]
upper = [1.0]
)";
  }
  std::string p(const char* name) { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("exit codes: 0 certified, 2 infeasible, 1 error") {
  Fixture fx;
  std::string cert = fx.p("stable.cert.json");
  CHECK(run("certify " + fx.p("stable.toml") + " -o " + cert) == 0);
  CHECK(run("certify " + fx.p("unstable.toml") + " -o " + fx.p("u.json")) == 2);
  CHECK(run("certify " + fx.p("typo.toml")) == 1);
  CHECK(run("certify /no/such/file.toml") == 1);
  CHECK(run("roa /no/such/cert.json " + fx.p("stable.toml")) == 1);
  CHECK(run("check-cert " + cert + " " + fx.p("stable.toml") + " -n 500") == 0);
  CHECK(run("dump-constraints " + fx.p("stable.toml")) == 0);
  CHECK(run("simulate " + fx.p("stable.toml") + " --x0 0.3 -o " +
            fx.p("t.csv")) == 0);
  // sdpa-export produces the problem file and stops with success.
  CHECK(run("certify " + fx.p("stable.toml") + " --solver sdpa-export -o " +
            fx.p("prob.dat-s")) == 0);
  CHECK(fs::exists(fx.p("prob.dat-s")));
}
