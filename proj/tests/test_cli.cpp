// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"

#include "egb/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result egb_cli(const std::string& args, const fs::path& dir) {
  const auto log = dir / "cli.log";
  const std::string cmd = std::string(EGB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate accepts the worked example") {
    const auto dir = egb::test::scratch_dir("cli-validate");
    const auto r = egb_cli("validate " + egb::test::data_path("promo_example.json").string(), dir);
    CHECK(r.code == 0);
    CHECK(r.output.find("ok (1 cases)") != std::string::npos);
  }

  TEST_CASE("usage and input errors exit with 2") {
    const auto dir = egb::test::scratch_dir("cli-errors");
    CHECK(egb_cli("", dir).code == 2);
    CHECK(egb_cli("run --out x", dir).code == 2);
    CHECK(egb_cli("frobnicate", dir).code == 2);

    write(dir / "bad.json", R"({"strategy": "egb_sampling", "generator": {"n_cases": 3}, "m": 0})");
    auto r = egb_cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.output.find("'m'") != std::string::npos);

    write(dir / "cases.json", R"([{"id": "x", "query": "q"}])");
    r = egb_cli("validate " + (dir / "cases.json").string(), dir);
    CHECK(r.code == 2);

    write(dir / "remote.json", R"({"backend": "remote", "generator": {"n_cases": 1}, "endpoint": "http://127.0.0.1:1/v1/chat/completions", "retries": 0, "timeout_s": 1})");
    r = egb_cli("run --config " + (dir / "remote.json").string() + " --out " + (dir / "remote-out").string(), dir);
    CHECK(r.code == 1);
  }

  TEST_CASE("generate, run and aggregate end to end") {
    const auto dir = egb::test::scratch_dir("cli-flow");
    write(dir / "gen.json", R"({"seed": 5, "n_cases": 12, "fault_profile": [{"select": "random", "count": 2, "p_correct": 0.5}]})");
    auto r = egb_cli("generate --config " + (dir / "gen.json").string() + " --out " + (dir / "suite").string(), dir);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "suite" / "cases.json"));
    CHECK(fs::exists(dir / "suite" / "oracle.json"));

    write(dir / "run.json",
          R"({"strategy": "egb_sampling", "cases": "suite/cases.json", "oracle": "suite/oracle.json", "seeds": 2})");
    r = egb_cli("run --config " + (dir / "run.json").string() + " --out " + (dir / "run").string() + " --workers 2",
                dir);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("egb_sampling: rows=24") != std::string::npos);
    const auto rows = egb::read_rows(dir / "run" / egb::kRowsFile);
    CHECK(rows.size() == 24);

    fs::remove(dir / "run" / "summary.csv");
    r = egb_cli("aggregate --out " + (dir / "run").string() + " --bins 4", dir);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "run" / "summary.csv"));

    r = egb_cli("validate --config " + (dir / "run.json").string(), dir);
    CHECK(r.code == 0);
  }
}
