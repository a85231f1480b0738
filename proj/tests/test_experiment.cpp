// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"

#include "egb/error.hpp"
#include "egb/experiment.hpp"

using namespace egb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json base_config() {
  return json{{"strategy", "egb_sampling"},
              {"generator", {{"seed", 31}, {"n_cases", 30}, {"fault_profile", {{{"select", "random"}, {"count", 2}, {"p_correct", 0.5}}}}}},
              {"seeds", 3}};
}

RunConfig config_of(const json& doc) { return run_config_from_json(doc); }

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing: defaults, seeds and sweep") {
    const auto cfg = config_of(base_config());
    CHECK(cfg.strategy == Strategy::EgbSampling);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(cfg.m == 10);
    CHECK(cfg.search_config(7).budget.global_limit == 4);
    CHECK(cfg.search_config(7).seed == 7);

    auto doc = base_config();
    doc["seeds"] = {5, 9};
    doc["B"] = 50;
    doc["strategy"] = "egb_logits";
    doc["sweep"] = {{"param", "m"}, {"values", {1, 3, 5, 10, 20}}};
    const auto c2 = config_of(doc);
    CHECK(c2.seeds == std::vector<std::uint64_t>{5, 9});
    CHECK(c2.search_config(0).budget.global_limit == 50);
    CHECK(c2.search_config(0).mode == EntropyMode::Logits);
    REQUIRE(c2.sweep);
    CHECK(c2.sweep->values.size() == 5);
    CHECK(config_of(run_config_to_json(c2)).seeds == c2.seeds);
    CHECK(with_param(c2, "b", 3).search_config(0).budget.global_limit == 2);
    CHECK(with_param(c2, "tau", 0.05).tau == 0.05);
  }

  TEST_CASE("config errors name the key") {
    auto expect_error = [](json doc, const std::string& key) {
      try {
        run_config_from_json(doc);
        FAIL("expected ConfigError for " << key);
      } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(key) != std::string::npos);
      }
    };
    auto doc = base_config();
    doc["strategy"] = "beam";
    expect_error(doc, "strategy");
    doc = base_config();
    doc["m"] = 0;
    expect_error(doc, "m");
    doc = base_config();
    doc["k"] = 101;
    expect_error(doc, "k");
    doc = base_config();
    doc["tau"] = 2.0;
    expect_error(doc, "tau");
    doc = base_config();
    doc["seeds"] = {1, 1};
    expect_error(doc, "seeds");
    doc = base_config();
    doc["cases"] = "x.json";
    expect_error(doc, "cases");
    doc = base_config();
    doc["budget"] = 3;
    expect_error(doc, "budget");
    doc = base_config();
    doc["sweep"] = {{"param", "m"}, {"values", {1.5}}};
    expect_error(doc, "m");
    doc = base_config();
    doc["backend"] = "cloud";
    expect_error(doc, "backend");
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  }

  TEST_CASE("remote backend without an endpoint is a config error") {
    auto doc = base_config();
    doc["backend"] = "remote";
    const auto cfg = config_of(doc);
    if (std::getenv("EGB_REMOTE_ENDPOINT") == nullptr) CHECK_THROWS_AS(make_policy(cfg, OracleSpec{}), ConfigError);
  }

  TEST_CASE("noiseless greedy run scores 1.0 and writes every output") {
    json doc = {{"strategy", "greedy"}, {"generator", {{"seed", 2}, {"n_cases", 50}}}, {"seeds", 2}};
    const auto cfg = config_of(doc);
    const auto inputs = load_inputs(cfg);
    const auto dir = egb::test::scratch_dir("greedy-run");
    const auto rep = run_experiment(cfg, inputs, dir);
    CHECK(rep.execution_success.mean == 1.0);
    CHECK(rep.tool_match.mean == 1.0);
    CHECK(rep.rows == 100);
    CHECK(rep.seeds == 2);
    for (const char* f : {"config.json", "rows.jsonl", "report.json", "summary.csv", "entropy_error.csv", "timing.json"}) {
      CHECK(fs::exists(dir / f));
    }
    CHECK_FALSE(fs::exists(dir / "shards"));
    CHECK(read_rows(dir / kRowsFile).size() == 100);
  }

  TEST_CASE("config files resolve paths against their directory") {
    const auto dir = egb::test::scratch_dir("config-file");
    fs::copy_file(egb::test::data_path("promo_example.json"), dir / "cases.json");
    {
      std::ofstream out(dir / "run.json");
      out << R"({"strategy": "egb_sampling", "cases": "cases.json", "seeds": [4]})";
    }
    const auto cfg = load_run_config(dir / "run.json");
    CHECK(cfg.cases_path == dir / "cases.json");
    const auto inputs = load_inputs(cfg);
    REQUIRE(inputs.cases.size() == 1);
    CHECK(run_experiment(cfg, inputs, dir / "out").execution_success.mean == 1.0);
  }

  TEST_CASE("parallel workers produce byte-identical rows") {
    auto cfg = config_of(base_config());
    const auto inputs = load_inputs(cfg);
    const auto serial_dir = egb::test::scratch_dir("serial");
    const auto parallel_dir = egb::test::scratch_dir("parallel");
    run_experiment(cfg, inputs, serial_dir);
    cfg.workers = 4;
    run_experiment(cfg, inputs, parallel_dir);
    CHECK(slurp(serial_dir / kRowsFile) == slurp(parallel_dir / kRowsFile));
    CHECK(slurp(serial_dir / "report.json") == slurp(parallel_dir / "report.json"));
    CHECK(slurp(serial_dir / "config.json") == slurp(parallel_dir / "config.json"));
  }

  TEST_CASE("resume after an interrupted run skips finished rows and matches a clean run") {
    const auto cfg = config_of(base_config());
    const auto inputs = load_inputs(cfg);
    const auto dir = egb::test::scratch_dir("resume");
    run_experiment(cfg, inputs, dir);
    const auto clean = slurp(dir / kRowsFile);

    // Rebuild the state a killed run leaves behind: a shard with finished
    // rows and a half-written last line.
    std::vector<std::string> lines;
    {
      std::istringstream in(clean);
      for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    fs::remove(dir / kRowsFile);
    fs::create_directories(dir / "shards");
    {
      std::ofstream shard(dir / "shards" / "worker-0.jsonl");
      for (std::size_t i = 0; i < 40; ++i) shard << lines[i] << "\n";
      shard << lines[40].substr(0, lines[40].size() / 2);
    }
    RunOptions opts;
    opts.resume = true;
    run_experiment(cfg, inputs, dir, opts);
    CHECK(slurp(dir / kRowsFile) == clean);
    const auto timing = json::parse(slurp(dir / "timing.json"));
    CHECK(timing["rows_resumed"] == 40);
    CHECK(timing["rows_executed"] == lines.size() - 40);

    // A corrupt line before the end is an error naming the shard.
    fs::create_directories(dir / "shards");
    {
      std::ofstream shard(dir / "shards" / "worker-1.jsonl");
      shard << "{broken\n" << lines[0] << "\n";
    }
    try {
      run_experiment(cfg, inputs, dir, opts);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("worker-1.jsonl") != std::string::npos);
    }
    fs::remove_all(dir / "shards");

    auto other = cfg;
    other.m = 3;
    CHECK_THROWS_AS(run_experiment(other, inputs, dir, opts), ConfigError);
  }

  TEST_CASE("sweep writes one directory per value and a summary table") {
    auto doc = base_config();
    doc["seeds"] = 1;
    doc["sweep"] = {{"param", "m"}, {"values", {1, 3, 5, 10, 20}}};
    const auto cfg = config_of(doc);
    const auto inputs = load_inputs(cfg);
    const auto dir = egb::test::scratch_dir("sweep");
    const auto reports = run_sweep(cfg, inputs, dir);
    CHECK(reports.size() == 5);
    for (const char* v : {"m=1", "m=3", "m=5", "m=10", "m=20"}) CHECK(fs::exists(dir / v / kRowsFile));
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(csv, l);) lines.push_back(l);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0].rfind("param,value,rows", 0) == 0);
    CHECK(lines[1].rfind("m,1,", 0) == 0);
    CHECK(lines[5].rfind("m,20,", 0) == 0);
    CHECK(reports[0].total_cost.generation_calls < reports[4].total_cost.generation_calls);
  }

  TEST_CASE("every strategy runs through the driver") {
    for (const char* s : {"greedy", "self_consistency", "egb_sampling", "egb_logits", "random_branch"}) {
      auto doc = base_config();
      doc["strategy"] = s;
      doc["seeds"] = 1;
      const auto cfg = config_of(doc);
      const auto inputs = load_inputs(cfg);
      const auto dir = egb::test::scratch_dir(std::string("strategy-") + s);
      const auto rep = run_experiment(cfg, inputs, dir);
      CHECK(rep.rows == 30);
      CHECK(read_rows(dir / kRowsFile).front().strategy == s);
    }
  }
}
