// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration and the experiment driver behind the command line.
//
// Run config (flat JSON; every key optional except the case source):
//   {"strategy": "egb_sampling",            greedy | self_consistency | egb_sampling | egb_logits | random_branch
//    "backend": "oracle",                   oracle | remote
//    "cases": "cases.json",                 or "generator": {<generator config>}
//    "oracle": "oracle.json",               sidecar for the oracle backend (generated when omitted)
//    "seeds": [0, 1, 2],                    or a count: "seeds": 3
//    "m": 10, "b": 5, "B": null, "B_s": 5, "tau": 0.01, "k": 50,
//    "temperature": 1.0, "max_tokens": 256, "timeout_s": 60, "retries": 3,
//    "model": "", "endpoint": "", "digit_path": false, "workers": 1, "bins": 5,
//    "sweep": {"param": "m", "values": [1, 3, 5, 10, 20]}}
// Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "egb/metrics.hpp"
#include "egb/oracle.hpp"
#include "egb/search.hpp"
#include "egb/synthgen.hpp"

namespace egb {

enum class Strategy { Greedy, SelfConsistency, EgbSampling, EgbLogits, RandomBranch };

std::string to_string(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& text);

struct SweepSpec {
  std::string param;  // m | b | B | B_s | tau | k
  std::vector<double> values;
};

struct RunConfig {
  Strategy strategy = Strategy::EgbSampling;
  std::string backend = "oracle";
  std::filesystem::path cases_path;
  std::optional<GenConfig> generator;
  std::filesystem::path oracle_path;
  std::vector<std::uint64_t> seeds = {0};
  int m = 10;
  int b = 5;                         // trajectory cap, first pass included
  std::optional<int> global_limit;   // B; overrides b - 1 when set
  int per_step_limit = 5;            // B_s
  double tau = 0.01;
  std::size_t k = 50;
  double temperature = 1.0;
  int max_tokens = 256;
  double timeout_s = 60.0;
  int retries = 3;
  std::string model;
  std::string endpoint;  // falls back to EGB_REMOTE_ENDPOINT
  bool digit_path = false;
  int workers = 1;
  int bins = 5;
  std::optional<SweepSpec> sweep;

  SearchConfig search_config(std::uint64_t seed) const;
};

/// Throws ConfigError listing the offending key.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

/// Copy of `config` with one sweep parameter set to `value`.
RunConfig with_param(RunConfig config, const std::string& param, double value);

struct Inputs {
  std::vector<Case> cases;
  OracleSpec oracle;
};

/// Loads or generates the cases and the oracle sidecar.
Inputs load_inputs(const RunConfig& config);

std::unique_ptr<Policy> make_policy(const RunConfig& config, const OracleSpec& oracle);

/// Runs the configured strategy on one case.
SearchOutcome run_strategy(const RunConfig& config, const Case& c, Policy& policy, std::uint64_t seed);

struct RunOptions {
  bool resume = false;
  /// Use the serial kernel even when workers > 1.
  bool serial = false;
};

/// Writes config.json, rows.jsonl, report.json, summary.csv,
/// entropy_error.csv and timing.json into `out_dir`. With resume, rows
/// already present (merged or in worker shards) are kept and skipped.
RunReport run_experiment(const RunConfig& config, const Inputs& inputs, const std::filesystem::path& out_dir,
                         const RunOptions& options = {});

/// One run per sweep value in <out_dir>/<param>=<value>/, plus sweep.csv.
std::vector<RunReport> run_sweep(const RunConfig& config, const Inputs& inputs, const std::filesystem::path& out_dir,
                                 const RunOptions& options = {});

}  // namespace egb
