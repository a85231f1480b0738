// SPDX-License-Identifier: Apache-2.0

// egb: batch driver for greedy, self-consistency, entropy-guided and
// random-order branching runs over oracle or remote policies.
//
// Exit status: 0 on completion, 2 on usage/config/input errors, 1 otherwise.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "egb/dataset.hpp"
#include "egb/error.hpp"
#include "egb/experiment.hpp"
#include "egb/metrics.hpp"
#include "egb/synthgen.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

void print_report(const std::string& label, const egb::RunReport& r) {
  std::cout << label << ": rows=" << r.rows << " success=" << r.execution_success.mean
            << " (sd " << r.execution_success.stdev << ") tool_match=" << r.tool_match.mean
            << " action_id=" << r.action_identification.mean
            << " generation_calls=" << r.total_cost.generation_calls
            << " branches=" << r.total_cost.branches_executed << "\n";
}

egb::RunConfig load_with_overrides(const std::string& path, int workers) {
  auto cfg = egb::load_run_config(path);
  if (workers > 0) cfg.workers = workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-guided branching for tool-use plans"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int workers = 0;
  bool resume = false;
  int bins = 5;
  std::vector<std::string> case_files;

  auto* run = app.add_subcommand("run", "Run one strategy over all cases and seeds");
  auto* sweep = app.add_subcommand("sweep", "Run the configured hyperparameter sweep");
  for (auto* sub : {run, sweep}) {
    sub->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_flag("--resume", resume, "Keep completed (case, seed) rows and run the rest");
  }

  auto* gen = app.add_subcommand("generate", "Generate a synthetic suite: cases.json and oracle.json");
  gen->add_option("--config", config, "Generator config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();

  auto* agg = app.add_subcommand("aggregate", "Recompute reports of a run directory from rows.jsonl");
  agg->add_option("--out", out, "Run directory")->required()->check(CLI::ExistingDirectory);
  agg->add_option("--bins", bins, "Entropy bins")->check(CLI::Range(2, 1000));

  auto* val = app.add_subcommand("validate", "Validate a run config or case files without running");
  val->add_option("--config", config, "Run config (JSON)")->check(CLI::ExistingFile);
  val->add_option("cases", case_files, "Case files (JSON)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*run || *sweep) {
      const auto cfg = load_with_overrides(config, workers);
      const auto inputs = egb::load_inputs(cfg);
      egb::RunOptions opts;
      opts.resume = resume;
      if (*run) {
        print_report(egb::to_string(cfg.strategy), egb::run_experiment(cfg, inputs, out, opts));
      } else {
        const auto reports = egb::run_sweep(cfg, inputs, out, opts);
        for (std::size_t i = 0; i < reports.size(); ++i) {
          print_report(cfg.sweep->param + "=" + std::to_string(cfg.sweep->values[i]), reports[i]);
        }
      }
    } else if (*gen) {
      std::ifstream in(config);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw egb::ConfigError(config + ": " + e.what());
      }
      const auto gc = egb::gen_config_from_json(doc);
      egb::check_config(gc);
      const auto result = egb::generate(gc);
      fs::create_directories(out);
      egb::save_cases(fs::path(out) / "cases.json", result.cases);
      egb::save_oracle_spec(fs::path(out) / "oracle.json", result.oracle);
      std::cout << "generated " << result.cases.size() << " cases in " << out << "\n";
    } else if (*agg) {
      print_report(out, egb::aggregate_run_dir(out, bins));
    } else if (*val) {
      if (config.empty() && case_files.empty()) {
        std::cerr << "validate: give --config or at least one case file\n";
        return kUsage;
      }
      if (!config.empty()) {
        const auto cfg = egb::load_run_config(config);
        const auto inputs = egb::load_inputs(cfg);
        std::cout << config << ": ok (" << inputs.cases.size() << " cases)\n";
      }
      for (const auto& f : case_files) {
        const auto cases = egb::load_cases(f);
        std::cout << f << ": ok (" << cases.size() << " cases)\n";
      }
    }
  } catch (const egb::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kUsage;
  } catch (const egb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const egb::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const egb::PolicyUnavailableError& e) {
    std::cerr << "policy backend unavailable: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
