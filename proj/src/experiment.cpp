// SPDX-License-Identifier: Apache-2.0

#include "egb/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "egb/batch.hpp"
#include "egb/dataset.hpp"
#include "egb/error.hpp"
#include "egb/remote.hpp"

namespace egb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStrategyNames[] = {"greedy", "self_consistency", "egb_sampling", "egb_logits",
                                          "random_branch"};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "strategy", "backend",   "cases",   "generator",   "oracle",     "seeds",   "m",       "b",
      "B",        "B_s",       "tau",     "k",           "temperature", "max_tokens", "timeout_s", "retries",
      "model",    "endpoint",  "digit_path", "workers",  "bins",       "sweep"};
  return keys;
}

const std::set<std::string>& sweep_params() {
  static const std::set<std::string> params = {"m", "b", "B", "B_s", "tau", "k"};
  return params;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

int get_int(const json& doc, const std::string& key, int fallback, int lo) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  const auto& v = doc[key];
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const auto x = v.get<long long>();
  if (x < lo) bad(key, "must be >= " + std::to_string(lo));
  return static_cast<int>(x);
}

double get_double(const json& doc, const std::string& key, double fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  const auto& v = doc[key];
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

std::string get_string(const json& doc, const std::string& key, const std::string& fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  if (!doc[key].is_string()) bad(key, "expected a string");
  return doc[key].get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::string format_value(double v) {
  if (std::floor(v) == v && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string dump_line(const CaseRow& row) { return row_to_json(row).dump(); }

/// Rows from a worker shard. A corrupt final line (interrupted write) is
/// dropped; corruption anywhere else is an error.
std::vector<CaseRow> read_shard(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  std::vector<CaseRow> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      rows.push_back(row_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) break;
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": corrupt row: " + e.what());
    }
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string to_string(Strategy s) { return kStrategyNames[static_cast<int>(s)]; }

std::optional<Strategy> parse_strategy(const std::string& text) {
  for (int i = 0; i < 5; ++i) {
    if (text == kStrategyNames[i]) return static_cast<Strategy>(i);
  }
  return std::nullopt;
}

SearchConfig RunConfig::search_config(std::uint64_t seed) const {
  SearchConfig sc;
  sc.m = m;
  sc.budget = BranchBudget::from_trajectory_cap(b, per_step_limit);
  if (global_limit) sc.budget.global_limit = *global_limit;
  sc.mode = strategy == Strategy::EgbLogits ? EntropyMode::Logits : EntropyMode::Sampling;
  sc.tau = tau;
  sc.k = k;
  sc.seed = seed;
  return sc;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().count(key)) bad(key, "unknown key");
  }
  RunConfig cfg;
  const auto strategy = get_string(doc, "strategy", to_string(cfg.strategy));
  if (auto s = parse_strategy(strategy)) {
    cfg.strategy = *s;
  } else {
    bad("strategy", "unknown strategy '" + strategy + "'");
  }
  cfg.backend = get_string(doc, "backend", cfg.backend);
  if (cfg.backend != "oracle" && cfg.backend != "remote") bad("backend", "expected 'oracle' or 'remote'");

  const bool has_cases = doc.contains("cases") && !doc["cases"].is_null();
  const bool has_gen = doc.contains("generator") && !doc["generator"].is_null();
  if (has_cases == has_gen) bad("cases", "exactly one of 'cases' or 'generator' is required");
  if (has_cases) cfg.cases_path = resolve(base_dir, get_string(doc, "cases", ""));
  if (has_gen) {
    if (!doc["generator"].is_object()) bad("generator", "expected an object");
    cfg.generator = gen_config_from_json(doc["generator"]);
    check_config(*cfg.generator);
  }
  if (doc.contains("oracle") && !doc["oracle"].is_null()) {
    cfg.oracle_path = resolve(base_dir, get_string(doc, "oracle", ""));
  }

  if (doc.contains("seeds")) {
    const auto& s = doc["seeds"];
    cfg.seeds.clear();
    if (s.is_number_integer()) {
      const auto n = s.get<long long>();
      if (n < 1) bad("seeds", "count must be >= 1");
      for (long long i = 0; i < n; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (s.is_array() && !s.empty()) {
      std::set<std::uint64_t> seen;
      for (const auto& v : s) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
          bad("seeds", "expected non-negative integers");
        }
        const auto x = v.get<std::uint64_t>();
        if (!seen.insert(x).second) bad("seeds", "duplicate seed " + std::to_string(x));
        cfg.seeds.push_back(x);
      }
    } else {
      bad("seeds", "expected a positive count or a non-empty array");
    }
  }

  cfg.m = get_int(doc, "m", cfg.m, 1);
  cfg.b = get_int(doc, "b", cfg.b, 1);
  if (doc.contains("B") && !doc["B"].is_null()) cfg.global_limit = get_int(doc, "B", 0, 0);
  cfg.per_step_limit = get_int(doc, "B_s", cfg.per_step_limit, 0);
  cfg.tau = get_double(doc, "tau", cfg.tau);
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) bad("tau", "must lie in [0, 1]");
  const int k = get_int(doc, "k", static_cast<int>(cfg.k), 1);
  if (k > 100) bad("k", "must be <= 100");
  cfg.k = static_cast<std::size_t>(k);
  cfg.temperature = get_double(doc, "temperature", cfg.temperature);
  if (cfg.temperature < 0.0) bad("temperature", "must be >= 0");
  cfg.max_tokens = get_int(doc, "max_tokens", cfg.max_tokens, 1);
  cfg.timeout_s = get_double(doc, "timeout_s", cfg.timeout_s);
  if (cfg.timeout_s <= 0.0) bad("timeout_s", "must be > 0");
  cfg.retries = get_int(doc, "retries", cfg.retries, 0);
  cfg.model = get_string(doc, "model", cfg.model);
  cfg.endpoint = get_string(doc, "endpoint", cfg.endpoint);
  if (doc.contains("digit_path")) {
    if (!doc["digit_path"].is_boolean()) bad("digit_path", "expected a boolean");
    cfg.digit_path = doc["digit_path"].get<bool>();
  }
  cfg.workers = get_int(doc, "workers", cfg.workers, 1);
  cfg.bins = get_int(doc, "bins", cfg.bins, 2);

  if (doc.contains("sweep") && !doc["sweep"].is_null()) {
    const auto& s = doc["sweep"];
    if (!s.is_object()) bad("sweep", "expected an object");
    SweepSpec spec;
    spec.param = get_string(s, "param", "");
    if (!sweep_params().count(spec.param)) bad("sweep", "param must be one of m, b, B, B_s, tau, k");
    if (!s.contains("values") || !s["values"].is_array() || s["values"].empty()) {
      bad("sweep", "'values' must be a non-empty array");
    }
    for (const auto& v : s["values"]) {
      if (!v.is_number()) bad("sweep", "values must be numbers");
      spec.values.push_back(v.get<double>());
    }
    for (double v : spec.values) (void)with_param(cfg, spec.param, v);
    cfg.sweep = std::move(spec);
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

json run_config_to_json(const RunConfig& cfg) {
  json doc;
  doc["strategy"] = to_string(cfg.strategy);
  doc["backend"] = cfg.backend;
  if (cfg.generator) {
    doc["generator"] = gen_config_to_json(*cfg.generator);
  } else {
    doc["cases"] = cfg.cases_path.string();
  }
  if (!cfg.oracle_path.empty()) doc["oracle"] = cfg.oracle_path.string();
  doc["seeds"] = cfg.seeds;
  doc["m"] = cfg.m;
  doc["b"] = cfg.b;
  doc["B"] = cfg.global_limit ? json(*cfg.global_limit) : json(nullptr);
  doc["B_s"] = cfg.per_step_limit;
  doc["tau"] = cfg.tau;
  doc["k"] = cfg.k;
  doc["temperature"] = cfg.temperature;
  doc["max_tokens"] = cfg.max_tokens;
  doc["timeout_s"] = cfg.timeout_s;
  doc["retries"] = cfg.retries;
  doc["model"] = cfg.model;
  doc["endpoint"] = cfg.endpoint;
  doc["digit_path"] = cfg.digit_path;
  doc["bins"] = cfg.bins;
  if (cfg.sweep) doc["sweep"] = {{"param", cfg.sweep->param}, {"values", cfg.sweep->values}};
  return doc;
}

RunConfig with_param(RunConfig cfg, const std::string& param, double value) {
  auto as_int = [&](int lo) {
    if (std::floor(value) != value || value < lo) {
      throw ConfigError("sweep value " + format_value(value) + " is not valid for '" + param + "'");
    }
    return static_cast<int>(value);
  };
  if (param == "m") {
    cfg.m = as_int(1);
  } else if (param == "b") {
    cfg.b = as_int(1);
    cfg.global_limit.reset();
  } else if (param == "B") {
    cfg.global_limit = as_int(0);
  } else if (param == "B_s") {
    cfg.per_step_limit = as_int(0);
  } else if (param == "tau") {
    if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("sweep value for 'tau' must lie in [0, 1]");
    cfg.tau = value;
  } else if (param == "k") {
    const int k = as_int(1);
    if (k > 100) throw ConfigError("sweep value for 'k' must be <= 100");
    cfg.k = static_cast<std::size_t>(k);
  } else {
    throw ConfigError("unknown sweep parameter '" + param + "'");
  }
  cfg.sweep.reset();
  return cfg;
}

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  if (cfg.generator) {
    auto gen = generate(*cfg.generator);
    in.cases = std::move(gen.cases);
    in.oracle = std::move(gen.oracle);
  } else {
    in.cases = load_cases(cfg.cases_path);
  }
  if (!cfg.oracle_path.empty()) in.oracle = load_oracle_spec(cfg.oracle_path);
  return in;
}

std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const OracleSpec& oracle) {
  if (cfg.backend == "remote") {
    RemoteConfig rc;
    rc.endpoint = cfg.endpoint;
    rc.model = cfg.model;
    rc = RemoteConfig::from_env(rc);
    rc.temperature = cfg.temperature;
    rc.max_tokens = cfg.max_tokens;
    rc.timeout_s = cfg.timeout_s;
    rc.retries = cfg.retries;
    if (rc.endpoint.empty()) throw ConfigError("remote backend needs EGB_REMOTE_ENDPOINT or 'endpoint'");
    return std::make_unique<RemotePolicy>(std::move(rc));
  }
  return std::make_unique<OraclePolicy>(oracle, OraclePolicy::Options{cfg.digit_path});
}

SearchOutcome run_strategy(const RunConfig& cfg, const Case& c, Policy& policy, std::uint64_t seed) {
  switch (cfg.strategy) {
    case Strategy::Greedy:
      return greedy_run(c, policy, seed, cfg.k);
    case Strategy::SelfConsistency:
      return self_consistency_run(c, policy, cfg.m, seed, cfg.k);
    case Strategy::EgbSampling:
    case Strategy::EgbLogits:
      return egb_run(c, policy, cfg.search_config(seed));
    case Strategy::RandomBranch:
      return random_branch_run(c, policy, cfg.search_config(seed));
  }
  throw ConfigError("unknown strategy");
}

RunReport run_experiment(const RunConfig& cfg, const Inputs& inputs, const fs::path& out_dir,
                         const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const auto shard_dir = out_dir / "shards";
  const auto rows_path = out_dir / kRowsFile;
  const auto config_path = out_dir / "config.json";
  const auto snapshot = run_config_to_json(cfg).dump(2) + "\n";

  std::vector<CaseRow> done;
  if (options.resume && fs::exists(config_path)) {
    std::ifstream in(config_path);
    std::stringstream prior;
    prior << in.rdbuf();
    if (prior.str() != snapshot) {
      throw ConfigError("cannot resume " + out_dir.string() + ": config differs from the saved snapshot");
    }
    if (fs::exists(rows_path)) done = read_rows(rows_path);
    if (fs::exists(shard_dir)) {
      for (const auto& entry : fs::directory_iterator(shard_dir)) {
        auto rows = read_shard(entry.path());
        done.insert(done.end(), rows.begin(), rows.end());
      }
    }
  } else {
    fs::remove(rows_path);
    fs::remove_all(shard_dir);
  }
  write_text(config_path, snapshot);

  std::set<std::pair<std::size_t, std::uint64_t>> completed;
  for (const auto& r : done) completed.emplace(r.case_index, r.seed);
  std::vector<Job> todo;
  for (const auto& job : make_jobs(inputs.cases.size(), cfg.seeds)) {
    if (!completed.count({job.case_index, job.seed})) todo.push_back(job);
  }

  const int workers = options.serial ? 1 : std::max(1, cfg.workers);
  fs::create_directories(shard_dir);
  std::vector<std::unique_ptr<Policy>> policies;
  std::vector<std::ofstream> shards(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) policies.push_back(make_policy(cfg, inputs.oracle));

  const std::string strategy = to_string(cfg.strategy);
  JobFn fn = [&](const Job& job, int worker) {
    const auto w = static_cast<std::size_t>(worker);
    const Case& c = inputs.cases[job.case_index];
    auto outcome = run_strategy(cfg, c, *policies[w], job.seed);
    auto row = make_row(c, job.case_index, job.seed, strategy, outcome);
    auto& out = shards[w];
    if (!out.is_open()) {
      out.open(shard_dir / ("worker-" + std::to_string(worker) + ".jsonl"), std::ios::app | std::ios::binary);
    }
    out << dump_line(row) << "\n";
    out.flush();
    return row;
  };
  auto fresh = workers == 1 ? run_batch_serial(todo, fn) : run_batch_parallel(todo, fn, workers);
  for (auto& s : shards) s.close();

  done.insert(done.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
  const auto rows = canonical_rows(std::move(done));
  const auto tmp = out_dir / (std::string(kRowsFile) + ".tmp");
  write_rows(tmp, rows);
  fs::rename(tmp, rows_path);
  fs::remove_all(shard_dir);

  auto report = aggregate_run_dir(out_dir, cfg.bins);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json timing = {{"wall_time_s", wall},
                 {"rows_executed", todo.size()},
                 {"rows_resumed", completed.size()},
                 {"workers", workers}};
  write_text(out_dir / "timing.json", timing.dump(2) + "\n");
  return report;
}

std::vector<RunReport> run_sweep(const RunConfig& cfg, const Inputs& inputs, const fs::path& out_dir,
                                 const RunOptions& options) {
  if (!cfg.sweep) throw ConfigError("config has no 'sweep' section");
  fs::create_directories(out_dir);
  std::vector<RunReport> reports;
  std::string csv = "param,value," + summary_csv_header().substr(std::string("label,").size());
  for (double v : cfg.sweep->values) {
    const auto label = cfg.sweep->param + "=" + format_value(v);
    auto report = run_experiment(with_param(cfg, cfg.sweep->param, v), inputs, out_dir / label, options);
    csv += cfg.sweep->param + "," + summary_csv_line(format_value(v), report);
    reports.push_back(std::move(report));
  }
  write_text(out_dir / "sweep.csv", csv);
  return reports;
}

}  // namespace egb
