// SPDX-License-Identifier: Apache-2.0

#include "egb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "egb/error.hpp"
#include "egb/rng.hpp"

namespace egb {

using Json = nlohmann::json;

double StepMetrics::tool_match_rate() const {
  return tool_substeps ? static_cast<double>(tool_matches) / tool_substeps : 1.0;
}

double StepMetrics::action_identification_accuracy() const {
  return substeps ? static_cast<double>(action_id_correct) / substeps : 1.0;
}

StepMetrics step_metrics(const SearchOutcome& outcome, const Case& c) {
  StepMetrics m;
  for (const auto& node : c.plan) {
    if (node.kind != NodeKind::Substep) continue;
    ++m.substeps;
    const TrajectoryStep* step = outcome.first_pass.find(node.index);
    const Action* a = step ? &step->action : nullptr;
    const bool valid = a && !a->is_invalid();
    if (node.requires_tool()) {
      ++m.tool_substeps;
      if (valid && a->tool == node.reference_action->tool) ++m.tool_matches;
      if (valid && !a->is_no_op()) ++m.action_id_correct;
    } else if (valid && a->is_no_op()) {
      ++m.action_id_correct;
    }
  }
  return m;
}

CaseRow make_row(const Case& c, std::size_t case_index, std::uint64_t seed, const std::string& strategy,
                 const SearchOutcome& outcome) {
  CaseRow row;
  row.case_id = c.id;
  row.case_index = case_index;
  row.seed = seed;
  row.strategy = strategy;
  row.success = outcome.success;
  row.metrics = step_metrics(outcome, c);
  row.cost = outcome.cost;
  row.cost.wall_time_s = 0.0;
  row.dropped_mass = outcome.dropped_mass;
  row.branches = outcome.branches_tried;
  for (const auto& rec : outcome.first_pass.decisions) {
    const PlanNode* node = c.find_node(rec.substep);
    row.steps.push_back(StepRow{rec.substep, rec.entropy, rec.executed.tool,
                                node ? node->reference_tool() : std::string(kNoOp)});
  }
  return row;
}

Json row_to_json(const CaseRow& row) {
  Json branches = Json::array();
  for (const auto& b : row.branches) {
    branches.push_back(Json{{"substep", b.substep.str()}, {"tool", b.tool}, {"success", b.success}});
  }
  Json steps = Json::array();
  for (const auto& s : row.steps) {
    steps.push_back(Json{{"substep", s.substep.str()}, {"entropy", s.entropy}, {"executed", s.executed},
                         {"reference", s.reference}});
  }
  return Json{
      {"case_id", row.case_id},
      {"case_index", row.case_index},
      {"seed", row.seed},
      {"strategy", row.strategy},
      {"success", row.success},
      {"substeps", row.metrics.substeps},
      {"tool_substeps", row.metrics.tool_substeps},
      {"tool_matches", row.metrics.tool_matches},
      {"action_id_correct", row.metrics.action_id_correct},
      {"tool_match_rate", row.metrics.tool_match_rate()},
      {"action_identification_accuracy", row.metrics.action_identification_accuracy()},
      {"generation_calls", row.cost.generation_calls},
      {"lightweight_forward_calls", row.cost.lightweight_forward_calls},
      {"input_token_proxy", row.cost.input_token_proxy},
      {"output_token_proxy", row.cost.output_token_proxy},
      {"branches_executed", row.cost.branches_executed},
      {"dropped_mass", row.dropped_mass},
      {"branches", std::move(branches)},
      {"steps", std::move(steps)},
  };
}

CaseRow row_from_json(const Json& doc) {
  try {
    CaseRow row;
    row.case_id = doc.at("case_id").get<std::string>();
    row.case_index = doc.at("case_index").get<std::size_t>();
    row.seed = doc.at("seed").get<std::uint64_t>();
    row.strategy = doc.at("strategy").get<std::string>();
    row.success = doc.at("success").get<bool>();
    row.metrics.substeps = doc.at("substeps").get<int>();
    row.metrics.tool_substeps = doc.at("tool_substeps").get<int>();
    row.metrics.tool_matches = doc.at("tool_matches").get<int>();
    row.metrics.action_id_correct = doc.at("action_id_correct").get<int>();
    row.cost.generation_calls = doc.at("generation_calls").get<std::int64_t>();
    row.cost.lightweight_forward_calls = doc.at("lightweight_forward_calls").get<std::int64_t>();
    row.cost.input_token_proxy = doc.at("input_token_proxy").get<std::int64_t>();
    row.cost.output_token_proxy = doc.at("output_token_proxy").get<std::int64_t>();
    row.cost.branches_executed = doc.at("branches_executed").get<std::int64_t>();
    row.dropped_mass = doc.at("dropped_mass").get<double>();
    for (const auto& b : doc.at("branches")) {
      auto addr = parse_step_addr(b.at("substep").get<std::string>());
      if (!addr) throw std::invalid_argument("bad branch substep");
      row.branches.push_back({*addr, b.at("tool").get<std::string>(), b.at("success").get<bool>()});
    }
    for (const auto& s : doc.at("steps")) {
      auto addr = parse_step_addr(s.at("substep").get<std::string>());
      if (!addr) throw std::invalid_argument("bad step substep");
      row.steps.push_back({*addr, s.at("entropy").get<double>(), s.at("executed").get<std::string>(),
                           s.at("reference").get<std::string>()});
    }
    return row;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

std::vector<CaseRow> canonical_rows(std::vector<CaseRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const CaseRow& a, const CaseRow& b) {
    if (a.case_index != b.case_index) return a.case_index < b.case_index;
    return a.seed < b.seed;
  });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const CaseRow& a, const CaseRow& b) {
                           return a.case_index == b.case_index && a.seed == b.seed;
                         }),
             rows.end());
  return rows;
}

double sample_stdev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Rate rate_over(std::span<const CaseRow> rows, const std::function<double(const CaseRow&)>& value) {
  Rate r;
  if (rows.empty()) return r;
  std::map<std::size_t, std::pair<double, int>> per_case;
  std::map<std::uint64_t, std::pair<double, int>> per_seed;
  for (const auto& row : rows) {
    const double v = value(row);
    auto& c = per_case[row.case_index];
    c.first += v;
    ++c.second;
    auto& s = per_seed[row.seed];
    s.first += v;
    ++s.second;
  }
  for (const auto& [_, acc] : per_case) r.mean += acc.first / acc.second;
  r.mean /= static_cast<double>(per_case.size());
  std::vector<double> seed_means;
  for (const auto& [_, acc] : per_seed) seed_means.push_back(acc.first / acc.second);
  r.stdev = sample_stdev(seed_means);
  return r;
}

Rate success_rate(std::span<const CaseRow> rows) {
  return rate_over(rows, [](const CaseRow& r) { return r.success ? 1.0 : 0.0; });
}

RunReport aggregate_rows(std::span<const CaseRow> rows, int bins) {
  RunReport rep;
  rep.rows = rows.size();
  std::set<std::size_t> cases;
  std::set<std::uint64_t> seeds;
  std::vector<EntropySample> samples;
  double sum_ok = 0.0, sum_err = 0.0;
  std::size_t n_ok = 0, n_err = 0;
  for (const auto& row : rows) {
    cases.insert(row.case_index);
    seeds.insert(row.seed);
    rep.total_cost += row.cost;
    rep.dropped_mass += row.dropped_mass;
    for (const auto& s : row.steps) {
      if (!s.requires_tool()) continue;
      const bool err = s.executed != s.reference;
      samples.push_back({s.entropy, err});
      (err ? sum_err : sum_ok) += s.entropy;
      ++(err ? n_err : n_ok);
    }
  }
  rep.cases = cases.size();
  rep.seeds = seeds.size();
  rep.execution_success = success_rate(rows);
  rep.tool_match = rate_over(rows, [](const CaseRow& r) { return r.metrics.tool_match_rate(); });
  rep.action_identification =
      rate_over(rows, [](const CaseRow& r) { return r.metrics.action_identification_accuracy(); });
  rep.entropy_table = bin_entropy_errors(samples, bins);
  rep.mean_entropy_correct = n_ok ? sum_ok / static_cast<double>(n_ok) : 0.0;
  rep.mean_entropy_error = n_err ? sum_err / static_cast<double>(n_err) : 0.0;
  return rep;
}

Json report_to_json(const RunReport& r) {
  auto rate = [](const Rate& x) { return Json{{"mean", x.mean}, {"stdev", x.stdev}}; };
  Json table = Json::array();
  for (const auto& b : r.entropy_table) {
    table.push_back(Json{{"lo", b.lo}, {"hi", b.hi}, {"steps", b.steps}, {"errors", b.errors},
                         {"error_rate", b.error_rate}});
  }
  return Json{
      {"rows", r.rows},
      {"cases", r.cases},
      {"seeds", r.seeds},
      {"execution_success_rate", rate(r.execution_success)},
      {"tool_match_rate", rate(r.tool_match)},
      {"action_identification_accuracy", rate(r.action_identification)},
      {"cost",
       Json{{"generation_calls", r.total_cost.generation_calls},
            {"lightweight_forward_calls", r.total_cost.lightweight_forward_calls},
            {"input_token_proxy", r.total_cost.input_token_proxy},
            {"output_token_proxy", r.total_cost.output_token_proxy},
            {"branches_executed", r.total_cost.branches_executed}}},
      {"dropped_mass", r.dropped_mass},
      {"mean_entropy_correct", r.mean_entropy_correct},
      {"mean_entropy_error", r.mean_entropy_error},
      {"entropy_error", std::move(table)},
  };
}

std::vector<CaseRow> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rows file '" + path.string() + "'");
  std::vector<CaseRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": row is not valid JSON");
    }
    try {
      rows.push_back(row_from_json(doc));
    } catch (const std::invalid_argument& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": corrupt row: " + e.what());
    }
  }
  return rows;
}

void write_rows(const std::filesystem::path& path, std::span<const CaseRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write rows file '" + path.string() + "'");
  for (const auto& r : rows) out << row_to_json(r).dump() << "\n";
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string summary_csv_header() {
  return "label,rows,cases,seeds,success_rate,success_stdev,tool_match_rate,action_identification_accuracy,"
         "generation_calls,lightweight_forward_calls,input_token_proxy,output_token_proxy,branches_executed\n";
}

std::string summary_csv_line(const std::string& label, const RunReport& r) {
  std::ostringstream os;
  os << label << "," << r.rows << "," << r.cases << "," << r.seeds << "," << fmt(r.execution_success.mean) << ","
     << fmt(r.execution_success.stdev) << "," << fmt(r.tool_match.mean) << ","
     << fmt(r.action_identification.mean) << "," << r.total_cost.generation_calls << ","
     << r.total_cost.lightweight_forward_calls << "," << r.total_cost.input_token_proxy << ","
     << r.total_cost.output_token_proxy << "," << r.total_cost.branches_executed << "\n";
  return os.str();
}

std::string entropy_csv(const RunReport& r) {
  std::ostringstream os;
  os << "lo,hi,steps,errors,error_rate\n";
  for (const auto& b : r.entropy_table) {
    os << fmt(b.lo) << "," << fmt(b.hi) << "," << b.steps << "," << b.errors << "," << fmt(b.error_rate) << "\n";
  }
  return os.str();
}

RunReport aggregate_run_dir(const std::filesystem::path& dir, int bins) {
  const auto rows = canonical_rows(read_rows(dir / kRowsFile));
  RunReport rep = aggregate_rows(rows, bins);
  std::string label = rows.empty() ? std::string("empty") : rows.front().strategy;
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    out << report_to_json(rep).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "summary.csv", std::ios::trunc);
    out << summary_csv_header() << summary_csv_line(label, rep);
  }
  {
    std::ofstream out(dir / "entropy_error.csv", std::ios::trunc);
    out << entropy_csv(rep);
  }
  return rep;
}

namespace {

double resample_mean(std::span<const double> d, std::uint64_t seed, int r) {
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(r)}));
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) sum += d[rng.below(d.size())];
  return sum / static_cast<double>(d.size());
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("paired bootstrap needs two nonempty samples of equal length");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

BootstrapResult finish(const std::vector<double>& d, std::vector<double> means, double confidence) {
  BootstrapResult out;
  for (double x : d) out.mean_diff += x;
  out.mean_diff /= static_cast<double>(d.size());
  std::sort(means.begin(), means.end());
  auto idx = static_cast<std::size_t>(std::floor((1.0 - confidence) * static_cast<double>(means.size())));
  idx = std::min(idx, means.size() - 1);
  out.lower = means[idx];
  return out;
}

}  // namespace

BootstrapResult paired_bootstrap_serial(std::span<const double> a, std::span<const double> b, int resamples,
                                        std::uint64_t seed, double confidence) {
  const auto d = differences(a, b);
  std::vector<double> means(static_cast<std::size_t>(std::max(resamples, 1)));
  for (int r = 0; r < static_cast<int>(means.size()); ++r) means[r] = resample_mean(d, seed, r);
  return finish(d, std::move(means), confidence);
}

BootstrapResult paired_bootstrap_parallel(std::span<const double> a, std::span<const double> b, int resamples,
                                          std::uint64_t seed, double confidence) {
  const auto d = differences(a, b);
  std::vector<double> means(static_cast<std::size_t>(std::max(resamples, 1)));
  const int n = static_cast<int>(means.size());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) means[r] = resample_mean(d, seed, r);
  return finish(d, std::move(means), confidence);
}

}  // namespace egb
