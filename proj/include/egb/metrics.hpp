// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "egb/cost.hpp"
#include "egb/entropy.hpp"
#include "egb/search.hpp"

namespace egb {

struct StepMetrics {
  int tool_substeps = 0;
  int tool_matches = 0;
  int substeps = 0;
  int action_id_correct = 0;

  /// Over tool-requiring substeps; 1 when there are none.
  double tool_match_rate() const;
  /// Over all substeps (high-level nodes excluded); 1 for an empty plan.
  double action_identification_accuracy() const;
};

/// First-pass step metrics. An INVALID output counts as wrong for both.
StepMetrics step_metrics(const SearchOutcome& outcome, const Case& c);

struct StepRow {
  StepAddr substep;
  double entropy = 0.0;
  std::string executed;
  std::string reference;  // NO_OP for no-tool substeps

  bool requires_tool() const { return reference != kNoOp; }
  bool operator==(const StepRow&) const = default;
};

/// One (case, seed) result. Deterministic: no wall time.
struct CaseRow {
  std::string case_id;
  std::size_t case_index = 0;
  std::uint64_t seed = 0;
  std::string strategy;
  bool success = false;
  StepMetrics metrics;
  CostLedger cost;
  double dropped_mass = 0.0;
  std::vector<BranchAttempt> branches;
  std::vector<StepRow> steps;
};

CaseRow make_row(const Case& c, std::size_t case_index, std::uint64_t seed, const std::string& strategy,
                 const SearchOutcome& outcome);

nlohmann::json row_to_json(const CaseRow& row);
/// Throws std::invalid_argument on missing or mistyped fields.
CaseRow row_from_json(const nlohmann::json& doc);

/// Rows sorted by (case_index, seed), later duplicates dropped.
std::vector<CaseRow> canonical_rows(std::vector<CaseRow> rows);

struct Rate {
  double mean = 0.0;
  double stdev = 0.0;  // sample stdev over per-seed rates; 0 with one seed
};

/// Mean of `value(row)` per case (averaged over seeds, then over cases) and
/// the sample stdev of the per-seed means.
Rate rate_over(std::span<const CaseRow> rows, const std::function<double(const CaseRow&)>& value);

Rate success_rate(std::span<const CaseRow> rows);
double sample_stdev(std::span<const double> values);

struct RunReport {
  std::size_t rows = 0;
  std::size_t cases = 0;
  std::size_t seeds = 0;
  Rate execution_success;
  Rate tool_match;
  Rate action_identification;
  CostLedger total_cost;
  double dropped_mass = 0.0;
  std::vector<EntropyBin> entropy_table;
  double mean_entropy_correct = 0.0;
  double mean_entropy_error = 0.0;
};

RunReport aggregate_rows(std::span<const CaseRow> rows, int bins = 5);
nlohmann::json report_to_json(const RunReport& report);

inline constexpr const char* kRowsFile = "rows.jsonl";

/// Reads every row from `path` (JSON lines). Throws Error naming the file
/// and line on a corrupt row.
std::vector<CaseRow> read_rows(const std::filesystem::path& path);
void write_rows(const std::filesystem::path& path, std::span<const CaseRow> rows);

/// Recomputes report.json, summary.csv and entropy_error.csv of a run
/// directory from its rows. Idempotent.
RunReport aggregate_run_dir(const std::filesystem::path& dir, int bins = 5);

std::string summary_csv_header();
std::string summary_csv_line(const std::string& label, const RunReport& report);
std::string entropy_csv(const RunReport& report);

/// One-sided paired bootstrap on mean(a - b).
struct BootstrapResult {
  double mean_diff = 0.0;
  double lower = 0.0;  // (1 - confidence) quantile of resampled means
};

BootstrapResult paired_bootstrap_serial(std::span<const double> a, std::span<const double> b, int resamples,
                                        std::uint64_t seed, double confidence = 0.95);
/// Same result as the serial version, resamples spread over OpenMP threads.
BootstrapResult paired_bootstrap_parallel(std::span<const double> a, std::span<const double> b, int resamples,
                                          std::uint64_t seed, double confidence = 0.95);

}  // namespace egb
