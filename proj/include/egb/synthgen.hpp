// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded generator of plan/tool/dictionary cases plus the oracle sidecar
// that plants faults at chosen substeps.
//
// Tools come in families: a reference tool and distractors that share its
// noun, object and argument schema and differ only in the verb. Distractors
// never have dictionary entries, so choosing one always yields the default
// payload.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "egb/oracle.hpp"
#include "egb/types.hpp"

namespace egb {

/// Which tool-bearing substeps a fault rule applies to.
enum class FaultSelect { All, First, Last, Positions, Random };

struct FaultRule {
  FaultSelect select = FaultSelect::All;
  std::vector<int> positions;  // 1-based among tool-bearing substeps
  int count = 0;               // for Random
  double p_correct = 1.0;
  /// Relative weights over the reference's distractors, in family order;
  /// scaled to the mass left by p_correct and no_op. Empty means uniform.
  std::vector<double> confusion;
  double no_op = 0.0;
  double arg_error = 0.0;
};

struct GenConfig {
  std::uint64_t seed = 0;
  int n_cases = 50;
  int plan_length_min = 5;  // substeps per case
  int plan_length_max = 10;
  int toolset_size = 60;
  int library_size = 1000;
  int n_distractors = 3;  // per reference tool
  double dependency_density = 0.5;
  double no_tool_fraction = 0.1;
  std::string id_prefix = "syn";
  /// Applied in order; later rules override earlier ones on shared substeps.
  std::vector<FaultRule> fault_profile;
};

/// Throws ConfigError describing the first violated constraint.
void check_config(const GenConfig& config);

nlohmann::json gen_config_to_json(const GenConfig& config);
/// Missing keys keep their defaults. Throws ConfigError on bad values.
GenConfig gen_config_from_json(const nlohmann::json& doc);

struct GenResult {
  std::vector<Case> cases;
  OracleSpec oracle;
};

/// The shared tool library: library_size / (1 + n_distractors) families.
std::vector<ToolSpec> build_library(const GenConfig& config);

/// Deterministic in config; every case passes validate_case.
GenResult generate(const GenConfig& config);

}  // namespace egb
