// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic noisy-oracle policy. Its per-substep behaviour is fully
// specified by an OracleSpec, so expected success rates and entropies are
// known in closed form.
//
// Sidecar document:
//   {"default": {"p_correct": 1.0},
//    "cases": {"<case id>": {"2.1": {"p_correct": 0.6,
//                                    "confusion": [{"tool": "x", "weight": 0.3}],
//                                    "no_op": 0.1,
//                                    "arg_error": 0.0}}}}

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "egb/policy.hpp"

namespace egb {

struct ConfusionWeight {
  std::string tool;
  double weight = 0.0;

  bool operator==(const ConfusionWeight&) const = default;
};

/// Behaviour at one substep. Unassigned mass 1 - p_correct - sum(confusion)
/// - no_op is spread evenly over the remaining tool candidates.
struct OracleRow {
  double p_correct = 1.0;
  std::vector<ConfusionWeight> confusion;
  double no_op = 0.0;
  /// Chance that a sampled reference call carries a corrupted argument.
  double arg_error = 0.0;

  bool operator==(const OracleRow&) const = default;
};

struct OracleSpec {
  OracleRow fallback;
  std::map<std::string, std::map<StepAddr, OracleRow>> cases;

  const OracleRow& row(const std::string& case_id, StepAddr addr) const;

  bool operator==(const OracleSpec&) const = default;
};

nlohmann::json oracle_spec_to_json(const OracleSpec& spec);
/// Throws ConfigError on malformed content.
OracleSpec oracle_spec_from_json(const nlohmann::json& doc);
OracleSpec load_oracle_spec(const std::filesystem::path& path);
void save_oracle_spec(const std::filesystem::path& path, const OracleSpec& spec);

class OraclePolicy final : public Policy {
 public:
  struct Options {
    /// Expose the distribution through the two-token digit read-out
    /// (compose_digits) instead of returning it directly.
    bool digit_path = false;
  };

  explicit OraclePolicy(OracleSpec spec) : OraclePolicy(std::move(spec), Options{}) {}
  OraclePolicy(OracleSpec spec, Options options) : spec_(std::move(spec)), options_(options) {}

  Action sample_action(const DecisionContext& ctx, std::uint64_t seed) override;
  IndexDistribution index_distribution(const DecisionContext& ctx) override;
  Action generate_params(const DecisionContext& ctx, const std::string& tool) override;

  /// The configured row renormalized over ctx.candidates. Falls back to a
  /// point mass on NO_OP when no configured tool is a candidate.
  std::vector<double> candidate_weights(const DecisionContext& ctx) const;

  const OracleSpec& spec() const noexcept { return spec_; }

 private:
  Action reference_call(const DecisionContext& ctx) const;

  OracleSpec spec_;
  Options options_;
};

/// Digit model whose composition reproduces `probs` (length K <= 100).
DigitModel digit_model_for(const std::vector<double>& probs);

}  // namespace egb
