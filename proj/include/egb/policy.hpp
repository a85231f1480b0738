// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "egb/types.hpp"

namespace egb {

/// Candidate tools for one decision, index 0..K-1. The last entry is always
/// the NO_OP sentinel (a null tool pointer).
struct CandidateSet {
  std::vector<const ToolSpec*> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::string name(std::size_t i) const;
  const ToolSpec* tool(std::size_t i) const { return entries.at(i); }
  /// Index of `tool_name` (NO_OP included), or size() when absent.
  std::size_t rank_of(std::string_view tool_name) const;
  bool contains(std::string_view tool_name) const { return rank_of(tool_name) < size(); }
};

inline constexpr std::size_t kMaxCandidates = 100;

/// Deterministic lexical retrieval. Each tool scores
///   2 * |substep tokens ∩ tool tokens| + |query tokens ∩ tool tokens|
/// where tool tokens come from its name and description. The top
/// min(k, 99, |toolset|) tools are kept (ties by name), then NO_OP is appended.
CandidateSet retrieve_candidates(const Case& c, const PlanNode& substep, std::size_t k);

/// Lowercased alphanumeric tokens; underscores split words.
std::vector<std::string> tokenize(std::string_view text);

/// Everything a policy may condition on for one substep.
struct DecisionContext {
  const Case* case_ = nullptr;
  const PlanNode* substep = nullptr;
  const TrajectoryState* history = nullptr;  // substeps before `substep` only
  const CandidateSet* candidates = nullptr;
};

/// Prompt text shown to a policy; also the basis of the input-token proxy.
std::string render_prompt(const DecisionContext& ctx);
/// Prompt asking for a candidate index only (white-box digit path).
std::string render_index_prompt(const DecisionContext& ctx);
/// Function-call text of an action, e.g. get_order(order_id="A1").
std::string render_action(const Action& action);

enum class Provenance { Direct, DigitComposed };

struct IndexDistribution {
  std::vector<double> probs;  // length K, aligned with the CandidateSet
  Provenance provenance = Provenance::Direct;
  /// Model forward passes spent producing the distribution.
  int forward_passes = 1;
  /// First-token probability mass outside the ten digits, discarded before
  /// normalization.
  double dropped_mass = 0.0;
};

/// Token probabilities for the two-position index read-out.
struct DigitModel {
  std::array<double, 10> p1{};
  std::array<std::array<double, 10>, 10> p2{};  // p2[d1][d2]
  std::array<double, 10> p_end{};               // p_end[d1] = 1 - sum(p2[d1])
};

/// Distribution over K candidate indices from a DigitModel:
///   P[d1]         += p1[d1] * p_end[d1]     for d1 < K
///   P[10*d1 + d2] += p1[d1] * p2[d1][d2]    for 10 <= idx < K
/// then normalized. Throws DegenerateDistributionError when no mass lands on
/// a valid index, std::invalid_argument when K is outside [1, 100].
IndexDistribution compose_digits(const DigitModel& dm, std::size_t k);

/// Pre-normalization mass that compose_digits places on indices < K.
double digit_mass(const DigitModel& dm, std::size_t k);

/// Decision source pi(a | H). Implementations must be safe to call
/// concurrently and must make every output a pure function of
/// (context, seed, configuration).
class Policy {
 public:
  virtual ~Policy() = default;

  /// One complete action (tool + literal args, or NO_OP). Unparseable
  /// output is returned as Action::invalid().
  virtual Action sample_action(const DecisionContext& ctx, std::uint64_t seed) = 0;

  /// m actions; sample i uses sample_seed(base_seed, i), so the first m
  /// samples do not depend on how many are requested.
  virtual std::vector<Action> sample_actions(const DecisionContext& ctx, int m, std::uint64_t base_seed);

  /// White-box distribution over ctx.candidates. Throws UnsupportedModeError
  /// when the backend cannot expose index probabilities.
  virtual IndexDistribution index_distribution(const DecisionContext& ctx) = 0;

  /// Arguments for a tool already chosen; NO_OP yields an empty NO_OP action.
  virtual Action generate_params(const DecisionContext& ctx, const std::string& tool) = 0;
};

std::uint64_t sample_seed(std::uint64_t base_seed, int index);

/// Schema-typed filler arguments for `tool`; never equal to any grounded key.
ArgMap placeholder_args(const ToolSpec& tool);

}  // namespace egb
