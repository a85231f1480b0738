// SPDX-License-Identifier: Apache-2.0

#pragma once

// Core domain types shared by every module: plan addresses, tool schemas,
// actions, observations, cases and trajectories.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace egb {

/// Scalar value as it appears in tool arguments and outcome payloads.
using Literal = std::variant<std::string, std::int64_t, double, bool>;

/// Text form of a literal before any canonicalization. Doubles use the
/// shortest round-trip fixed notation ("35" for 35.0).
std::string literal_text(const Literal& value);

/// Plan address: (i) for a high-level step, (i, j) with j >= 1 for a substep.
struct StepAddr {
  int step = 0;
  int sub = 0;

  bool is_substep() const noexcept { return sub > 0; }
  std::string str() const;

  auto operator<=>(const StepAddr&) const = default;
};

/// Parses "3" or "3.1". Returns nullopt on anything else.
std::optional<StepAddr> parse_step_addr(std::string_view text);

/// Pointer to a result field produced by an earlier substep.
/// Serialized as OUTPUT_FROM_STEP_<i>.<j>.<field>.
struct OutputRef {
  StepAddr substep;
  std::string field;

  auto operator<=>(const OutputRef&) const = default;
};

inline constexpr std::string_view kOutputRefPrefix = "OUTPUT_FROM_STEP_";

std::string format_output_ref(const OutputRef& ref);

/// Parses the placeholder grammar. Returns nullopt when `text` does not start
/// with the placeholder prefix; throws std::invalid_argument when it does but
/// the remainder is malformed.
std::optional<OutputRef> parse_output_ref(std::string_view text);

using ArgValue = std::variant<Literal, OutputRef>;
using ArgMap = std::map<std::string, ArgValue>;
using Payload = std::map<std::string, Literal>;

/// Tool name of the explicit "no tool required" action.
inline constexpr std::string_view kNoOp = "NO_OP";
/// Reserved bucket for unparseable policy output. Never executed as a tool
/// and never offered as a branch alternative.
inline constexpr std::string_view kInvalid = "__INVALID__";

struct Action {
  std::string tool;
  ArgMap args;

  static Action no_op() { return Action{std::string(kNoOp), {}}; }
  static Action invalid() { return Action{std::string(kInvalid), {}}; }

  bool is_no_op() const noexcept { return tool == kNoOp; }
  bool is_invalid() const noexcept { return tool == kInvalid; }
  bool has_refs() const;

  bool operator==(const Action&) const = default;
};

enum class SemanticType { String, Integer, Decimal, Date, Boolean };

std::string_view to_string(SemanticType type);
std::optional<SemanticType> parse_semantic_type(std::string_view text);

struct ArgSpec {
  std::string name;
  SemanticType type = SemanticType::String;
  bool required = true;

  bool operator==(const ArgSpec&) const = default;
};

struct ResultSpec {
  std::string name;
  SemanticType type = SemanticType::String;

  bool operator==(const ResultSpec&) const = default;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ArgSpec> arguments;
  std::vector<ResultSpec> results;

  const ArgSpec* find_arg(std::string_view arg) const;
  const ResultSpec* find_result(std::string_view field) const;

  bool operator==(const ToolSpec&) const = default;
};

enum class NodeKind { HighLevel, Substep };

struct PlanNode {
  StepAddr index;
  std::string text;
  NodeKind kind = NodeKind::Substep;
  /// Absent on a substep means "No Tool Required"; always absent on
  /// high-level nodes.
  std::optional<Action> reference_action;

  bool requires_tool() const noexcept { return reference_action.has_value(); }
  /// Reference tool name, or NO_OP for a no-tool substep.
  std::string reference_tool() const;

  bool operator==(const PlanNode&) const = default;
};

struct Observation {
  Payload payload;
  /// True iff a dictionary entry matched (NO_OP counts as matched).
  bool matched = false;

  bool operator==(const Observation&) const = default;
};

/// Grounded outcome for one canonical (tool, args) key.
struct SimEntry {
  std::string tool;
  std::map<std::string, std::string> args;  // canonical text per argument
  Payload outcome;

  bool operator==(const SimEntry&) const = default;
};

struct SimulationDictionary {
  std::vector<SimEntry> entries;
  std::map<std::string, Payload> defaults;

  bool operator==(const SimulationDictionary&) const = default;
};

/// Reserved field present in every default payload.
inline constexpr std::string_view kDefaultStatusField = "status";
inline constexpr std::string_view kDefaultStatusValue = "no_record_found";

struct Case {
  std::string id;
  std::string query;
  std::string category;
  std::vector<PlanNode> plan;
  std::vector<ToolSpec> toolset;
  SimulationDictionary sim_dict;
  Payload final_reference;

  const ToolSpec* find_tool(std::string_view name) const;
  const PlanNode* find_node(StepAddr addr) const;

  bool operator==(const Case&) const = default;
};

/// The 12 task-category labels.
const std::vector<std::string>& task_categories();

/// One probability bucket of a per-substep tool-selection distribution.
/// `calls` holds the sampled actions for that tool, in sample order; it is
/// empty when parameters are generated lazily.
struct ToolVote {
  std::string tool;
  double probability = 0.0;
  std::vector<Action> calls;

  bool operator==(const ToolVote&) const = default;
};

/// Per-substep uncertainty record kept from the first pass.
struct StepDecisionRecord {
  StepAddr substep;
  double entropy = 0.0;  // nats
  std::vector<ToolVote> distribution;
  Action executed;
  Observation observation;

  const ToolVote* find(std::string_view tool) const;

  bool operator==(const StepDecisionRecord&) const = default;
};

struct TrajectoryStep {
  StepAddr address;
  Action action;
  Observation observation;

  bool operator==(const TrajectoryStep&) const = default;
};

/// Replayable execution history: the H of the decision process.
struct TrajectoryState {
  std::vector<TrajectoryStep> steps;
  std::vector<StepDecisionRecord> decisions;  // first pass only
  std::size_t cursor = 0;                     // position of the next substep

  const TrajectoryStep* find(StepAddr addr) const;

  bool operator==(const TrajectoryState&) const = default;
};

}  // namespace egb
