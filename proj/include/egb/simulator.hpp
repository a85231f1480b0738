// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>

#include "egb/types.hpp"

namespace egb {

using CanonicalArgs = std::map<std::string, std::string>;

/// Canonical argument map for a literal-only action against `tool`'s schema.
/// Arguments the schema does not declare are canonicalized as strings.
/// Returns nullopt if any value fails its semantic type (a mismatch, not an error).
std::optional<CanonicalArgs> canonical_args(const ToolSpec& tool, const ArgMap& args);

/// Payload canonicalized field by field using `tool`'s result types;
/// fields unknown to the schema (or a null tool) are read as strings.
std::map<std::string, std::string> canonical_payload(const Payload& payload, const ToolSpec* tool);

/// Per-tool fallback payload returned on a dictionary miss.
Payload default_payload(const Case& c, const std::string& tool);

/// Executes one literal-only action against the case's simulation dictionary.
///  NO_OP           -> empty payload, matched
///  dictionary hit  -> stored outcome, matched
///  miss            -> tool default, not matched
///  INVALID         -> reserved default, not matched
/// Throws UnknownToolError for a tool outside the toolset and
/// UnresolvedReferenceError if an OutputRef is still present.
Observation execute(const Case& c, const Action& action);

/// Last substep of the plan that carries a reference action.
const PlanNode* final_tool_substep(const Case& c);

struct JudgeOptions {
  /// When set, only this field of the final payload is compared.
  std::optional<std::string> designated_field;
};

/// Plan-level success: the observation at the final tool-bearing substep,
/// canonicalized, equals final_reference. Intermediate missteps that do not
/// change that outcome are irrelevant.
bool judge_success(const Case& c, const TrajectoryState& trajectory, const JudgeOptions& options = {});

}  // namespace egb
