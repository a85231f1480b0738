// SPDX-License-Identifier: Apache-2.0

#pragma once

// Case files: one JSON array of case objects.
//
//   {
//     "id": "...", "query": "...", "category": "<one of the 12 labels>",
//     "plan": [ {"index": "1",   "text": "...", "kind": "high_level", "reference_action": null},
//               {"index": "1.1", "text": "...", "kind": "substep",
//                "reference_action": {"tool": "get_product_details",
//                                     "args": {"sku": "TF-WB-2023"}}} ],
//     "toolset": [ {"name": "...", "description": "...",
//                   "arguments": [{"name": "sku", "type": "string", "required": true}],
//                   "results":   [{"name": "product_id", "type": "string"}]} ],
//     "sim_dict": [ {"tool": "...", "args": {<canonical>}, "outcome": {...}},
//                   {"tool": "...", "default_outcome": {"status": "no_record_found"}} ],
//     "final_reference": {...}
//   }
//
// String arguments of the form OUTPUT_FROM_STEP_<i>.<j>.<field> are parsed
// into OutputRef values.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "egb/types.hpp"

namespace egb {

using Json = nlohmann::json;

Json literal_to_json(const Literal& value);
/// Throws std::invalid_argument for non-scalar JSON.
Literal literal_from_json(const Json& value);

Json action_to_json(const Action& action);
Json payload_to_json(const Payload& payload);

/// Parses one case object without validating cross-field invariants.
/// Throws ParseError naming the case id and offending field.
Case parse_case(const Json& doc);

/// Parses and validates every case; throws ValidationError listing all
/// violations found across the document.
std::vector<Case> parse_cases(const Json& doc);

std::vector<Case> load_cases(const std::filesystem::path& path);

Json case_to_json(const Case& c);
Json cases_to_json(std::span<const Case> cases);
void save_cases(const std::filesystem::path& path, std::span<const Case> cases);

/// Replaces every OutputRef with the referenced field of that substep's
/// observation in `history`. Throws UnresolvedReferenceError when the
/// substep was not executed or its observation lacks the field.
Action resolve_refs(const Action& action, const TrajectoryState& history);

/// Substep nodes in execution order; high-level nodes are dropped.
std::vector<PlanNode> plan_substeps(const Case& c);

/// Executes every reference action in plan order (NO_OP for no-tool
/// substeps). Throws on unresolvable references.
TrajectoryState golden_trajectory(const Case& c);

/// Every dataset and simulator invariant plus golden-path execution.
/// Empty iff the case is valid. Golden-path checks are skipped when
/// structural violations are present, so each defect is reported once.
std::vector<std::string> validate_case(const Case& c);

}  // namespace egb
