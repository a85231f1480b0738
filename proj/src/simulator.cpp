// SPDX-License-Identifier: Apache-2.0

#include "egb/simulator.hpp"

#include "egb/canonical.hpp"
#include "egb/error.hpp"

namespace egb {

std::optional<CanonicalArgs> canonical_args(const ToolSpec& tool, const ArgMap& args) {
  CanonicalArgs out;
  for (const auto& [name, value] : args) {
    const auto* lit = std::get_if<Literal>(&value);
    if (lit == nullptr) {
      throw UnresolvedReferenceError("argument '" + name + "' of " + tool.name +
                                     " still holds " +
                                     format_output_ref(std::get<OutputRef>(value)));
    }
    const ArgSpec* spec = tool.find_arg(name);
    auto canon = try_canonicalize(*lit, spec ? spec->type : SemanticType::String);
    if (!canon) return std::nullopt;
    out.emplace(name, std::move(*canon));
  }
  return out;
}

std::map<std::string, std::string> canonical_payload(const Payload& payload, const ToolSpec* tool) {
  std::map<std::string, std::string> out;
  for (const auto& [field, value] : payload) {
    const ResultSpec* spec = tool ? tool->find_result(field) : nullptr;
    const SemanticType type = spec ? spec->type : SemanticType::String;
    auto canon = try_canonicalize(value, type);
    // A value that does not fit its declared type still compares by its
    // folded text rather than failing the whole payload.
    out.emplace(field, canon ? std::move(*canon) : canonical_string(literal_text(value)));
  }
  return out;
}

Payload default_payload(const Case& c, const std::string& tool) {
  if (auto it = c.sim_dict.defaults.find(tool); it != c.sim_dict.defaults.end()) return it->second;
  return Payload{{std::string(kDefaultStatusField), std::string(kDefaultStatusValue)}};
}

Observation execute(const Case& c, const Action& action) {
  if (action.is_no_op()) return Observation{{}, true};
  if (action.is_invalid()) {
    return Observation{{{std::string(kDefaultStatusField), std::string(kDefaultStatusValue)}}, false};
  }
  const ToolSpec* tool = c.find_tool(action.tool);
  if (tool == nullptr) {
    throw UnknownToolError("case '" + c.id + "': tool '" + action.tool + "' is not in the toolset");
  }
  if (auto canon = canonical_args(*tool, action.args)) {
    for (const auto& entry : c.sim_dict.entries) {
      if (entry.tool == action.tool && entry.args == *canon) return Observation{entry.outcome, true};
    }
  }
  return Observation{default_payload(c, action.tool), false};
}

const PlanNode* final_tool_substep(const Case& c) {
  for (auto it = c.plan.rbegin(); it != c.plan.rend(); ++it) {
    if (it->kind == NodeKind::Substep && it->reference_action) return &*it;
  }
  return nullptr;
}

bool judge_success(const Case& c, const TrajectoryState& trajectory, const JudgeOptions& options) {
  const PlanNode* last = final_tool_substep(c);
  if (last == nullptr) return false;
  const TrajectoryStep* step = trajectory.find(last->index);
  if (step == nullptr) return false;

  const ToolSpec* ref_tool = c.find_tool(last->reference_action->tool);
  auto got = canonical_payload(step->observation.payload, ref_tool);
  auto want = canonical_payload(c.final_reference, ref_tool);
  if (options.designated_field) {
    auto g = got.find(*options.designated_field);
    auto w = want.find(*options.designated_field);
    return g != got.end() && w != want.end() && g->second == w->second;
  }
  return got == want;
}

}  // namespace egb
