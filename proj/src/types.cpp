// SPDX-License-Identifier: Apache-2.0

#include "egb/types.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <stdexcept>

namespace egb {

namespace {

std::optional<int> parse_positive_int(std::string_view s) {
  if (s.empty() || s.size() > 6) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) return std::nullopt;
  return v;
}

}  // namespace

std::string literal_text(const Literal& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else {
          std::array<char, 512> buf{};
          auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                         std::chars_format::fixed);
          if (ec != std::errc{}) return std::to_string(v);
          return std::string(buf.data(), ptr);
        }
      },
      value);
}

std::string StepAddr::str() const {
  if (sub > 0) return std::to_string(step) + "." + std::to_string(sub);
  return std::to_string(step);
}

std::optional<StepAddr> parse_step_addr(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    auto i = parse_positive_int(text);
    if (!i) return std::nullopt;
    return StepAddr{*i, 0};
  }
  auto i = parse_positive_int(text.substr(0, dot));
  auto j = parse_positive_int(text.substr(dot + 1));
  if (!i || !j) return std::nullopt;
  return StepAddr{*i, *j};
}

std::string format_output_ref(const OutputRef& ref) {
  return std::string(kOutputRefPrefix) + ref.substep.str() + "." + ref.field;
}

std::optional<OutputRef> parse_output_ref(std::string_view text) {
  if (!text.starts_with(kOutputRefPrefix)) return std::nullopt;
  auto rest = text.substr(kOutputRefPrefix.size());
  const auto d1 = rest.find('.');
  const auto d2 = d1 == std::string_view::npos ? d1 : rest.find('.', d1 + 1);
  if (d2 == std::string_view::npos || d2 + 1 >= rest.size()) {
    throw std::invalid_argument("malformed output reference '" + std::string(text) +
                                "' (expected OUTPUT_FROM_STEP_<i>.<j>.<field>)");
  }
  auto addr = parse_step_addr(rest.substr(0, d2));
  if (!addr || !addr->is_substep()) {
    throw std::invalid_argument("output reference '" + std::string(text) +
                                "' must name a substep address <i>.<j>");
  }
  return OutputRef{*addr, std::string(rest.substr(d2 + 1))};
}

bool Action::has_refs() const {
  return std::any_of(args.begin(), args.end(), [](const auto& kv) {
    return std::holds_alternative<OutputRef>(kv.second);
  });
}

std::string_view to_string(SemanticType type) {
  switch (type) {
    case SemanticType::String: return "string";
    case SemanticType::Integer: return "integer";
    case SemanticType::Decimal: return "decimal";
    case SemanticType::Date: return "date";
    case SemanticType::Boolean: return "boolean";
  }
  return "string";
}

std::optional<SemanticType> parse_semantic_type(std::string_view text) {
  if (text == "string") return SemanticType::String;
  if (text == "integer") return SemanticType::Integer;
  if (text == "decimal") return SemanticType::Decimal;
  if (text == "date") return SemanticType::Date;
  if (text == "boolean") return SemanticType::Boolean;
  return std::nullopt;
}

const ArgSpec* ToolSpec::find_arg(std::string_view arg) const {
  auto it = std::find_if(arguments.begin(), arguments.end(),
                         [&](const ArgSpec& a) { return a.name == arg; });
  return it == arguments.end() ? nullptr : &*it;
}

const ResultSpec* ToolSpec::find_result(std::string_view field) const {
  auto it = std::find_if(results.begin(), results.end(),
                         [&](const ResultSpec& r) { return r.name == field; });
  return it == results.end() ? nullptr : &*it;
}

std::string PlanNode::reference_tool() const {
  return reference_action ? reference_action->tool : std::string(kNoOp);
}

const ToolSpec* Case::find_tool(std::string_view name) const {
  auto it = std::find_if(toolset.begin(), toolset.end(),
                         [&](const ToolSpec& t) { return t.name == name; });
  return it == toolset.end() ? nullptr : &*it;
}

const PlanNode* Case::find_node(StepAddr addr) const {
  auto it = std::find_if(plan.begin(), plan.end(),
                         [&](const PlanNode& n) { return n.index == addr; });
  return it == plan.end() ? nullptr : &*it;
}

const std::vector<std::string>& task_categories() {
  static const std::vector<std::string> kCategories = {
      "Product Management",    "Inventory Management",    "Order Processing",
      "Shipping & Fulfillment", "Pricing & Promotions",   "Subscription Management",
      "Customer Service",      "Returns & Refunds",       "Analytics & Reporting",
      "Catalog Management",    "Review Management",       "Miscellaneous",
  };
  return kCategories;
}

const ToolVote* StepDecisionRecord::find(std::string_view tool) const {
  auto it = std::find_if(distribution.begin(), distribution.end(),
                         [&](const ToolVote& v) { return v.tool == tool; });
  return it == distribution.end() ? nullptr : &*it;
}

const TrajectoryStep* TrajectoryState::find(StepAddr addr) const {
  auto it = std::find_if(steps.begin(), steps.end(),
                         [&](const TrajectoryStep& s) { return s.address == addr; });
  return it == steps.end() ? nullptr : &*it;
}

}  // namespace egb
