// SPDX-License-Identifier: Apache-2.0

#include "egb/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "egb/canonical.hpp"
#include "egb/error.hpp"
#include "egb/simulator.hpp"

namespace egb {

namespace {

// Tracks the case id and the field path for error messages.
class Cursor {
 public:
  explicit Cursor(std::string case_id) : case_id_(std::move(case_id)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(case_id_, field, what);
  }

  const Json& require(const Json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
    return *it;
  }

  std::string string_at(const Json& obj, const std::string& key, const std::string& path) const {
    const Json& v = require(obj, key, path);
    if (!v.is_string()) fail(path.empty() ? key : path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  const Json& array_at(const Json& obj, const std::string& key, const std::string& path) const {
    const Json& v = require(obj, key, path);
    if (!v.is_array()) fail(path.empty() ? key : path + "." + key, "expected an array");
    return v;
  }

 private:
  std::string case_id_;
};

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

SemanticType parse_type(const Cursor& cur, const Json& obj, const std::string& path) {
  const std::string text = cur.string_at(obj, "type", path);
  auto t = parse_semantic_type(text);
  if (!t) cur.fail(path + ".type", "unknown semantic type '" + text + "'");
  return *t;
}

ToolSpec parse_tool(const Cursor& cur, const Json& obj, const std::string& path) {
  ToolSpec tool;
  tool.name = cur.string_at(obj, "name", path);
  tool.description = obj.contains("description") && obj["description"].is_string()
                         ? obj["description"].get<std::string>()
                         : std::string{};
  const Json& args = cur.array_at(obj, "arguments", path);
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string p = idx(path + ".arguments", i);
    ArgSpec a;
    a.name = cur.string_at(args[i], "name", p);
    a.type = parse_type(cur, args[i], p);
    if (auto it = args[i].find("required"); it != args[i].end()) {
      if (!it->is_boolean()) cur.fail(p + ".required", "expected a boolean");
      a.required = it->get<bool>();
    }
    tool.arguments.push_back(std::move(a));
  }
  const Json& results = cur.array_at(obj, "results", path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string p = idx(path + ".results", i);
    tool.results.push_back(ResultSpec{cur.string_at(results[i], "name", p), parse_type(cur, results[i], p)});
  }
  return tool;
}

Payload parse_payload(const Cursor& cur, const Json& obj, const std::string& path) {
  if (!obj.is_object()) cur.fail(path, "expected an object");
  Payload out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    try {
      out.emplace(it.key(), literal_from_json(it.value()));
    } catch (const std::invalid_argument& e) {
      cur.fail(path + "." + it.key(), e.what());
    }
  }
  return out;
}

Action parse_action(const Cursor& cur, const Json& obj, const std::string& path) {
  Action a;
  a.tool = cur.string_at(obj, "tool", path);
  if (auto it = obj.find("args"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) cur.fail(path + ".args", "expected an object");
    for (auto arg = it->begin(); arg != it->end(); ++arg) {
      const std::string p = path + ".args." + arg.key();
      try {
        if (arg->is_string()) {
          if (auto ref = parse_output_ref(arg->get<std::string>())) {
            a.args.emplace(arg.key(), *ref);
            continue;
          }
        }
        a.args.emplace(arg.key(), literal_from_json(*arg));
      } catch (const std::invalid_argument& e) {
        cur.fail(p, e.what());
      }
    }
  }
  return a;
}

bool is_snake_identifier(std::string_view s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool is_field_name(std::string_view s) {
  // Result and argument names: identifiers, optionally dotted for flattened structures.
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.';
  });
}

}  // namespace

Json literal_to_json(const Literal& value) {
  return std::visit([](const auto& v) { return Json(v); }, value);
}

Literal literal_from_json(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) return value.get<double>();
  throw std::invalid_argument("expected a scalar literal, got " + std::string(value.type_name()));
}

Json action_to_json(const Action& action) {
  Json args = Json::object();
  for (const auto& [name, value] : action.args) {
    if (const auto* ref = std::get_if<OutputRef>(&value)) {
      args[name] = format_output_ref(*ref);
    } else {
      args[name] = literal_to_json(std::get<Literal>(value));
    }
  }
  return Json{{"tool", action.tool}, {"args", std::move(args)}};
}

Json payload_to_json(const Payload& payload) {
  Json out = Json::object();
  for (const auto& [k, v] : payload) out[k] = literal_to_json(v);
  return out;
}

Case parse_case(const Json& doc) {
  std::string id;
  if (doc.is_object() && doc.contains("id") && doc["id"].is_string()) id = doc["id"].get<std::string>();
  const Cursor cur(id);
  if (!doc.is_object()) cur.fail("", "case must be an object");

  Case c;
  c.id = cur.string_at(doc, "id", "");
  c.query = cur.string_at(doc, "query", "");
  c.category = cur.string_at(doc, "category", "");

  const Json& plan = cur.array_at(doc, "plan", "");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string p = idx("plan", i);
    PlanNode node;
    const std::string index = cur.string_at(plan[i], "index", p);
    auto addr = parse_step_addr(index);
    if (!addr) cur.fail(p + ".index", "expected '<i>' or '<i>.<j>', got '" + index + "'");
    node.index = *addr;
    node.text = cur.string_at(plan[i], "text", p);
    const std::string kind = cur.string_at(plan[i], "kind", p);
    if (kind == "high_level") {
      node.kind = NodeKind::HighLevel;
    } else if (kind == "substep") {
      node.kind = NodeKind::Substep;
    } else {
      cur.fail(p + ".kind", "expected 'high_level' or 'substep', got '" + kind + "'");
    }
    if (auto it = plan[i].find("reference_action"); it != plan[i].end() && !it->is_null()) {
      node.reference_action = parse_action(cur, *it, p + ".reference_action");
    }
    c.plan.push_back(std::move(node));
  }

  const Json& tools = cur.array_at(doc, "toolset", "");
  for (std::size_t i = 0; i < tools.size(); ++i) c.toolset.push_back(parse_tool(cur, tools[i], idx("toolset", i)));

  const Json& sim = cur.array_at(doc, "sim_dict", "");
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const std::string p = idx("sim_dict", i);
    const std::string tool = cur.string_at(sim[i], "tool", p);
    if (auto it = sim[i].find("default_outcome"); it != sim[i].end()) {
      if (c.sim_dict.defaults.count(tool)) cur.fail(p + ".tool", "duplicate default for '" + tool + "'");
      c.sim_dict.defaults.emplace(tool, parse_payload(cur, *it, p + ".default_outcome"));
      continue;
    }
    SimEntry entry;
    entry.tool = tool;
    const Json& args = cur.require(sim[i], "args", p);
    if (!args.is_object()) cur.fail(p + ".args", "expected an object");
    for (auto a = args.begin(); a != args.end(); ++a) {
      try {
        entry.args.emplace(a.key(), literal_text(literal_from_json(a.value())));
      } catch (const std::invalid_argument& e) {
        cur.fail(p + ".args." + a.key(), e.what());
      }
    }
    entry.outcome = parse_payload(cur, cur.require(sim[i], "outcome", p), p + ".outcome");
    c.sim_dict.entries.push_back(std::move(entry));
  }

  c.final_reference = parse_payload(cur, cur.require(doc, "final_reference", ""), "final_reference");
  return c;
}

std::vector<Case> parse_cases(const Json& doc) {
  if (!doc.is_array()) throw ParseError("", "", "case file must hold a JSON array of cases");
  std::vector<Case> cases;
  cases.reserve(doc.size());
  for (const auto& item : doc) cases.push_back(parse_case(item));

  std::vector<std::string> violations;
  std::set<std::string> ids;
  for (const auto& c : cases) {
    if (!ids.insert(c.id).second) violations.push_back("duplicate case id '" + c.id + "'");
    for (auto& v : validate_case(c)) violations.push_back("case '" + c.id + "': " + v);
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return cases;
}

std::vector<Case> load_cases(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("", "", "cannot open case file '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError("", "", "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_cases(doc);
}

Json case_to_json(const Case& c) {
  Json plan = Json::array();
  for (const auto& node : c.plan) {
    plan.push_back(Json{
        {"index", node.index.str()},
        {"text", node.text},
        {"kind", node.kind == NodeKind::HighLevel ? "high_level" : "substep"},
        {"reference_action", node.reference_action ? action_to_json(*node.reference_action) : Json(nullptr)},
    });
  }
  Json tools = Json::array();
  for (const auto& t : c.toolset) {
    Json args = Json::array();
    for (const auto& a : t.arguments) {
      args.push_back(Json{{"name", a.name}, {"type", to_string(a.type)}, {"required", a.required}});
    }
    Json results = Json::array();
    for (const auto& r : t.results) results.push_back(Json{{"name", r.name}, {"type", to_string(r.type)}});
    tools.push_back(Json{{"name", t.name}, {"description", t.description}, {"arguments", args}, {"results", results}});
  }
  Json sim = Json::array();
  for (const auto& e : c.sim_dict.entries) {
    sim.push_back(Json{{"tool", e.tool}, {"args", e.args}, {"outcome", payload_to_json(e.outcome)}});
  }
  for (const auto& [tool, payload] : c.sim_dict.defaults) {
    sim.push_back(Json{{"tool", tool}, {"default_outcome", payload_to_json(payload)}});
  }
  return Json{
      {"id", c.id},
      {"query", c.query},
      {"category", c.category},
      {"plan", std::move(plan)},
      {"toolset", std::move(tools)},
      {"sim_dict", std::move(sim)},
      {"final_reference", payload_to_json(c.final_reference)},
  };
}

Json cases_to_json(std::span<const Case> cases) {
  Json out = Json::array();
  for (const auto& c : cases) out.push_back(case_to_json(c));
  return out;
}

void save_cases(const std::filesystem::path& path, std::span<const Case> cases) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write case file '" + path.string() + "'");
  out << cases_to_json(cases).dump(1) << "\n";
}

Action resolve_refs(const Action& action, const TrajectoryState& history) {
  Action out{action.tool, {}};
  for (const auto& [name, value] : action.args) {
    const auto* ref = std::get_if<OutputRef>(&value);
    if (ref == nullptr) {
      out.args.emplace(name, value);
      continue;
    }
    const TrajectoryStep* step = history.find(ref->substep);
    if (step == nullptr) {
      throw UnresolvedReferenceError(format_output_ref(*ref) + ": substep " + ref->substep.str() +
                                     " has not been executed");
    }
    auto field = step->observation.payload.find(ref->field);
    if (field == step->observation.payload.end()) {
      throw UnresolvedReferenceError(format_output_ref(*ref) + ": observation of " +
                                     ref->substep.str() + " has no field '" + ref->field + "'");
    }
    out.args.emplace(name, field->second);
  }
  return out;
}

std::vector<PlanNode> plan_substeps(const Case& c) {
  std::vector<PlanNode> out;
  for (const auto& node : c.plan) {
    if (node.kind == NodeKind::Substep) out.push_back(node);
  }
  return out;
}

TrajectoryState golden_trajectory(const Case& c) {
  TrajectoryState h;
  for (const auto& node : c.plan) {
    if (node.kind != NodeKind::Substep) continue;
    Action a = node.reference_action ? resolve_refs(*node.reference_action, h) : Action::no_op();
    Observation o = execute(c, a);
    h.steps.push_back(TrajectoryStep{node.index, std::move(a), std::move(o)});
    ++h.cursor;
  }
  return h;
}

std::vector<std::string> validate_case(const Case& c) {
  std::vector<std::string> v;
  auto add = [&](std::string s) { v.push_back(std::move(s)); };

  if (c.id.empty()) add("id is empty");
  const auto& cats = task_categories();
  if (std::find(cats.begin(), cats.end(), c.category) == cats.end()) {
    add("category '" + c.category + "' is not one of the 12 task categories");
  }

  // Tool schemas.
  std::set<std::string> tool_names;
  for (const auto& t : c.toolset) {
    if (!is_snake_identifier(t.name)) add("tool name '" + t.name + "' is not a snake_case identifier");
    if (!tool_names.insert(t.name).second) add("duplicate tool name '" + t.name + "'");
    std::set<std::string> arg_names;
    for (const auto& a : t.arguments) {
      if (!is_field_name(a.name)) add("tool '" + t.name + "' argument name '" + a.name + "' is not an identifier");
      if (!arg_names.insert(a.name).second) add("tool '" + t.name + "' has duplicate argument '" + a.name + "'");
    }
    if (t.results.empty()) add("tool '" + t.name + "' declares no result field");
  }

  // Plan structure and references.
  std::set<int> high_level_seen;
  std::optional<StepAddr> prev;
  std::map<StepAddr, const PlanNode*> earlier_substeps;
  for (const auto& node : c.plan) {
    const std::string at = "plan node " + node.index.str();
    if (prev && !(*prev < node.index)) add(at + " is not in increasing address order");
    prev = node.index;

    if (node.kind == NodeKind::HighLevel) {
      if (node.index.is_substep()) add(at + " is high_level but has a substep address");
      if (node.reference_action) add(at + " is high_level but carries a reference_action");
      high_level_seen.insert(node.index.step);
      continue;
    }
    if (!node.index.is_substep()) add(at + " is a substep but has a high-level address");
    if (!high_level_seen.count(node.index.step)) add(at + " has no parent high-level step " + std::to_string(node.index.step));

    if (node.reference_action) {
      const Action& a = *node.reference_action;
      const ToolSpec* tool = c.find_tool(a.tool);
      if (a.is_no_op() || a.is_invalid()) {
        add(at + " reference_action must name a tool (use null for no tool)");
      } else if (tool == nullptr) {
        add(at + " reference_action names tool '" + a.tool + "' absent from the toolset");
      } else {
        for (const auto& [name, _] : a.args) {
          if (!tool->find_arg(name)) add(at + " passes undeclared argument '" + name + "' to " + a.tool);
        }
        for (const auto& spec : tool->arguments) {
          if (spec.required && !a.args.count(spec.name)) {
            add(at + " omits required argument '" + spec.name + "' of " + a.tool);
          }
        }
      }
      for (const auto& [name, value] : a.args) {
        const auto* ref = std::get_if<OutputRef>(&value);
        if (ref == nullptr) continue;
        const std::string r = format_output_ref(*ref);
        auto src = earlier_substeps.find(ref->substep);
        if (src == earlier_substeps.end()) {
          add(at + " argument '" + name + "' references " + r + ", which is not an earlier substep");
          continue;
        }
        if (!src->second->reference_action) {
          add(at + " argument '" + name + "' references " + r + ", a substep with no tool");
          continue;
        }
        const ToolSpec* src_tool = c.find_tool(src->second->reference_action->tool);
        if (src_tool && !src_tool->find_result(ref->field)) {
          add(at + " argument '" + name + "' references " + r + ", but " + src_tool->name +
              " has no result field '" + ref->field + "'");
        }
      }
    }
    earlier_substeps.emplace(node.index, &node);
  }
  if (final_tool_substep(c) == nullptr) add("plan has no tool-bearing substep");

  // Simulation dictionary.
  std::set<std::string> outcome_values;
  for (const auto& e : c.sim_dict.entries) {
    const ToolSpec* tool = c.find_tool(e.tool);
    if (tool == nullptr) {
      add("sim_dict entry names tool '" + e.tool + "' absent from the toolset");
      continue;
    }
    for (const auto& [name, text] : e.args) {
      const ArgSpec* spec = tool->find_arg(name);
      auto canon = try_canonicalize(Literal{text}, spec ? spec->type : SemanticType::String);
      if (!canon || *canon != text) {
        add("sim_dict entry for " + e.tool + " argument '" + name + "' value '" + text + "' is not canonical");
      }
    }
    for (const auto& [_, val] : e.outcome) outcome_values.insert(canonical_string(literal_text(val)));
  }
  for (std::size_t i = 0; i < c.sim_dict.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < c.sim_dict.entries.size(); ++j) {
      const auto& a = c.sim_dict.entries[i];
      const auto& b = c.sim_dict.entries[j];
      if (a.tool == b.tool && a.args == b.args && a.outcome != b.outcome) {
        add("sim_dict has conflicting outcomes for the same " + a.tool + " invocation");
      }
    }
  }
  for (const auto& t : c.toolset) {
    auto it = c.sim_dict.defaults.find(t.name);
    if (it == c.sim_dict.defaults.end()) {
      add("sim_dict has no default outcome for tool '" + t.name + "'");
      continue;
    }
    auto status = it->second.find(std::string(kDefaultStatusField));
    if (status == it->second.end() || literal_text(status->second) != kDefaultStatusValue) {
      add("default outcome of '" + t.name + "' lacks status=no_record_found");
    }
    for (const auto& [field, val] : it->second) {
      if (outcome_values.count(canonical_string(literal_text(val)))) {
        add("default outcome of '" + t.name + "' field '" + field + "' repeats a grounded outcome value");
      }
    }
  }
  for (const auto& [tool, _] : c.sim_dict.defaults) {
    if (!c.find_tool(tool)) add("sim_dict default names tool '" + tool + "' absent from the toolset");
  }

  if (!v.empty()) return v;

  // Golden path.
  TrajectoryState h;
  for (const auto& node : c.plan) {
    if (node.kind != NodeKind::Substep) continue;
    Action a = Action::no_op();
    if (node.reference_action) {
      try {
        a = resolve_refs(*node.reference_action, h);
      } catch (const UnresolvedReferenceError& e) {
        add("golden path: substep " + node.index.str() + ": " + e.what());
        return v;
      }
    }
    Observation o = execute(c, a);
    if (node.reference_action && !o.matched) {
      add("golden path: reference action at substep " + node.index.str() + " (" + a.tool +
          ") has no matching sim_dict entry");
    }
    h.steps.push_back(TrajectoryStep{node.index, std::move(a), std::move(o)});
  }
  if (v.empty() && !judge_success(c, h)) {
    add("final_reference does not equal the outcome of the last tool-bearing substep");
  }
  return v;
}

}  // namespace egb
