// SPDX-License-Identifier: Apache-2.0

#include "egb/policy.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "egb/error.hpp"
#include "egb/rng.hpp"

namespace egb {

std::string CandidateSet::name(std::size_t i) const {
  const ToolSpec* t = entries.at(i);
  return t ? t->name : std::string(kNoOp);
}

std::size_t CandidateSet::rank_of(std::string_view tool_name) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ToolSpec* t = entries[i];
    if (t ? t->name == tool_name : tool_name == kNoOp) return i;
  }
  return entries.size();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

CandidateSet retrieve_candidates(const Case& c, const PlanNode& substep, std::size_t k) {
  const auto sub_tokens = tokenize(substep.text);
  const auto query_tokens = tokenize(c.query);
  const std::set<std::string> sub_set(sub_tokens.begin(), sub_tokens.end());
  const std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());

  struct Scored {
    int score;
    const ToolSpec* tool;
  };
  std::vector<Scored> scored;
  scored.reserve(c.toolset.size());
  for (const auto& tool : c.toolset) {
    auto toks = tokenize(tool.name);
    auto desc = tokenize(tool.description);
    toks.insert(toks.end(), desc.begin(), desc.end());
    const std::set<std::string> tool_set(toks.begin(), toks.end());
    int score = 0;
    for (const auto& t : tool_set) score += 2 * static_cast<int>(sub_set.count(t)) + static_cast<int>(query_set.count(t));
    scored.push_back({score, &tool});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tool->name < b.tool->name;
  });

  const std::size_t keep = std::min({k, kMaxCandidates - 1, scored.size()});
  CandidateSet out;
  out.entries.reserve(keep + 1);
  for (std::size_t i = 0; i < keep; ++i) out.entries.push_back(scored[i].tool);
  out.entries.push_back(nullptr);
  return out;
}

namespace {

std::string quote_literal(const Literal& v) {
  if (std::holds_alternative<std::string>(v)) return "\"" + std::get<std::string>(v) + "\"";
  return literal_text(v);
}

void render_history(std::ostringstream& os, const DecisionContext& ctx) {
  if (ctx.history == nullptr || ctx.history->steps.empty()) {
    os << "History: (none)\n";
    return;
  }
  os << "History:\n";
  for (const auto& step : ctx.history->steps) {
    os << "  " << step.address.str() << " " << render_action(step.action) << " ->";
    if (step.observation.payload.empty()) os << " {}";
    for (const auto& [k, v] : step.observation.payload) os << " " << k << "=" << quote_literal(v);
    os << "\n";
  }
}

void render_plan(std::ostringstream& os, const DecisionContext& ctx) {
  os << "Query: " << ctx.case_->query << "\nPlan:\n";
  for (const auto& node : ctx.case_->plan) {
    os << (node.kind == NodeKind::HighLevel ? "" : "  ") << node.index.str() << " " << node.text << "\n";
  }
}

}  // namespace

std::string render_action(const Action& action) {
  std::string out = action.tool + "(";
  bool first = true;
  for (const auto& [name, value] : action.args) {
    if (!first) out += ", ";
    first = false;
    out += name + "=";
    if (const auto* ref = std::get_if<OutputRef>(&value)) {
      out += format_output_ref(*ref);
    } else {
      out += quote_literal(std::get<Literal>(value));
    }
  }
  return out + ")";
}

std::string render_prompt(const DecisionContext& ctx) {
  std::ostringstream os;
  render_plan(os, ctx);
  render_history(os, ctx);
  os << "Current substep: " << ctx.substep->index.str() << " " << ctx.substep->text << "\n";
  os << "Candidate tools:\n";
  for (std::size_t i = 0; i < ctx.candidates->size(); ++i) {
    const ToolSpec* t = ctx.candidates->tool(i);
    if (t == nullptr) {
      os << "- " << kNoOp << ": no tool is needed for this substep\n";
      continue;
    }
    os << "- " << t->name << "(";
    for (std::size_t a = 0; a < t->arguments.size(); ++a) {
      if (a) os << ", ";
      os << t->arguments[a].name << ": " << to_string(t->arguments[a].type);
      if (!t->arguments[a].required) os << "?";
    }
    os << "): " << t->description << "\n";
  }
  os << "Reply with a single JSON object {\"tool\": <name>, \"args\": {...}}. "
        "Use literal values taken from the query or the history.\n";
  return os.str();
}

std::string render_index_prompt(const DecisionContext& ctx) {
  std::ostringstream os;
  render_plan(os, ctx);
  render_history(os, ctx);
  os << "Current substep: " << ctx.substep->index.str() << " " << ctx.substep->text << "\n";
  os << "Candidate tools:\n";
  for (std::size_t i = 0; i < ctx.candidates->size(); ++i) {
    const ToolSpec* t = ctx.candidates->tool(i);
    os << i << ": " << ctx.candidates->name(i);
    if (t) os << " - " << t->description;
    os << "\n";
  }
  os << "Answer with the index (0-" << ctx.candidates->size() - 1 << ") of the best tool and nothing else.\n";
  return os.str();
}

double digit_mass(const DigitModel& dm, std::size_t k) {
  double total = 0.0;
  for (std::size_t d1 = 0; d1 < 10; ++d1) {
    if (d1 < k) total += dm.p1[d1] * dm.p_end[d1];
    for (std::size_t d2 = 0; d2 < 10; ++d2) {
      const std::size_t idx = d1 * 10 + d2;
      if (idx >= 10 && idx < k) total += dm.p1[d1] * dm.p2[d1][d2];
    }
  }
  return total;
}

IndexDistribution compose_digits(const DigitModel& dm, std::size_t k) {
  if (k < 1 || k > kMaxCandidates) {
    throw std::invalid_argument("compose_digits: K must be in [1, 100], got " + std::to_string(k));
  }
  IndexDistribution out;
  out.provenance = Provenance::DigitComposed;
  out.forward_passes = 11;
  out.probs.assign(k, 0.0);
  for (std::size_t d1 = 0; d1 < 10; ++d1) {
    if (d1 < k) out.probs[d1] += dm.p1[d1] * dm.p_end[d1];
    for (std::size_t d2 = 0; d2 < 10; ++d2) {
      const std::size_t idx = d1 * 10 + d2;
      if (idx >= 10 && idx < k) out.probs[idx] += dm.p1[d1] * dm.p2[d1][d2];
    }
  }
  double total = 0.0;
  for (double p : out.probs) total += p;
  if (!(total > 0.0)) {
    throw DegenerateDistributionError("digit composition put no mass on indices 0.." + std::to_string(k - 1));
  }
  for (double& p : out.probs) p /= total;
  return out;
}

std::uint64_t sample_seed(std::uint64_t base_seed, int index) {
  return derive_seed({base_seed, static_cast<std::uint64_t>(index)});
}

std::vector<Action> Policy::sample_actions(const DecisionContext& ctx, int m, std::uint64_t base_seed) {
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(std::max(m, 0)));
  for (int i = 0; i < m; ++i) out.push_back(sample_action(ctx, sample_seed(base_seed, i)));
  return out;
}

ArgMap placeholder_args(const ToolSpec& tool) {
  ArgMap out;
  for (const auto& a : tool.arguments) {
    switch (a.type) {
      case SemanticType::String: out.emplace(a.name, Literal{"unknown-" + a.name}); break;
      case SemanticType::Integer: out.emplace(a.name, Literal{std::int64_t{0}}); break;
      case SemanticType::Decimal: out.emplace(a.name, Literal{0.0}); break;
      case SemanticType::Date: out.emplace(a.name, Literal{std::string("1970-01-01")}); break;
      case SemanticType::Boolean: out.emplace(a.name, Literal{false}); break;
    }
  }
  return out;
}

}  // namespace egb
