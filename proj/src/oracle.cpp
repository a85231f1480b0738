// SPDX-License-Identifier: Apache-2.0

#include "egb/oracle.hpp"

#include <fstream>

#include "egb/dataset.hpp"
#include "egb/error.hpp"
#include "egb/rng.hpp"

namespace egb {

const OracleRow& OracleSpec::row(const std::string& case_id, StepAddr addr) const {
  if (auto c = cases.find(case_id); c != cases.end()) {
    if (auto r = c->second.find(addr); r != c->second.end()) return r->second;
  }
  return fallback;
}

namespace {

Json row_to_json(const OracleRow& row) {
  Json conf = Json::array();
  for (const auto& cw : row.confusion) conf.push_back(Json{{"tool", cw.tool}, {"weight", cw.weight}});
  Json out{{"p_correct", row.p_correct}};
  if (!row.confusion.empty()) out["confusion"] = std::move(conf);
  if (row.no_op > 0.0) out["no_op"] = row.no_op;
  if (row.arg_error > 0.0) out["arg_error"] = row.arg_error;
  return out;
}

double probability_at(const Json& obj, const char* key, double fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double v = it->get<double>();
  if (v < 0.0 || v > 1.0) throw ConfigError(where + "." + key + " must lie in [0, 1]");
  return v;
}

OracleRow row_from_json(const Json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  OracleRow row;
  row.p_correct = probability_at(obj, "p_correct", 1.0, where);
  row.no_op = probability_at(obj, "no_op", 0.0, where);
  row.arg_error = probability_at(obj, "arg_error", 0.0, where);
  if (auto it = obj.find("confusion"); it != obj.end()) {
    if (!it->is_array()) throw ConfigError(where + ".confusion must be an array");
    for (const auto& item : *it) {
      if (!item.is_object() || !item.contains("tool") || !item["tool"].is_string()) {
        throw ConfigError(where + ".confusion entries need a string 'tool'");
      }
      const double w = probability_at(item, "weight", 0.0, where + ".confusion");
      row.confusion.push_back({item["tool"].get<std::string>(), w});
    }
  }
  return row;
}

}  // namespace

Json oracle_spec_to_json(const OracleSpec& spec) {
  Json cases = Json::object();
  for (const auto& [id, rows] : spec.cases) {
    Json r = Json::object();
    for (const auto& [addr, row] : rows) r[addr.str()] = row_to_json(row);
    cases[id] = std::move(r);
  }
  return Json{{"default", row_to_json(spec.fallback)}, {"cases", std::move(cases)}};
}

OracleSpec oracle_spec_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("oracle spec must be an object");
  OracleSpec spec;
  if (auto it = doc.find("default"); it != doc.end()) spec.fallback = row_from_json(*it, "default");
  if (auto it = doc.find("cases"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("oracle spec 'cases' must be an object");
    for (auto c = it->begin(); c != it->end(); ++c) {
      if (!c->is_object()) throw ConfigError("oracle spec cases." + c.key() + " must be an object");
      auto& rows = spec.cases[c.key()];
      for (auto r = c->begin(); r != c->end(); ++r) {
        auto addr = parse_step_addr(r.key());
        if (!addr || !addr->is_substep()) {
          throw ConfigError("oracle spec cases." + c.key() + ": '" + r.key() + "' is not a substep address");
        }
        rows[*addr] = row_from_json(*r, "cases." + c.key() + "." + r.key());
      }
    }
  }
  return spec;
}

OracleSpec load_oracle_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open oracle spec '" + path.string() + "'");
  try {
    return oracle_spec_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ConfigError("oracle spec '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void save_oracle_spec(const std::filesystem::path& path, const OracleSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write oracle spec '" + path.string() + "'");
  out << oracle_spec_to_json(spec).dump(1) << "\n";
}

std::vector<double> OraclePolicy::candidate_weights(const DecisionContext& ctx) const {
  const CandidateSet& cands = *ctx.candidates;
  const OracleRow& row = spec_.row(ctx.case_->id, ctx.substep->index);
  std::vector<double> w(cands.size(), 0.0);
  std::vector<bool> named(cands.size(), false);
  double assigned = 0.0;

  auto put = [&](std::string_view tool, double weight) {
    assigned += weight;
    const std::size_t r = cands.rank_of(tool);
    if (r < cands.size()) {
      w[r] += weight;
      named[r] = true;
    }
  };
  put(ctx.substep->reference_tool(), row.p_correct);
  for (const auto& cw : row.confusion) put(cw.tool, cw.weight);
  if (row.no_op > 0.0) put(kNoOp, row.no_op);

  const double residual = 1.0 - assigned;
  if (residual > 1e-12) {
    std::size_t free = 0;
    for (std::size_t i = 0; i + 1 < cands.size(); ++i) free += named[i] ? 0 : 1;
    if (free > 0) {
      for (std::size_t i = 0; i + 1 < cands.size(); ++i) {
        if (!named[i]) w[i] += residual / static_cast<double>(free);
      }
    }
  }

  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) {
    std::fill(w.begin(), w.end(), 0.0);
    w.back() = 1.0;
    return w;
  }
  for (double& x : w) x /= total;
  return w;
}

Action OraclePolicy::reference_call(const DecisionContext& ctx) const {
  const auto& ref = *ctx.substep->reference_action;
  Action out{ref.tool, {}};
  for (const auto& [name, value] : ref.args) {
    const auto* r = std::get_if<OutputRef>(&value);
    if (r == nullptr) {
      out.args.emplace(name, value);
      continue;
    }
    const TrajectoryStep* step = ctx.history ? ctx.history->find(r->substep) : nullptr;
    const Payload* payload = step ? &step->observation.payload : nullptr;
    auto field = payload ? payload->find(r->field) : Payload::const_iterator{};
    if (payload && field != payload->end()) {
      out.args.emplace(name, field->second);
    } else {
      out.args.emplace(name, Literal{"unresolved-" + format_output_ref(*r)});
    }
  }
  return out;
}

Action OraclePolicy::generate_params(const DecisionContext& ctx, const std::string& tool) {
  if (tool == kNoOp) return Action::no_op();
  if (ctx.substep->reference_action && ctx.substep->reference_action->tool == tool) return reference_call(ctx);
  const ToolSpec* spec = ctx.case_->find_tool(tool);
  if (spec == nullptr) return Action{tool, {}};
  return Action{tool, placeholder_args(*spec)};
}

Action OraclePolicy::sample_action(const DecisionContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const auto w = candidate_weights(ctx);
  const std::size_t pick = rng.weighted(w);
  const std::string tool = ctx.candidates->name(pick < w.size() ? pick : w.size() - 1);
  Action a = generate_params(ctx, tool);

  const OracleRow& row = spec_.row(ctx.case_->id, ctx.substep->index);
  if (row.arg_error > 0.0 && ctx.substep->reference_action && tool == ctx.substep->reference_action->tool &&
      rng.uniform() < row.arg_error) {
    const ToolSpec* spec = ctx.case_->find_tool(tool);
    if (spec && !spec->arguments.empty()) {
      a.args[spec->arguments.front().name] = Literal{std::string("corrupted-value")};
    }
  }
  return a;
}

IndexDistribution OraclePolicy::index_distribution(const DecisionContext& ctx) {
  auto w = candidate_weights(ctx);
  if (!options_.digit_path) {
    IndexDistribution d;
    d.probs = std::move(w);
    d.provenance = Provenance::Direct;
    d.forward_passes = 1;
    return d;
  }
  return compose_digits(digit_model_for(w), w.size());
}

DigitModel digit_model_for(const std::vector<double>& probs) {
  DigitModel dm;
  const std::size_t k = probs.size();
  for (std::size_t d1 = 0; d1 < 10; ++d1) {
    double single = d1 < k ? probs[d1] : 0.0;
    double two = 0.0;
    for (std::size_t d2 = 0; d2 < 10; ++d2) {
      const std::size_t idx = d1 * 10 + d2;
      if (idx >= 10 && idx < k) two += probs[idx];
    }
    dm.p1[d1] = single + two;
    if (dm.p1[d1] > 0.0) {
      dm.p_end[d1] = single / dm.p1[d1];
      for (std::size_t d2 = 0; d2 < 10; ++d2) {
        const std::size_t idx = d1 * 10 + d2;
        dm.p2[d1][d2] = (idx >= 10 && idx < k) ? probs[idx] / dm.p1[d1] : 0.0;
      }
    } else {
      dm.p_end[d1] = 1.0;
    }
  }
  return dm;
}

}  // namespace egb
