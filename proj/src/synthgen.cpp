// SPDX-License-Identifier: Apache-2.0

#include "egb/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "egb/canonical.hpp"
#include "egb/error.hpp"
#include "egb/rng.hpp"

namespace egb {

namespace {

using Json = nlohmann::json;

constexpr std::array<std::array<const char*, 4>, 12> kNouns = {{
    {"product", "variant", "listing", "bundle"},
    {"inventory", "stock", "warehouse", "batch"},
    {"order", "cart", "invoice", "checkout"},
    {"shipment", "carrier", "package", "delivery"},
    {"promotion", "coupon", "price", "discount"},
    {"subscription", "plan", "renewal", "membership"},
    {"ticket", "customer", "inquiry", "escalation"},
    {"return", "refund", "exchange", "claim"},
    {"report", "metric", "dashboard", "forecast"},
    {"catalog", "category", "attribute", "collection"},
    {"review", "rating", "feedback", "response"},
    {"account", "notification", "setting", "webhook"},
}};

constexpr std::array<const char*, 12> kObjects = {"details", "status",   "record", "settings", "summary", "history",
                                                  "profile", "schedule", "label",  "rule",     "window",  "quota"};

struct Verb {
  const char* name;
  const char* description;
  const char* phrase;  // how a plan substep asks for it
};

constexpr std::array<Verb, 14> kVerbs = {{
    {"get", "Retrieves", "Look up"},
    {"update", "Updates", "Change"},
    {"create", "Creates", "Set up"},
    {"validate", "Validates", "Confirm"},
    {"list", "Lists", "Enumerate"},
    {"sync", "Synchronizes", "Bring in line"},
    {"cancel", "Cancels", "Call off"},
    {"archive", "Archives", "Put away"},
    {"check", "Checks", "Inspect"},
    {"apply", "Applies", "Put in place"},
    {"compute", "Computes", "Work out"},
    {"register", "Registers", "Enroll"},
    {"fetch", "Fetches", "Pull"},
    {"verify", "Verifies", "Double-check"},
}};

struct ArgTemplate {
  const char* name;
  SemanticType type;
};

constexpr std::array<ArgTemplate, 16> kArgPool = {{
    {"quantity", SemanticType::Integer},
    {"amount", SemanticType::Decimal},
    {"start_date", SemanticType::Date},
    {"end_date", SemanticType::Date},
    {"note", SemanticType::String},
    {"region", SemanticType::String},
    {"priority", SemanticType::Integer},
    {"enabled", SemanticType::Boolean},
    {"discount_percentage", SemanticType::Integer},
    {"min_purchase", SemanticType::Decimal},
    {"channel", SemanticType::String},
    {"code", SemanticType::String},
    {"effective_date", SemanticType::Date},
    {"threshold", SemanticType::Decimal},
    {"notify", SemanticType::Boolean},
    {"limit", SemanticType::Integer},
}};

constexpr std::array<double, 5> kArgCountWeights = {0.10, 0.20, 0.35, 0.20, 0.15};  // 1..5 arguments

constexpr std::array<const char*, 8> kWords = {"north", "south", "east", "west", "alpha", "prime", "web", "retail"};
constexpr std::array<const char*, 6> kStates = {"active", "pending", "confirmed", "scheduled", "approved", "queued"};
constexpr std::array<const char*, 12> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                                 "July",    "August",   "September", "October", "November", "December"};
constexpr std::array<const char*, 4> kNoToolText = {"Review the gathered information", "Summarize progress so far",
                                                    "Confirm the approach with the requester",
                                                    "Note the outcome for the record"};

struct Family {
  std::size_t category = 0;
  std::string noun;
  std::string object;
  std::vector<std::size_t> verbs;  // indices into kVerbs; [0] is the reference
  std::vector<ArgSpec> args;
  std::vector<ResultSpec> results;

  std::string tool_name(std::size_t i) const { return std::string(kVerbs[verbs[i]].name) + "_" + noun + "_" + object; }
  std::string ref_field() const { return object + "_ref"; }

  ToolSpec tool(std::size_t i) const {
    const Verb& v = kVerbs[verbs[i]];
    return ToolSpec{tool_name(i),
                    std::string(v.description) + " the " + noun + " " + object + " for a given " + noun + " id.",
                    args, results};
  }
};

int families_in(const GenConfig& cfg) { return cfg.library_size / (1 + cfg.n_distractors); }

std::vector<Family> build_families(const GenConfig& cfg) {
  Rng rng(derive_seed({cfg.seed, fnv1a("library")}));
  struct Slot {
    std::size_t category;
    std::string noun;
    std::string object;
  };
  std::vector<Slot> slots;
  for (std::size_t c = 0; c < kNouns.size(); ++c) {
    for (const char* n : kNouns[c]) {
      for (const char* o : kObjects) slots.push_back({c, n, o});
    }
  }
  const std::size_t base = slots.size();
  const auto need = static_cast<std::size_t>(families_in(cfg));
  for (std::size_t round = 2; slots.size() < need; ++round) {
    for (std::size_t i = 0; i < base && slots.size() < need; ++i) {
      slots.push_back({slots[i].category, slots[i].noun, slots[i].object + "_" + std::to_string(round)});
    }
  }
  rng.shuffle(slots.begin(), slots.end());
  slots.resize(need);

  std::vector<Family> out;
  out.reserve(need);
  for (auto& s : slots) {
    Family f;
    f.category = s.category;
    f.noun = s.noun;
    f.object = s.object;
    std::vector<std::size_t> verbs(kVerbs.size());
    std::iota(verbs.begin(), verbs.end(), std::size_t{0});
    rng.shuffle(verbs.begin(), verbs.end());
    verbs.resize(std::min<std::size_t>(verbs.size(), static_cast<std::size_t>(cfg.n_distractors) + 1));
    f.verbs = std::move(verbs);

    const std::size_t n_args = rng.weighted(kArgCountWeights) + 1;
    f.args.push_back(ArgSpec{f.noun + "_id", SemanticType::String, true});
    std::vector<std::size_t> pool(kArgPool.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t i = 0; i + 1 < n_args; ++i) {
      f.args.push_back(ArgSpec{kArgPool[pool[i]].name, kArgPool[pool[i]].type, true});
    }
    f.results = {ResultSpec{f.ref_field(), SemanticType::String}, ResultSpec{"state", SemanticType::String}};
    out.push_back(std::move(f));
  }
  return out;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string hex_token(Rng& rng, int digits) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (int i = 0; i < digits; ++i) out.push_back(kHex[rng.below(16)]);
  return out;
}

/// Random literal of `type`, written in one of several equivalent formats.
Literal random_literal(Rng& rng, const ArgSpec& spec) {
  switch (spec.type) {
    case SemanticType::String:
      return std::string(kWords[rng.below(kWords.size())]) + "-" + std::to_string(1 + rng.below(99));
    case SemanticType::Integer:
      return static_cast<std::int64_t>(1 + rng.below(500));
    case SemanticType::Decimal: {
      const auto cents = static_cast<std::int64_t>(100 + rng.below(250000));
      char buf[64];
      switch (rng.below(3)) {
        case 0:
          return static_cast<double>(cents) / 100.0;
        case 1:
          std::snprintf(buf, sizeof buf, "$%lld.%02lld", static_cast<long long>(cents / 100),
                        static_cast<long long>(cents % 100));
          return std::string(buf);
        default: {
          const long long whole = cents / 100;
          if (whole >= 1000) {
            std::snprintf(buf, sizeof buf, "%lld,%03lld.%02lld", whole / 1000, whole % 1000,
                          static_cast<long long>(cents % 100));
          } else {
            std::snprintf(buf, sizeof buf, "%lld.%02lld", whole, static_cast<long long>(cents % 100));
          }
          return std::string(buf);
        }
      }
    }
    case SemanticType::Date: {
      const int y = 2024 + static_cast<int>(rng.below(3));
      const int m = 1 + static_cast<int>(rng.below(12));
      const int d = 1 + static_cast<int>(rng.below(28));
      char buf[64];
      switch (rng.below(3)) {
        case 0: std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d); break;
        case 1: std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", m, d, y); break;
        default: std::snprintf(buf, sizeof buf, "%s %d, %04d", kMonths[m - 1], d, y); break;
      }
      return std::string(buf);
    }
    case SemanticType::Boolean:
      if (rng.below(2) == 0) return rng.below(2) == 0;
      return std::string(rng.below(2) == 0 ? "true" : "false");
  }
  return std::string("value");
}

int no_tool_count(const GenConfig& cfg, int t) {
  return std::clamp(static_cast<int>(std::lround(cfg.no_tool_fraction * t)), 0, t - 1);
}

int consumer_count(const GenConfig& cfg, int t) { return static_cast<int>(std::lround(cfg.dependency_density * t)); }

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

const char* select_name(FaultSelect s) {
  switch (s) {
    case FaultSelect::All: return "all";
    case FaultSelect::First: return "first";
    case FaultSelect::Last: return "last";
    case FaultSelect::Positions: return "positions";
    case FaultSelect::Random: return "random";
  }
  return "all";
}

/// Tool-bearing positions (0-based) a rule selects.
std::vector<int> selected_positions(const FaultRule& rule, int tool_steps, Rng& rng) {
  std::vector<int> out;
  switch (rule.select) {
    case FaultSelect::All:
      out.resize(static_cast<std::size_t>(tool_steps));
      std::iota(out.begin(), out.end(), 0);
      break;
    case FaultSelect::First: out.push_back(0); break;
    case FaultSelect::Last: out.push_back(tool_steps - 1); break;
    case FaultSelect::Positions:
      for (int p : rule.positions) {
        if (p >= 1 && p <= tool_steps) out.push_back(p - 1);
      }
      break;
    case FaultSelect::Random: {
      std::vector<int> all(static_cast<std::size_t>(tool_steps));
      std::iota(all.begin(), all.end(), 0);
      rng.shuffle(all.begin(), all.end());
      all.resize(static_cast<std::size_t>(std::min(rule.count, tool_steps)));
      std::sort(all.begin(), all.end());
      out = std::move(all);
      break;
    }
  }
  return out;
}

OracleRow row_for(const FaultRule& rule, const Family& fam) {
  OracleRow row;
  row.p_correct = rule.p_correct;
  row.no_op = rule.no_op;
  row.arg_error = rule.arg_error;
  const std::size_t n = fam.verbs.size() - 1;
  if (n == 0) return row;
  std::vector<double> w(n, 0.0);
  if (rule.confusion.empty()) {
    std::fill(w.begin(), w.end(), 1.0);
  } else {
    for (std::size_t i = 0; i < n && i < rule.confusion.size(); ++i) w[i] = rule.confusion[i];
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double mass = std::max(0.0, 1.0 - rule.p_correct - rule.no_op);
  if (total <= 0.0 || mass <= 0.0) return row;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] > 0.0) row.confusion.push_back({fam.tool_name(i + 1), mass * w[i] / total});
  }
  return row;
}

}  // namespace

void check_config(const GenConfig& cfg) {
  if (cfg.n_cases < 0) throw ConfigError("n_cases must be >= 0");
  if (cfg.plan_length_min < 1) throw ConfigError("plan_length minimum must be >= 1");
  if (cfg.plan_length_max < cfg.plan_length_min) throw ConfigError("plan_length maximum is below the minimum");
  if (cfg.n_distractors < 0) throw ConfigError("n_distractors must be >= 0");
  if (cfg.n_distractors + 1 > static_cast<int>(kVerbs.size())) {
    throw ConfigError("n_distractors must be <= " + std::to_string(kVerbs.size() - 1));
  }
  if (!in_unit(cfg.dependency_density)) throw ConfigError("dependency_density must lie in [0, 1]");
  if (!in_unit(cfg.no_tool_fraction)) throw ConfigError("no_tool_fraction must lie in [0, 1]");
  if (families_in(cfg) < 1) throw ConfigError("library_size is too small for one tool family");
  if (cfg.toolset_size < cfg.plan_length_max) {
    throw ConfigError("toolset_size must be >= the longest plan (" + std::to_string(cfg.plan_length_max) + ")");
  }
  for (int t = cfg.plan_length_min; t <= cfg.plan_length_max; ++t) {
    const int tool_steps = t - no_tool_count(cfg, t);
    if (tool_steps > families_in(cfg)) {
      throw ConfigError("library has " + std::to_string(families_in(cfg)) + " tool families, fewer than the " +
                        std::to_string(tool_steps) + " tool-bearing substeps of a " + std::to_string(t) +
                        "-substep plan");
    }
    if (consumer_count(cfg, t) > tool_steps - 1) {
      throw ConfigError("dependency_density " + std::to_string(cfg.dependency_density) + " needs " +
                        std::to_string(consumer_count(cfg, t)) + " consuming substeps in a " + std::to_string(t) +
                        "-substep plan, but only " + std::to_string(tool_steps - 1) +
                        " tool-bearing substeps have an earlier producer");
    }
  }
  for (std::size_t i = 0; i < cfg.fault_profile.size(); ++i) {
    const auto& r = cfg.fault_profile[i];
    const std::string at = "fault_profile[" + std::to_string(i) + "]";
    if (!in_unit(r.p_correct) || !in_unit(r.no_op) || !in_unit(r.arg_error)) {
      throw ConfigError(at + ": probabilities must lie in [0, 1]");
    }
    for (double w : r.confusion) {
      if (w < 0.0) throw ConfigError(at + ": confusion weights must be >= 0");
    }
    for (int p : r.positions) {
      if (p < 1) throw ConfigError(at + ": positions are 1-based");
    }
    if (r.count < 0) throw ConfigError(at + ": count must be >= 0");
  }
}

Json gen_config_to_json(const GenConfig& cfg) {
  Json faults = Json::array();
  for (const auto& r : cfg.fault_profile) {
    Json f{{"select", select_name(r.select)}, {"p_correct", r.p_correct}};
    if (r.select == FaultSelect::Positions) f["positions"] = r.positions;
    if (r.select == FaultSelect::Random) f["count"] = r.count;
    if (!r.confusion.empty()) f["confusion"] = r.confusion;
    if (r.no_op > 0.0) f["no_op"] = r.no_op;
    if (r.arg_error > 0.0) f["arg_error"] = r.arg_error;
    faults.push_back(std::move(f));
  }
  return Json{{"seed", cfg.seed},
              {"n_cases", cfg.n_cases},
              {"plan_length", Json::array({cfg.plan_length_min, cfg.plan_length_max})},
              {"toolset_size", cfg.toolset_size},
              {"library_size", cfg.library_size},
              {"n_distractors", cfg.n_distractors},
              {"dependency_density", cfg.dependency_density},
              {"no_tool_fraction", cfg.no_tool_fraction},
              {"id_prefix", cfg.id_prefix},
              {"fault_profile", std::move(faults)}};
}

GenConfig gen_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("generator config must be an object");
  GenConfig cfg;
  try {
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.n_cases = doc.value("n_cases", cfg.n_cases);
    if (auto it = doc.find("plan_length"); it != doc.end()) {
      if (it->is_number_integer()) {
        cfg.plan_length_min = cfg.plan_length_max = it->get<int>();
      } else if (it->is_array() && it->size() == 2) {
        cfg.plan_length_min = (*it)[0].get<int>();
        cfg.plan_length_max = (*it)[1].get<int>();
      } else {
        throw ConfigError("plan_length must be an integer or a [min, max] pair");
      }
    }
    cfg.toolset_size = doc.value("toolset_size", cfg.toolset_size);
    cfg.library_size = doc.value("library_size", cfg.library_size);
    cfg.n_distractors = doc.value("n_distractors", cfg.n_distractors);
    cfg.dependency_density = doc.value("dependency_density", cfg.dependency_density);
    cfg.no_tool_fraction = doc.value("no_tool_fraction", cfg.no_tool_fraction);
    cfg.id_prefix = doc.value("id_prefix", cfg.id_prefix);
    if (auto it = doc.find("fault_profile"); it != doc.end()) {
      for (const auto& f : *it) {
        FaultRule r;
        const std::string sel = f.value("select", std::string("all"));
        if (sel == "all") {
          r.select = FaultSelect::All;
        } else if (sel == "first") {
          r.select = FaultSelect::First;
        } else if (sel == "last") {
          r.select = FaultSelect::Last;
        } else if (sel == "positions") {
          r.select = FaultSelect::Positions;
          r.positions = f.at("positions").get<std::vector<int>>();
        } else if (sel == "random") {
          r.select = FaultSelect::Random;
          r.count = f.at("count").get<int>();
        } else {
          throw ConfigError("unknown fault selector '" + sel + "'");
        }
        r.p_correct = f.value("p_correct", 1.0);
        r.confusion = f.value("confusion", std::vector<double>{});
        r.no_op = f.value("no_op", 0.0);
        r.arg_error = f.value("arg_error", 0.0);
        cfg.fault_profile.push_back(std::move(r));
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  check_config(cfg);
  return cfg;
}

std::vector<ToolSpec> build_library(const GenConfig& cfg) {
  check_config(cfg);
  std::vector<ToolSpec> out;
  for (const auto& f : build_families(cfg)) {
    for (std::size_t i = 0; i < f.verbs.size(); ++i) out.push_back(f.tool(i));
  }
  return out;
}

GenResult generate(const GenConfig& cfg) {
  check_config(cfg);
  const auto families = build_families(cfg);
  const auto& categories = task_categories();

  GenResult result;
  result.oracle.fallback = OracleRow{};
  for (int ci = 0; ci < cfg.n_cases; ++ci) {
    const auto case_idx = static_cast<std::uint64_t>(ci);
    Rng rng(derive_seed({cfg.seed, fnv1a("case"), case_idx}));
    Case c;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "%04d", ci);
    c.id = cfg.id_prefix + "-" + std::to_string(cfg.seed) + "-" + idbuf;

    const int t = cfg.plan_length_min + static_cast<int>(rng.below(
                                            static_cast<std::uint64_t>(cfg.plan_length_max - cfg.plan_length_min + 1)));
    const int n_no = no_tool_count(cfg, t);
    std::vector<bool> is_tool(static_cast<std::size_t>(t), true);
    {
      std::vector<int> pos(static_cast<std::size_t>(t - 1));
      std::iota(pos.begin(), pos.end(), 0);
      rng.shuffle(pos.begin(), pos.end());
      for (int i = 0; i < n_no; ++i) is_tool[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])] = false;
    }
    std::vector<int> tool_pos;
    for (int i = 0; i < t; ++i) {
      if (is_tool[static_cast<std::size_t>(i)]) tool_pos.push_back(i);
    }
    const int n_tool = static_cast<int>(tool_pos.size());

    const std::size_t category = rng.below(categories.size());
    c.category = categories[category];

    // Families for the tool-bearing substeps: the case's category first.
    std::vector<std::size_t> own, other;
    for (std::size_t f = 0; f < families.size(); ++f) (families[f].category == category ? own : other).push_back(f);
    rng.shuffle(own.begin(), own.end());
    rng.shuffle(other.begin(), other.end());
    own.insert(own.end(), other.begin(), other.end());
    std::vector<std::size_t> step_family(own.begin(), own.begin() + n_tool);

    // Which tool-bearing substeps consume an earlier output.
    std::vector<bool> consumes(static_cast<std::size_t>(n_tool), false);
    {
      std::vector<int> eligible(static_cast<std::size_t>(std::max(0, n_tool - 1)));
      std::iota(eligible.begin(), eligible.end(), 1);
      rng.shuffle(eligible.begin(), eligible.end());
      const int n_cons = consumer_count(cfg, t);
      for (int i = 0; i < n_cons; ++i) consumes[static_cast<std::size_t>(eligible[static_cast<std::size_t>(i)])] = true;
    }

    // Plan tree: groups of 1-3 substeps under each high-level step.
    std::vector<StepAddr> addrs;
    {
      int step = 0, left = 0, sub = 0;
      for (int i = 0; i < t; ++i) {
        if (left == 0) {
          ++step;
          sub = 0;
          left = 1 + static_cast<int>(rng.below(3));
        }
        --left;
        addrs.push_back(StepAddr{step, ++sub});
      }
    }

    // Reference actions and the golden-path dictionary.
    std::map<int, Action> ref_actions;  // by plan position
    std::map<int, Payload> outcomes;
    std::vector<std::string> query_bits;
    for (int k = 0; k < n_tool; ++k) {
      const int pos = tool_pos[static_cast<std::size_t>(k)];
      const Family& fam = families[step_family[static_cast<std::size_t>(k)]];
      Action a{fam.tool_name(0), {}};
      for (std::size_t ai = 0; ai < fam.args.size(); ++ai) {
        const ArgSpec& spec = fam.args[ai];
        if (ai == 0 && consumes[static_cast<std::size_t>(k)]) {
          const int producer = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
          const int ppos = tool_pos[static_cast<std::size_t>(producer)];
          const Family& pf = families[step_family[static_cast<std::size_t>(producer)]];
          a.args.emplace(spec.name, OutputRef{addrs[static_cast<std::size_t>(ppos)], pf.ref_field()});
          continue;
        }
        Literal v = ai == 0 ? Literal{upper(fam.noun.substr(0, 3)) + "-" + hex_token(rng, 6)} : random_literal(rng, spec);
        query_bits.push_back(spec.name + " " + literal_text(v));
        a.args.emplace(spec.name, std::move(v));
      }

      SimEntry entry;
      entry.tool = a.tool;
      for (const auto& [name, value] : a.args) {
        Literal lit;
        if (const auto* r = std::get_if<OutputRef>(&value)) {
          const int ppos = static_cast<int>(std::find(addrs.begin(), addrs.end(), r->substep) - addrs.begin());
          lit = outcomes.at(ppos).at(r->field);
        } else {
          lit = std::get<Literal>(value);
        }
        const auto spec = std::find_if(fam.args.begin(), fam.args.end(), [&](const ArgSpec& s) { return s.name == name; });
        entry.args.emplace(name, canonicalize(lit, spec->type));
      }
      char refbuf[96];
      std::snprintf(refbuf, sizeof refbuf, "%s-%s-%02d", upper(c.id).c_str(), upper(fam.object).c_str(), pos + 1);
      entry.outcome = Payload{{fam.ref_field(), std::string(refbuf)},
                              {"state", std::string(kStates[rng.below(kStates.size())])}};
      outcomes[pos] = entry.outcome;
      ref_actions[pos] = std::move(a);
      c.sim_dict.entries.push_back(std::move(entry));
    }

    // Plan nodes.
    int last_step = 0;
    int k = 0;
    for (int i = 0; i < t; ++i) {
      const StepAddr addr = addrs[static_cast<std::size_t>(i)];
      const bool tool = is_tool[static_cast<std::size_t>(i)];
      const Family* fam = tool ? &families[step_family[static_cast<std::size_t>(k)]] : nullptr;
      if (addr.step != last_step) {
        last_step = addr.step;
        std::string text = fam ? "Work on the " + fam->noun + " " + fam->object : std::string("Prepare the next action");
        c.plan.push_back(PlanNode{StepAddr{addr.step, 0}, std::move(text), NodeKind::HighLevel, std::nullopt});
      }
      if (tool) {
        const Verb& v = kVerbs[fam->verbs[0]];
        c.plan.push_back(PlanNode{addr, std::string(v.phrase) + " the " + fam->noun + " " + fam->object,
                                  NodeKind::Substep, ref_actions.at(i)});
        ++k;
      } else {
        c.plan.push_back(
            PlanNode{addr, kNoToolText[rng.below(kNoToolText.size())], NodeKind::Substep, std::nullopt});
      }
    }

    std::string query = c.category + " request:";
    for (std::size_t i = 0; i < query_bits.size(); ++i) query += (i ? ", " : " use ") + query_bits[i];
    c.query = query + ".";

    // Toolset: every family member of the references, then fillers.
    std::vector<ToolSpec> tools;
    std::vector<bool> used(families.size(), false);
    for (std::size_t f : step_family) {
      used[f] = true;
      tools.push_back(families[f].tool(0));
    }
    for (std::size_t f : step_family) {
      for (std::size_t v = 1; v < families[f].verbs.size(); ++v) tools.push_back(families[f].tool(v));
    }
    std::vector<std::size_t> fillers;
    for (std::size_t f = 0; f < families.size(); ++f) {
      if (!used[f]) fillers.push_back(f);
    }
    rng.shuffle(fillers.begin(), fillers.end());
    for (std::size_t f : fillers) {
      if (tools.size() >= static_cast<std::size_t>(cfg.toolset_size)) break;
      for (std::size_t v = 0; v < families[f].verbs.size(); ++v) tools.push_back(families[f].tool(v));
    }
    if (tools.size() > static_cast<std::size_t>(cfg.toolset_size)) tools.resize(static_cast<std::size_t>(cfg.toolset_size));
    std::sort(tools.begin(), tools.end(), [](const ToolSpec& a, const ToolSpec& b) { return a.name < b.name; });
    c.toolset = std::move(tools);
    for (const auto& tool : c.toolset) {
      c.sim_dict.defaults.emplace(tool.name,
                                  Payload{{std::string(kDefaultStatusField), std::string(kDefaultStatusValue)}});
    }
    c.final_reference = outcomes.at(tool_pos.back());

    // Oracle rows from the fault profile.
    auto& rows = result.oracle.cases[c.id];
    for (std::size_t ri = 0; ri < cfg.fault_profile.size(); ++ri) {
      const FaultRule& rule = cfg.fault_profile[ri];
      Rng frng(derive_seed({cfg.seed, fnv1a("fault"), case_idx, static_cast<std::uint64_t>(ri)}));
      for (int p : selected_positions(rule, n_tool, frng)) {
        const int pos = tool_pos[static_cast<std::size_t>(p)];
        rows[addrs[static_cast<std::size_t>(pos)]] = row_for(rule, families[step_family[static_cast<std::size_t>(p)]]);
      }
    }
    if (rows.empty()) result.oracle.cases.erase(c.id);

    result.cases.push_back(std::move(c));
  }
  return result;
}

}  // namespace egb
