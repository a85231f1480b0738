// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "doctest.h"
#include "support.hpp"

#include "egb/error.hpp"
#include "egb/oracle.hpp"
#include "egb/search.hpp"
#include "egb/simulator.hpp"

using namespace egb;
using egb::test::fault;

namespace {

std::vector<StepAddr> tool_addrs(const Case& c) {
  std::vector<StepAddr> out;
  for (const auto& n : plan_substeps(c)) {
    if (n.requires_tool()) out.push_back(n.index);
  }
  return out;
}

bool has_refs(const Case& c) {
  for (const auto& n : c.plan) {
    if (!n.reference_action) continue;
    for (const auto& [_, v] : n.reference_action->args) {
      if (std::holds_alternative<OutputRef>(v)) return true;
    }
  }
  return false;
}

double greedy_success(const GenResult& gen, int seeds) {
  OraclePolicy p(gen.oracle);
  int wins = 0, total = 0;
  for (const auto& c : gen.cases) {
    for (int s = 0; s < seeds; ++s, ++total) wins += greedy_run(c, p, static_cast<std::uint64_t>(s)).success ? 1 : 0;
  }
  return wins / double(total);
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("generated cases validate and the golden path succeeds") {
    GenConfig gc;
    gc.seed = 3;
    gc.n_cases = 60;
    gc.plan_length_min = 3;
    gc.plan_length_max = 14;
    const auto gen = generate(gc);
    REQUIRE(gen.cases.size() == 60);
    std::set<std::string> ids;
    for (const auto& c : gen.cases) {
      CHECK(validate_case(c).empty());
      CHECK(judge_success(c, golden_trajectory(c)));
      const auto n = plan_substeps(c).size();
      CHECK(n >= 3);
      CHECK(n <= 14);
      CHECK(c.toolset.size() <= 60);
      ids.insert(c.id);
    }
    CHECK(ids.size() == 60);
  }

  TEST_CASE("generation is deterministic in the config") {
    GenConfig gc;
    gc.seed = 8;
    gc.n_cases = 20;
    gc.fault_profile.push_back(fault(FaultSelect::Random, 0.6, 2));
    const auto a = generate(gc);
    const auto b = generate(gc);
    CHECK(cases_to_json(a.cases).dump() == cases_to_json(b.cases).dump());
    CHECK(oracle_spec_to_json(a.oracle).dump() == oracle_spec_to_json(b.oracle).dump());
    gc.seed = 9;
    CHECK(cases_to_json(generate(gc).cases).dump() != cases_to_json(a.cases).dump());
  }

  TEST_CASE("dependency density bounds the references") {
    GenConfig gc;
    gc.seed = 4;
    gc.n_cases = 30;
    gc.dependency_density = 0.0;
    for (const auto& c : generate(gc).cases) CHECK_FALSE(has_refs(c));
    gc.dependency_density = 0.6;
    int with_refs = 0;
    for (const auto& c : generate(gc).cases) with_refs += has_refs(c) ? 1 : 0;
    CHECK(with_refs == 30);
  }

  TEST_CASE("library argument counts average about three") {
    GenConfig gc;
    const auto lib = build_library(gc);
    CHECK(lib.size() == 1000);
    double args = 0.0;
    std::set<std::string> families;
    for (const auto& t : lib) args += static_cast<double>(t.arguments.size());
    const double mean = args / static_cast<double>(lib.size());
    CHECK(std::abs(mean - 3.05) <= 0.305);
  }

  TEST_CASE("infeasible configurations are rejected") {
    GenConfig gc;
    gc.plan_length_min = 8;
    gc.plan_length_max = 4;
    CHECK_THROWS_AS(check_config(gc), ConfigError);
    gc = GenConfig{};
    gc.toolset_size = 5;
    CHECK_THROWS_AS(generate(gc), ConfigError);
    gc = GenConfig{};
    gc.library_size = 2;
    CHECK_THROWS_AS(generate(gc), ConfigError);
    gc = GenConfig{};
    gc.dependency_density = 1.5;
    CHECK_THROWS_AS(check_config(gc), ConfigError);
    gc = GenConfig{};
    gc.fault_profile.push_back(fault(FaultSelect::All, 1.2));
    CHECK_THROWS_AS(check_config(gc), ConfigError);
    gc = GenConfig{};
    gc.fault_profile.push_back(fault(FaultSelect::Positions, 0.5, 0, {0}));
    CHECK_THROWS_AS(check_config(gc), ConfigError);
    gc = GenConfig{};
    gc.n_distractors = 1000;
    CHECK_THROWS_AS(check_config(gc), ConfigError);
  }

  TEST_CASE("fault selectors place rows on the chosen tool substeps") {
    GenConfig gc;
    gc.seed = 12;
    gc.n_cases = 15;
    gc.no_tool_fraction = 0.2;
    gc.fault_profile = {fault(FaultSelect::First, 0.5)};
    auto gen = generate(gc);
    for (const auto& c : gen.cases) {
      const auto& rows = gen.oracle.cases.at(c.id);
      REQUIRE(rows.size() == 1);
      CHECK(rows.begin()->first == tool_addrs(c).front());
      CHECK(rows.begin()->second.p_correct == 0.5);
      double mass = 0.0;
      for (const auto& w : rows.begin()->second.confusion) mass += w.weight;
      CHECK(std::abs(mass - 0.5) < 1e-12);
    }

    gc.fault_profile = {fault(FaultSelect::Last, 0.3)};
    gen = generate(gc);
    for (const auto& c : gen.cases) CHECK(gen.oracle.cases.at(c.id).begin()->first == tool_addrs(c).back());

    gc.fault_profile = {fault(FaultSelect::Positions, 0.4, 0, {2, 99})};
    gen = generate(gc);
    for (const auto& c : gen.cases) {
      const auto& rows = gen.oracle.cases.at(c.id);
      REQUIRE(rows.size() == 1);
      CHECK(rows.begin()->first == tool_addrs(c)[1]);
    }

    gc.fault_profile = {fault(FaultSelect::All, 0.9), fault(FaultSelect::Random, 0.2, 3)};
    gen = generate(gc);
    for (const auto& c : gen.cases) {
      const auto& rows = gen.oracle.cases.at(c.id);
      CHECK(rows.size() == tool_addrs(c).size());
      int low = 0;
      for (const auto& [addr, row] : rows) low += row.p_correct == 0.2 ? 1 : 0;
      CHECK(low == std::min<int>(3, static_cast<int>(rows.size())));
    }
  }

  TEST_CASE("confusion weights follow family order") {
    GenConfig gc;
    gc.seed = 14;
    gc.n_cases = 5;
    auto rule = fault(FaultSelect::All, 0.6);
    rule.confusion = {3.0, 1.0};
    rule.no_op = 0.1;
    gc.fault_profile = {rule};
    const auto gen = generate(gc);
    for (const auto& [id, rows] : gen.oracle.cases) {
      for (const auto& [addr, row] : rows) {
        REQUIRE(row.confusion.size() == 2);
        CHECK(std::abs(row.confusion[0].weight - 0.225) < 1e-12);
        CHECK(std::abs(row.confusion[1].weight - 0.075) < 1e-12);
        CHECK(row.no_op == 0.1);
      }
    }
  }

  TEST_CASE("distractors share the reference schema and only ever return defaults") {
    GenConfig gc;
    gc.seed = 15;
    gc.n_cases = 10;
    const auto gen = generate(gc);
    for (const auto& c : gen.cases) {
      for (const auto& n : plan_substeps(c)) {
        if (!n.requires_tool()) continue;
        const auto& ref = *c.find_tool(n.reference_action->tool);
        const auto resolved = resolve_refs(*n.reference_action, golden_trajectory(c));
        int family = 0;
        for (const auto& t : c.toolset) {
          if (t.name == ref.name || t.arguments != ref.arguments) continue;
          ++family;
          Action swapped = resolved;
          swapped.tool = t.name;
          const auto o = execute(c, swapped);
          CHECK_FALSE(o.matched);
          CHECK(o.payload == c.sim_dict.defaults.at(t.name));
        }
        CHECK(family >= 3);
      }
    }
  }

  TEST_CASE("noiseless greedy solves every generated case") {
    GenConfig gc;
    gc.seed = 16;
    gc.n_cases = 40;
    gc.no_tool_fraction = 0.2;
    CHECK(greedy_success(generate(gc), 1) == 1.0);
  }

  TEST_CASE("generator config JSON round trip") {
    GenConfig gc;
    gc.seed = 77;
    gc.n_cases = 12;
    gc.plan_length_min = 4;
    gc.plan_length_max = 9;
    gc.dependency_density = 0.3;
    auto r = fault(FaultSelect::Positions, 0.5, 0, {1, 3});
    r.confusion = {1.0, 2.0};
    r.arg_error = 0.1;
    gc.fault_profile = {r, fault(FaultSelect::Random, 0.7, 2)};
    const auto back = gen_config_from_json(gen_config_to_json(gc));
    CHECK(gen_config_to_json(back) == gen_config_to_json(gc));
    CHECK(cases_to_json(generate(back).cases) == cases_to_json(generate(gc).cases));
    CHECK_THROWS_AS(gen_config_from_json(nlohmann::json::parse(R"({"fault_profile": [{"select": "some"}]})")),
                    ConfigError);
    CHECK_THROWS_AS(gen_config_from_json(nlohmann::json::parse(R"({"plan_length": "long"})")), ConfigError);
    CHECK(gen_config_from_json(nlohmann::json::parse(R"({"plan_length": 6})")).plan_length_max == 6);
  }

  TEST_CASE("lower per-step accuracy lowers greedy success") {
    double last = 1.1;
    for (double p : {1.0, 0.9, 0.7, 0.5}) {
      GenConfig gc;
      gc.seed = 18;
      gc.n_cases = 40;
      gc.fault_profile = {fault(FaultSelect::All, p)};
      const double s = greedy_success(generate(gc), 3);
      CHECK(s < last);
      last = s;
    }
  }
}
