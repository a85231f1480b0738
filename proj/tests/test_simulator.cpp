// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "doctest.h"
#include "support.hpp"

#include "egb/canonical.hpp"
#include "egb/error.hpp"
#include "egb/search.hpp"
#include "egb/simulator.hpp"

using namespace egb;
using egb::test::promo_case;

namespace {

Literal str(const char* s) { return Literal{std::string(s)}; }

Action call(std::string tool, std::initializer_list<std::pair<const std::string, Literal>> args) {
  Action a;
  a.tool = std::move(tool);
  for (const auto& [k, v] : args) a.args.emplace(k, v);
  return a;
}

std::string field(const Observation& o, const std::string& name) {
  auto it = o.payload.find(name);
  return it == o.payload.end() ? std::string("<absent>") : literal_text(it->second);
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("grounded call returns the stored outcome") {
    const auto o = execute(promo_case(), call("get_product_details", {{"sku", str("TF-WB-2023")}}));
    CHECK(o.matched);
    CHECK(field(o, "product_id") == "P-TF-WB-2023-001");
  }

  TEST_CASE("unknown argument values fall back to the tool default") {
    const Case& c = promo_case();
    const auto o = execute(c, call("get_product_details", {{"sku", str("WRONG")}}));
    CHECK_FALSE(o.matched);
    CHECK(o.payload == default_payload(c, "get_product_details"));
    CHECK(field(o, "status") == "no_record_found");
  }

  TEST_CASE("format variants canonicalize onto the stored key") {
    const auto o = execute(promo_case(), call("create_promotion", {{"product_id", str("P-TF-WB-2023-001")},
                                                                      {"discount_percentage", Literal{std::int64_t{15}}},
                                                                      {"min_quantity", Literal{std::int64_t{2}}},
                                                                      {"min_purchase", str("$35.00")},
                                                                      {"start_date", str("06/01/2024")},
                                                                      {"end_date", str("2024-08-31")}}));
    CHECK(o.matched);
    CHECK(field(o, "promotion_id") == "PROMO-TF-2024-S001");
  }

  TEST_CASE("a typed slot that fails to parse is a mismatch, not a crash") {
    const auto o = execute(promo_case(), call("create_promotion", {{"product_id", str("P-TF-WB-2023-001")},
                                                                      {"discount_percentage", str("fifteen")},
                                                                      {"min_quantity", Literal{std::int64_t{2}}},
                                                                      {"min_purchase", str("35")},
                                                                      {"start_date", str("2024-06-01")},
                                                                      {"end_date", str("2024-08-31")}}));
    CHECK_FALSE(o.matched);
  }

  TEST_CASE("NO_OP, unknown tools, unresolved refs and INVALID") {
    const Case& c = promo_case();
    const auto noop = execute(c, Action::no_op());
    CHECK(noop.matched);
    CHECK(noop.payload.empty());
    CHECK_THROWS_AS(execute(c, call("delete_everything", {})), UnknownToolError);
    CHECK_THROWS_AS(execute(c, *c.find_node({2, 1})->reference_action), UnresolvedReferenceError);
    CHECK_FALSE(execute(c, Action::invalid()).matched);
  }

  TEST_CASE("worked example: every intermediate observation matches the listed outputs") {
    const Case& c = promo_case();
    const auto t = golden_trajectory(c);
    REQUIRE(t.steps.size() == 5);
    CHECK(field(t.steps[0].observation, "product_id") == "P-TF-WB-2023-001");
    CHECK(field(t.steps[1].observation, "promotion_id") == "PROMO-TF-2024-S001");
    CHECK(field(t.steps[2].observation, "promo_code_id") == "PC-SUMMERTF24-001");
    CHECK(t.steps[3].observation.matched);
    CHECK(canonical_string(field(t.steps[4].observation, "success")) == "true");
    CHECK(judge_success(c, t));
  }

  TEST_CASE("final default payload fails the judge") {
    const Case& c = promo_case();
    auto t = golden_trajectory(c);
    t.steps.back().observation = Observation{default_payload(c, "activate_promotion"), false};
    CHECK_FALSE(judge_success(c, t));
  }

  TEST_CASE("designated-field judging compares one field only") {
    const Case& c = promo_case();
    auto t = golden_trajectory(c);
    t.steps.back().observation.payload.emplace("note", str("extra"));
    CHECK_FALSE(judge_success(c, t));
    CHECK(judge_success(c, t, JudgeOptions{std::string("success")}));
  }

  TEST_CASE("execution is deterministic") {
    const Case& c = promo_case();
    const auto a = call("get_product_details", {{"sku", str("tf-wb-2023 ")}});
    const auto first = execute(c, a);
    for (int i = 0; i < 100; ++i) CHECK(execute(c, a) == first);
  }

  TEST_CASE("wrong intermediate tool whose output is never consumed still succeeds") {
    // Generated cases without dependencies: swap one non-final tool step for a
    // distractor and verify by brute-force execution.
    GenConfig gc;
    gc.seed = 31;
    gc.n_cases = 30;
    gc.dependency_density = 0.0;
    gc.no_tool_fraction = 0.0;
    int checked = 0;
    for (const auto& c : generate(gc).cases) {
      const auto subs = plan_substeps(c);
      const auto& first = subs.front();
      REQUIRE(first.requires_tool());
      const auto& ref_tool = first.reference_action->tool;
      const ToolSpec* distractor = nullptr;
      for (const auto& t : c.toolset) {
        if (t.name != ref_tool && t.arguments == c.find_tool(ref_tool)->arguments) distractor = &t;
      }
      if (!distractor) continue;
      TrajectoryState t;
      for (const auto& n : subs) {
        Action a = n.requires_tool() ? resolve_refs(*n.reference_action, t) : Action::no_op();
        if (n.index == first.index) a.tool = distractor->name;
        t.steps.push_back(TrajectoryStep{n.index, a, execute(c, a)});
      }
      CHECK_FALSE(t.steps.front().observation.matched);
      CHECK(judge_success(c, t));
      ++checked;
    }
    CHECK(checked > 10);
  }

  TEST_CASE("default payloads are inert: no grounded outcome value appears in them") {
    GenConfig gc;
    gc.seed = 4;
    gc.n_cases = 40;
    auto cases = generate(gc).cases;
    cases.push_back(promo_case());
    for (const auto& c : cases) {
      std::set<std::string> grounded;
      for (const auto& e : c.sim_dict.entries) {
        for (const auto& [_, v] : e.outcome) grounded.insert(canonical_string(literal_text(v)));
      }
      for (const auto& tool : c.toolset) {
        for (const auto& [_, v] : default_payload(c, tool.name)) {
          CHECK(grounded.count(canonical_string(literal_text(v))) == 0);
        }
      }
    }
  }

  TEST_CASE("golden path matches at every step for generated cases") {
    GenConfig gc;
    gc.seed = 8;
    gc.n_cases = 50;
    for (const auto& c : generate(gc).cases) {
      const auto t = golden_trajectory(c);
      for (const auto& s : t.steps) CHECK(s.observation.matched);
      CHECK(judge_success(c, t));
    }
  }
}
