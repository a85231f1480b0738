// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "support.hpp"

#include "egb/batch.hpp"
#include "egb/error.hpp"
#include "egb/metrics.hpp"
#include "egb/rng.hpp"

using namespace egb;
using egb::test::promo_case;

namespace {

SearchOutcome golden_outcome(const Case& c) {
  SearchOutcome out;
  out.first_pass = golden_trajectory(c);
  for (const auto& s : out.first_pass.steps) {
    StepDecisionRecord r;
    r.substep = s.address;
    r.executed = s.action;
    r.observation = s.observation;
    r.distribution = {ToolVote{s.action.tool, 1.0, {}}};
    out.first_pass.decisions.push_back(std::move(r));
  }
  out.final_trajectory = out.first_pass;
  out.success = true;
  return out;
}

CaseRow row(std::size_t case_index, std::uint64_t seed, bool success) {
  CaseRow r;
  r.case_id = "c" + std::to_string(case_index);
  r.case_index = case_index;
  r.seed = seed;
  r.strategy = "greedy";
  r.success = success;
  r.metrics.substeps = 4;
  r.metrics.tool_substeps = 3;
  r.metrics.tool_matches = success ? 3 : 1;
  r.metrics.action_id_correct = 4;
  r.cost.generation_calls = 7;
  r.steps.push_back(StepRow{{1, 1}, success ? 0.1 : 1.2, "a", success ? "a" : "b"});
  return r;
}

std::string dump(std::span<const CaseRow> rows) {
  std::string s;
  for (const auto& r : rows) s += row_to_json(r).dump() + "\n";
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("NO_OP at one of five tool substeps scores 0.8 on both step metrics") {
    const Case& c = promo_case();
    auto out = golden_outcome(c);
    auto m = step_metrics(out, c);
    CHECK(m.substeps == 5);
    CHECK(m.tool_match_rate() == 1.0);
    CHECK(m.action_identification_accuracy() == 1.0);

    out.first_pass.steps[2].action = Action::no_op();
    m = step_metrics(out, c);
    CHECK(m.tool_match_rate() == doctest::Approx(0.8));
    CHECK(m.action_identification_accuracy() == doctest::Approx(0.8));
  }

  TEST_CASE("wrong tool hurts tool match but not action identification") {
    const Case& c = promo_case();
    auto out = golden_outcome(c);
    out.first_pass.steps[1].action = Action{"validate_promotion", {}};
    out.first_pass.steps[3].action = Action::invalid();
    const auto m = step_metrics(out, c);
    CHECK(m.tool_match_rate() == doctest::Approx(0.6));
    CHECK(m.action_identification_accuracy() == doctest::Approx(0.8));
  }

  TEST_CASE("no-tool substeps count only for action identification") {
    GenConfig gc;
    gc.seed = 5;
    gc.n_cases = 20;
    gc.no_tool_fraction = 0.4;
    gc.dependency_density = 0.2;
    for (const auto& c : generate(gc).cases) {
      auto out = golden_outcome(c);
      int no_tool = 0;
      for (auto& s : out.first_pass.steps) {
        if (c.find_node(s.address)->requires_tool()) continue;
        ++no_tool;
        s.action = Action{c.toolset.front().name, {}};
      }
      const auto m = step_metrics(out, c);
      CHECK(m.tool_match_rate() == 1.0);
      CHECK(m.action_id_correct == m.substeps - no_tool);
    }
  }

  TEST_CASE("success rate: 27 of 50 is 0.54") {
    std::vector<CaseRow> rows;
    for (std::size_t i = 0; i < 50; ++i) rows.push_back(row(i, 0, i < 27));
    const auto r = success_rate(rows);
    CHECK(r.mean == doctest::Approx(0.54));
    CHECK(r.stdev == 0.0);
  }

  TEST_CASE("rate_over averages seeds within a case and reports stdev across seeds") {
    Rng rng(4);
    std::vector<CaseRow> rows;
    const int cases = 30, seeds = 4;
    std::vector<std::vector<double>> v(cases, std::vector<double>(seeds));
    for (int c = 0; c < cases; ++c) {
      for (int s = 0; s < seeds; ++s) {
        const bool ok = rng.uniform() < 0.6;
        v[c][s] = ok ? 1.0 : 0.0;
        rows.push_back(row(static_cast<std::size_t>(c), static_cast<std::uint64_t>(s), ok));
      }
    }
    double mean = 0.0;
    for (const auto& per : v) mean += std::accumulate(per.begin(), per.end(), 0.0) / seeds;
    mean /= cases;
    std::vector<double> seed_means(seeds, 0.0);
    for (int s = 0; s < seeds; ++s) {
      for (int c = 0; c < cases; ++c) seed_means[s] += v[c][s] / cases;
    }
    const double sm = std::accumulate(seed_means.begin(), seed_means.end(), 0.0) / seeds;
    double ss = 0.0;
    for (double x : seed_means) ss += (x - sm) * (x - sm);
    const auto r = success_rate(rows);
    CHECK(std::abs(r.mean - mean) < 1e-12);
    CHECK(std::abs(r.stdev - std::sqrt(ss / (seeds - 1))) < 1e-12);
    CHECK(sample_stdev(std::vector<double>{2.0}) == 0.0);
  }

  TEST_CASE("row JSON round trip") {
    const Case& c = promo_case();
    auto out = golden_outcome(c);
    out.branches_tried.push_back({{2, 1}, "create_promotion", true});
    out.cost.generation_calls = 12;
    out.cost.branches_executed = 1;
    out.dropped_mass = 0.25;
    const auto r = make_row(c, 3, 9, "egb_sampling", out);
    CHECK(r.steps.size() == 5);
    const auto back = row_from_json(row_to_json(r));
    CHECK(row_to_json(back) == row_to_json(r));
    CHECK(back.branches == r.branches);
    CHECK(back.steps == r.steps);
    auto broken = row_to_json(r);
    broken.erase("success");
    CHECK_THROWS_AS(row_from_json(broken), std::invalid_argument);
  }

  TEST_CASE("canonical rows are sorted and deduplicated") {
    std::vector<CaseRow> rows = {row(2, 0, true), row(0, 1, true), row(0, 0, false), row(0, 1, false)};
    const auto out = canonical_rows(rows);
    REQUIRE(out.size() == 3);
    CHECK(out[0].case_index == 0);
    CHECK(out[0].seed == 0);
    CHECK(out[1].seed == 1);
    CHECK(out[1].success);
    CHECK(out[2].case_index == 2);
  }

  TEST_CASE("aggregation is idempotent and independent of row order") {
    std::vector<CaseRow> rows;
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::uint64_t s = 0; s < 3; ++s) rows.push_back(row(i, s, (i + s) % 3 != 0));
    }
    auto dir = egb::test::scratch_dir("aggregate");
    write_rows(dir / kRowsFile, rows);
    const auto first = aggregate_run_dir(dir);
    const auto report = slurp(dir / "report.json");
    const auto summary = slurp(dir / "summary.csv");
    const auto entropy = slurp(dir / "entropy_error.csv");
    aggregate_run_dir(dir);
    CHECK(slurp(dir / "report.json") == report);
    CHECK(slurp(dir / "summary.csv") == summary);
    CHECK(slurp(dir / "entropy_error.csv") == entropy);

    Rng rng(1);
    rng.shuffle(rows.begin(), rows.end());
    write_rows(dir / kRowsFile, rows);
    aggregate_run_dir(dir);
    CHECK(slurp(dir / "report.json") == report);
    CHECK(first.rows == 60);
    CHECK(first.cases == 20);
    CHECK(first.seeds == 3);
    CHECK(first.total_cost.generation_calls == 60 * 7);
    CHECK(summary.rfind(summary_csv_header(), 0) == 0);
    CHECK(first.mean_entropy_error > first.mean_entropy_correct);
  }

  TEST_CASE("corrupt rows are reported with file and line") {
    auto dir = egb::test::scratch_dir("corrupt");
    {
      std::ofstream out(dir / kRowsFile);
      out << row_to_json(row(0, 0, true)).dump() << "\n{\"case_id\": 3\n";
    }
    try {
      aggregate_run_dir(dir);
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find(kRowsFile) != std::string::npos);
      CHECK(msg.find(":2:") != std::string::npos);
    }
  }

  TEST_CASE("parallel bootstrap equals the serial kernel") {
    Rng rng(6);
    std::vector<double> a(500), b(500);
    for (auto& x : a) x = rng.uniform() < 0.7 ? 1.0 : 0.0;
    for (auto& x : b) x = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const auto s = paired_bootstrap_serial(a, b, 1000, 3);
    const auto p = paired_bootstrap_parallel(a, b, 1000, 3);
    CHECK(s.mean_diff == p.mean_diff);
    CHECK(s.lower == p.lower);
    CHECK(s.lower > 0.0);
    CHECK(s.lower < s.mean_diff);
    const auto same = paired_bootstrap_serial(a, a, 200, 1);
    CHECK(same.mean_diff == 0.0);
    CHECK(same.lower == 0.0);
    CHECK_THROWS_AS(paired_bootstrap_serial(a, std::vector<double>(3), 10, 1), std::invalid_argument);
  }

  TEST_CASE("cost ledgers are conserved from rows to the report") {
    GenConfig gc;
    gc.seed = 21;
    gc.n_cases = 15;
    gc.fault_profile.push_back(egb::test::fault(FaultSelect::All, 0.8));
    const auto gen = generate(gc);
    OraclePolicy p(gen.oracle);
    std::vector<CaseRow> rows;
    CostLedger total;
    for (std::size_t i = 0; i < gen.cases.size(); ++i) {
      SearchConfig cfg;
      cfg.seed = i;
      const auto out = egb_run(gen.cases[i], p, cfg);
      total += out.cost;
      rows.push_back(make_row(gen.cases[i], i, 0, "egb_sampling", out));
    }
    const auto rep = aggregate_rows(rows);
    CHECK(rep.total_cost.generation_calls == total.generation_calls);
    CHECK(rep.total_cost.input_token_proxy == total.input_token_proxy);
    CHECK(rep.total_cost.output_token_proxy == total.output_token_proxy);
    CHECK(rep.total_cost.branches_executed == total.branches_executed);
    std::size_t steps = 0;
    for (const auto& b : rep.entropy_table) steps += b.steps;
    std::size_t tool_steps = 0;
    for (const auto& r : rows) tool_steps += static_cast<std::size_t>(r.metrics.tool_substeps);
    CHECK(steps == tool_steps);
  }

  TEST_CASE("OpenMP batch kernel returns the serial rows in order") {
    GenConfig gc;
    gc.seed = 23;
    gc.n_cases = 30;
    gc.fault_profile.push_back(egb::test::fault(FaultSelect::Random, 0.5, 2));
    const auto gen = generate(gc);
    const std::vector<std::uint64_t> seeds = {0, 1, 2};
    const auto jobs = make_jobs(gen.cases.size(), seeds);
    CHECK(jobs.size() == 90);
    CHECK(jobs[1] == Job{0, 1});
    std::vector<std::unique_ptr<OraclePolicy>> policies;
    for (int i = 0; i < 4; ++i) policies.push_back(std::make_unique<OraclePolicy>(gen.oracle));
    JobFn fn = [&](const Job& j, int worker) {
      SearchConfig cfg;
      cfg.seed = j.seed;
      const auto& c = gen.cases[j.case_index];
      return make_row(c, j.case_index, j.seed, "egb_sampling", egb_run(c, *policies[static_cast<std::size_t>(worker)], cfg));
    };
    const auto serial = run_batch_serial(jobs, fn);
    const auto parallel = run_batch_parallel(jobs, fn, 4);
    CHECK(dump(serial) == dump(parallel));

    JobFn bad = [](const Job& j, int) -> CaseRow {
      if (j.case_index == 5) throw Error("job failed");
      return CaseRow{};
    };
    CHECK_THROWS_AS(run_batch_parallel(jobs, bad, 4), Error);
  }
}
