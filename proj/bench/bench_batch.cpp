// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "egb/batch.hpp"
#include "egb/experiment.hpp"
#include "egb/metrics.hpp"
#include "egb/rng.hpp"
#include "egb/synthgen.hpp"

namespace {

struct Suite {
  egb::RunConfig config;
  egb::Inputs inputs;
  std::vector<egb::Job> jobs;
};

const Suite& suite() {
  static const Suite s = [] {
    Suite out;
    egb::GenConfig gc;
    gc.seed = 11;
    gc.n_cases = 40;
    gc.fault_profile.push_back(egb::FaultRule{egb::FaultSelect::All, {}, 0, 0.9, {}, 0.0, 0.0});
    auto gen = egb::generate(gc);
    out.inputs.cases = std::move(gen.cases);
    out.inputs.oracle = std::move(gen.oracle);
    out.config.seeds = {0, 1, 2, 3};
    out.jobs = egb::make_jobs(out.inputs.cases.size(), out.config.seeds);
    return out;
  }();
  return s;
}

egb::JobFn job_fn(std::vector<std::unique_ptr<egb::Policy>>& policies) {
  const auto& s = suite();
  return [&s, &policies](const egb::Job& job, int worker) {
    const auto& c = s.inputs.cases[job.case_index];
    auto outcome = egb::run_strategy(s.config, c, *policies[static_cast<std::size_t>(worker)], job.seed);
    return egb::make_row(c, job.case_index, job.seed, "egb_sampling", outcome);
  };
}

std::vector<std::unique_ptr<egb::Policy>> make_policies(int n) {
  std::vector<std::unique_ptr<egb::Policy>> out;
  for (int i = 0; i < n; ++i) out.push_back(egb::make_policy(suite().config, suite().inputs.oracle));
  return out;
}

void BM_BatchSerial(benchmark::State& state) {
  auto policies = make_policies(1);
  const auto fn = job_fn(policies);
  for (auto _ : state) benchmark::DoNotOptimize(egb::run_batch_serial(suite().jobs, fn));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(suite().jobs.size()));
}
BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);

void BM_BatchParallel(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  auto policies = make_policies(workers);
  const auto fn = job_fn(policies);
  for (auto _ : state) benchmark::DoNotOptimize(egb::run_batch_parallel(suite().jobs, fn, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(suite().jobs.size()));
}
BENCHMARK(BM_BatchParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

std::vector<double> series(std::uint64_t seed, double p) {
  egb::Rng rng(seed);
  std::vector<double> v(2000);
  for (auto& x : v) x = rng.uniform() < p ? 1.0 : 0.0;
  return v;
}

void BM_BootstrapSerial(benchmark::State& state) {
  const auto a = series(1, 0.6);
  const auto b = series(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(egb::paired_bootstrap_serial(a, b, 2000, 7));
}
BENCHMARK(BM_BootstrapSerial)->Unit(benchmark::kMillisecond);

void BM_BootstrapParallel(benchmark::State& state) {
  const auto a = series(1, 0.6);
  const auto b = series(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(egb::paired_bootstrap_parallel(a, b, 2000, 7));
}
BENCHMARK(BM_BootstrapParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
