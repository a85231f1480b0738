// SPDX-License-Identifier: Apache-2.0

#include "egb/batch.hpp"

#include <atomic>
#include <exception>

#include <omp.h>

namespace egb {

std::vector<Job> make_jobs(std::size_t n_cases, std::span<const std::uint64_t> seeds) {
  std::vector<Job> jobs;
  jobs.reserve(n_cases * seeds.size());
  for (std::size_t c = 0; c < n_cases; ++c) {
    for (auto s : seeds) jobs.push_back(Job{c, s});
  }
  return jobs;
}

std::vector<CaseRow> run_batch_serial(std::span<const Job> jobs, const JobFn& fn) {
  std::vector<CaseRow> rows;
  rows.reserve(jobs.size());
  for (const auto& job : jobs) rows.push_back(fn(job, 0));
  return rows;
}

std::vector<CaseRow> run_batch_parallel(std::span<const Job> jobs, const JobFn& fn, int workers) {
  std::vector<CaseRow> rows(jobs.size());
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      rows[static_cast<std::size_t>(i)] = fn(jobs[static_cast<std::size_t>(i)], omp_get_thread_num());
    } catch (...) {
#pragma omp critical(egb_batch_failure)
      if (!failure) failure = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace egb
