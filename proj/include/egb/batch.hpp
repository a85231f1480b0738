// SPDX-License-Identifier: Apache-2.0

#pragma once

// Batch evaluation over (case, seed) jobs. The serial kernel is the
// reference; the OpenMP kernel must return the same rows in the same order.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "egb/metrics.hpp"

namespace egb {

struct Job {
  std::size_t case_index = 0;
  std::uint64_t seed = 0;

  bool operator==(const Job&) const = default;
};

/// Runs one job. `worker` is the executing thread's index (0 when serial).
using JobFn = std::function<CaseRow(const Job& job, int worker)>;

/// Every (case, seed) pair, case-major.
std::vector<Job> make_jobs(std::size_t n_cases, std::span<const std::uint64_t> seeds);

std::vector<CaseRow> run_batch_serial(std::span<const Job> jobs, const JobFn& fn);

/// Results are stored by job index, so output order matches the serial
/// kernel. The first exception thrown by any job is rethrown after the loop.
std::vector<CaseRow> run_batch_parallel(std::span<const Job> jobs, const JobFn& fn, int workers);

}  // namespace egb
