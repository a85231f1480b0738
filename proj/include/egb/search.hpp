// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egb/cost.hpp"
#include "egb/policy.hpp"
#include "egb/types.hpp"

namespace egb {

/// Limits on executed Phase-2 branches.
struct BranchBudget {
  int global_limit = 4;    // B
  int per_step_limit = 5;  // B_s
  int global_used = 0;
  std::map<StepAddr, int> per_step_used;

  /// b counts trajectories including the first pass, so B = b - 1.
  static BranchBudget from_trajectory_cap(int b, int per_step_limit = 5);
  /// B = 50, B_s = 5.
  static BranchBudget large_preset();

  int used_at(StepAddr s) const;
  bool allows(StepAddr s) const { return global_used < global_limit && used_at(s) < per_step_limit; }
  void charge(StepAddr s);
};

enum class EntropyMode { Sampling, Logits };

struct SearchConfig {
  int m = 10;
  BranchBudget budget = BranchBudget::from_trajectory_cap(5);
  EntropyMode mode = EntropyMode::Sampling;
  double tau = 0.01;
  std::size_t k = 50;
  std::uint64_t seed = 0;
};

struct BranchAttempt {
  StepAddr substep;
  std::string tool;
  bool success = false;

  bool operator==(const BranchAttempt&) const = default;
};

struct SearchOutcome {
  bool success = false;
  /// The successful branch, or the first pass when nothing succeeded.
  TrajectoryState final_trajectory;
  /// Phase-1 trajectory with its decision records.
  TrajectoryState first_pass;
  std::vector<BranchAttempt> branches_tried;
  CostLedger cost;
  /// Digit-path probability mass discarded across all distributions.
  double dropped_mass = 0.0;
};

/// Entropy-guided branching: a recorded first pass, then branches from the
/// most uncertain substeps in order of decreasing entropy.
SearchOutcome egb_run(const Case& c, Policy& policy, const SearchConfig& config);

/// One sampled action per substep, executed in order; no branching.
SearchOutcome greedy_run(const Case& c, Policy& policy, std::uint64_t seed, std::size_t k = 50);

/// Majority vote over m samples per substep; no branching.
SearchOutcome self_consistency_run(const Case& c, Policy& policy, int m, std::uint64_t seed, std::size_t k = 50);

/// Same as egb_run but branch points are visited in a seeded random order.
SearchOutcome random_branch_run(const Case& c, Policy& policy, const SearchConfig& config);

/// Base seed for the samples of one decision. `tag` is 0 for the first pass
/// and 1 + attempt index inside Phase-2 branches.
std::uint64_t decision_seed(std::uint64_t run_seed, const std::string& case_id, StepAddr substep, std::uint64_t tag);

}  // namespace egb
