// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "egb/policy.hpp"
#include "egb/types.hpp"

namespace egb {

struct VoteResult {
  Action majority;
  double entropy = 0.0;  // nats
  /// Buckets ordered by probability descending, then retrieval rank, then name.
  std::vector<ToolVote> distribution;
};

/// Tool-name vote over `samples` (nonempty). p_t = votes_t / m; NO_OP and the
/// INVALID marker are ordinary buckets for the entropy. The majority is the
/// first-sampled call of the top-voted tool, ties going to the lower
/// retrieval rank in `ranking` (when given) and then to the smaller name.
/// INVALID wins only when every sample is invalid.
VoteResult vote_entropy(std::span<const Action> samples, const CandidateSet* ranking = nullptr);

/// Shannon entropy in nats with 0 log 0 = 0.
double dist_entropy(std::span<const double> probs);
double dist_entropy(const IndexDistribution& dist);
double dist_entropy(std::span<const ToolVote> dist);

/// Entries with probability >= tau, plus the executed tool whatever its
/// probability. Order is preserved.
std::vector<ToolVote> filter_candidates(std::span<const ToolVote> dist, double tau, std::string_view executed_tool);

/// One first-pass decision for the entropy/error table.
struct EntropySample {
  double entropy = 0.0;
  bool error = false;
};

struct EntropyBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t steps = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;  // 0 for an empty bin
};

/// `bins` equal-width bins over [0, max entropy]; the last bin is closed.
/// Empty input gives an empty table. Throws std::invalid_argument if bins < 2.
std::vector<EntropyBin> bin_entropy_errors(std::span<const EntropySample> samples, int bins);

/// First-pass samples of one case: tool-bearing substeps only, error when the
/// executed tool differs from the reference tool.
std::vector<EntropySample> entropy_samples(std::span<const StepDecisionRecord> records, const Case& c);

std::vector<EntropyBin> bin_entropy_errors(std::span<const StepDecisionRecord> records, const Case& c, int bins);

}  // namespace egb
