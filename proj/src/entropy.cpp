// SPDX-License-Identifier: Apache-2.0

#include "egb/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace egb {

VoteResult vote_entropy(std::span<const Action> samples, const CandidateSet* ranking) {
  if (samples.empty()) throw std::invalid_argument("vote_entropy needs at least one sample");

  std::map<std::string, std::vector<Action>> calls;
  for (const auto& a : samples) calls[a.tool].push_back(a);

  const double m = static_cast<double>(samples.size());
  auto rank = [&](const std::string& tool) {
    return ranking ? ranking->rank_of(tool) : std::size_t{0};
  };

  VoteResult out;
  for (auto& [tool, list] : calls) {
    out.distribution.push_back(ToolVote{tool, static_cast<double>(list.size()) / m, std::move(list)});
  }
  std::sort(out.distribution.begin(), out.distribution.end(), [&](const ToolVote& a, const ToolVote& b) {
    if (a.calls.size() != b.calls.size()) return a.calls.size() > b.calls.size();
    const auto ra = rank(a.tool), rb = rank(b.tool);
    if (ra != rb) return ra < rb;
    return a.tool < b.tool;
  });

  for (const auto& v : out.distribution) {
    if (v.probability > 0.0) out.entropy -= v.probability * std::log(v.probability);
  }

  const ToolVote* winner = &out.distribution.front();
  if (winner->tool == kInvalid && out.distribution.size() > 1) winner = &out.distribution[1];
  out.majority = winner->calls.front();
  return out;
}

double dist_entropy(std::span<const double> probs) {
  double e = 0.0;
  for (double p : probs) {
    if (p > 0.0) e -= p * std::log(p);
  }
  return e;
}

double dist_entropy(const IndexDistribution& dist) { return dist_entropy(dist.probs); }

double dist_entropy(std::span<const ToolVote> dist) {
  double e = 0.0;
  for (const auto& v : dist) {
    if (v.probability > 0.0) e -= v.probability * std::log(v.probability);
  }
  return e;
}

std::vector<ToolVote> filter_candidates(std::span<const ToolVote> dist, double tau, std::string_view executed_tool) {
  std::vector<ToolVote> out;
  for (const auto& v : dist) {
    if (v.probability >= tau || v.tool == executed_tool) out.push_back(v);
  }
  return out;
}

std::vector<EntropyBin> bin_entropy_errors(std::span<const EntropySample> samples, int bins) {
  if (bins < 2) throw std::invalid_argument("bin_entropy_errors needs at least 2 bins");
  if (samples.empty()) return {};
  double max_e = 0.0;
  for (const auto& s : samples) max_e = std::max(max_e, s.entropy);

  const double width = max_e / bins;
  std::vector<EntropyBin> table(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    table[i].lo = width * i;
    table[i].hi = i + 1 == bins ? max_e : width * (i + 1);
  }
  for (const auto& s : samples) {
    int b = width > 0.0 ? static_cast<int>(s.entropy / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++table[b].steps;
    table[b].errors += s.error ? 1 : 0;
  }
  for (auto& bin : table) {
    bin.error_rate = bin.steps ? static_cast<double>(bin.errors) / static_cast<double>(bin.steps) : 0.0;
  }
  return table;
}

std::vector<EntropySample> entropy_samples(std::span<const StepDecisionRecord> records, const Case& c) {
  std::vector<EntropySample> out;
  for (const auto& r : records) {
    const PlanNode* node = c.find_node(r.substep);
    if (node == nullptr || !node->requires_tool()) continue;
    out.push_back({r.entropy, r.executed.tool != node->reference_tool()});
  }
  return out;
}

std::vector<EntropyBin> bin_entropy_errors(std::span<const StepDecisionRecord> records, const Case& c, int bins) {
  const auto samples = entropy_samples(records, c);
  return bin_entropy_errors(samples, bins);
}

}  // namespace egb
