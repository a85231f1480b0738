// SPDX-License-Identifier: Apache-2.0

#include "egb/search.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "egb/entropy.hpp"
#include "egb/rng.hpp"
#include "egb/simulator.hpp"

namespace egb {

BranchBudget BranchBudget::from_trajectory_cap(int b, int per_step_limit) {
  BranchBudget out;
  out.global_limit = std::max(0, b - 1);
  out.per_step_limit = per_step_limit;
  return out;
}

BranchBudget BranchBudget::large_preset() {
  BranchBudget out;
  out.global_limit = 50;
  out.per_step_limit = 5;
  return out;
}

int BranchBudget::used_at(StepAddr s) const {
  auto it = per_step_used.find(s);
  return it == per_step_used.end() ? 0 : it->second;
}

void BranchBudget::charge(StepAddr s) {
  ++global_used;
  ++per_step_used[s];
}

std::uint64_t decision_seed(std::uint64_t run_seed, const std::string& case_id, StepAddr substep, std::uint64_t tag) {
  return derive_seed({run_seed, fnv1a(case_id), static_cast<std::uint64_t>(substep.step),
                      static_cast<std::uint64_t>(substep.sub), tag});
}

namespace {

constexpr std::uint64_t kShuffleTag = 0x53485546464c45ULL;

class Engine {
 public:
  Engine(const Case& c, Policy& policy, const SearchConfig& cfg) : c_(c), policy_(policy), cfg_(cfg) {
    for (const auto& node : c.plan) {
      if (node.kind != NodeKind::Substep) continue;
      substeps_.push_back(&node);
      candidates_.push_back(retrieve_candidates(c, node, cfg.k));
    }
  }

  /// Phase 1: every substep decided by vote or argmax, with records.
  TrajectoryState first_pass() {
    TrajectoryState h;
    for (std::size_t i = 0; i < substeps_.size(); ++i) {
      const PlanNode& node = *substeps_[i];
      DecisionContext ctx{&c_, &node, &h, &candidates_[i]};
      StepDecisionRecord rec =
          cfg_.mode == EntropyMode::Sampling ? decide_by_vote(ctx, cfg_.m) : decide_by_distribution(ctx);
      rec.observation = execute(c_, rec.executed);
      h.steps.push_back(TrajectoryStep{node.index, rec.executed, rec.observation});
      h.decisions.push_back(std::move(rec));
      ++h.cursor;
    }
    return h;
  }

  /// Phase 2 over `order` (indices into first.decisions). Returns true and
  /// fills out.final_trajectory on the first successful branch.
  bool branch(const TrajectoryState& first, const std::vector<std::size_t>& order, SearchOutcome& out) {
    BranchBudget budget = cfg_.budget;
    std::uint64_t attempt = 0;
    for (std::size_t r : order) {
      const StepDecisionRecord& rec = first.decisions[r];
      const std::size_t pos = position_of(rec.substep);
      const auto kept = filter_candidates(rec.distribution, cfg_.tau, rec.executed.tool);
      for (const auto& alt : kept) {
        if (alt.tool == rec.executed.tool || alt.tool == kInvalid) continue;
        if (!budget.allows(rec.substep)) break;

        TrajectoryState h;
        h.steps.assign(first.steps.begin(), first.steps.begin() + static_cast<std::ptrdiff_t>(pos));
        h.cursor = pos;

        const PlanNode& node = *substeps_[pos];
        DecisionContext ctx{&c_, &node, &h, &candidates_[pos]};
        Action a;
        if (cfg_.mode == EntropyMode::Sampling && !alt.calls.empty()) {
          a = alt.calls.front();
        } else {
          a = generate(ctx, alt.tool);
        }
        push(h, node, std::move(a));

        ++attempt;
        for (std::size_t j = pos + 1; j < substeps_.size(); ++j) {
          const PlanNode& next = *substeps_[j];
          DecisionContext dctx{&c_, &next, &h, &candidates_[j]};
          push(h, next, single_pass(dctx, attempt));
        }

        const bool ok = judge_success(c_, h);
        budget.charge(rec.substep);
        ++out.cost.branches_executed;
        out.branches_tried.push_back(BranchAttempt{rec.substep, alt.tool, ok});
        if (ok) {
          out.final_trajectory = std::move(h);
          return true;
        }
      }
    }
    return false;
  }

  const std::vector<const PlanNode*>& substeps() const { return substeps_; }
  CostLedger cost;
  double dropped_mass = 0.0;

 private:
  std::size_t position_of(StepAddr addr) const {
    for (std::size_t i = 0; i < substeps_.size(); ++i) {
      if (substeps_[i]->index == addr) return i;
    }
    return substeps_.size();
  }

  void push(TrajectoryState& h, const PlanNode& node, Action a) {
    Observation o = execute(c_, a);
    h.steps.push_back(TrajectoryStep{node.index, std::move(a), std::move(o)});
    ++h.cursor;
  }

  std::vector<Action> sample(const DecisionContext& ctx, int m, std::uint64_t tag) {
    const std::string prompt = render_prompt(ctx);
    auto samples = policy_.sample_actions(ctx, m, decision_seed(cfg_.seed, c_.id, ctx.substep->index, tag));
    cost.generation_calls += m;
    cost.input_token_proxy += m * token_proxy(prompt.size());
    for (const auto& a : samples) cost.output_token_proxy += token_proxy(render_action(a).size());
    return samples;
  }

  Action generate(const DecisionContext& ctx, const std::string& tool) {
    Action a = policy_.generate_params(ctx, tool);
    ++cost.generation_calls;
    cost.input_token_proxy += token_proxy(render_prompt(ctx).size());
    cost.output_token_proxy += token_proxy(render_action(a).size());
    return a;
  }

  IndexDistribution distribution(const DecisionContext& ctx) {
    IndexDistribution d = policy_.index_distribution(ctx);
    cost.lightweight_forward_calls += d.forward_passes;
    cost.input_token_proxy += d.forward_passes * token_proxy(render_index_prompt(ctx).size());
    dropped_mass += d.dropped_mass;
    return d;
  }

  static std::size_t argmax(const std::vector<double>& p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  StepDecisionRecord decide_by_vote(const DecisionContext& ctx, int m) {
    auto samples = sample(ctx, m, 0);
    VoteResult vr = vote_entropy(samples, ctx.candidates);
    StepDecisionRecord rec;
    rec.substep = ctx.substep->index;
    rec.entropy = vr.entropy;
    rec.distribution = std::move(vr.distribution);
    rec.executed = std::move(vr.majority);
    return rec;
  }

  StepDecisionRecord decide_by_distribution(const DecisionContext& ctx) {
    IndexDistribution d = distribution(ctx);
    const std::size_t best = argmax(d.probs);
    StepDecisionRecord rec;
    rec.substep = ctx.substep->index;
    rec.entropy = dist_entropy(d);
    rec.executed = generate(ctx, ctx.candidates->name(best));
    for (std::size_t i = 0; i < d.probs.size(); ++i) {
      if (d.probs[i] <= 0.0) continue;
      ToolVote v{ctx.candidates->name(i), d.probs[i], {}};
      if (i == best) v.calls.push_back(rec.executed);
      rec.distribution.push_back(std::move(v));
    }
    std::stable_sort(rec.distribution.begin(), rec.distribution.end(),
                     [](const ToolVote& a, const ToolVote& b) { return a.probability > b.probability; });
    return rec;
  }

  Action single_pass(const DecisionContext& ctx, std::uint64_t attempt) {
    if (cfg_.mode == EntropyMode::Sampling) return std::move(sample(ctx, 1, 1 + attempt).front());
    IndexDistribution d = distribution(ctx);
    return generate(ctx, ctx.candidates->name(argmax(d.probs)));
  }

  const Case& c_;
  Policy& policy_;
  const SearchConfig& cfg_;
  std::vector<const PlanNode*> substeps_;
  std::vector<CandidateSet> candidates_;
};

std::vector<std::size_t> entropy_order(const TrajectoryState& first) {
  std::vector<std::size_t> order(first.decisions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return first.decisions[a].entropy > first.decisions[b].entropy;
  });
  return order;
}

SearchOutcome run_with_order(const Case& c, Policy& policy, const SearchConfig& config, bool shuffled) {
  const auto t0 = std::chrono::steady_clock::now();
  Engine engine(c, policy, config);
  SearchOutcome out;
  out.first_pass = engine.first_pass();
  out.final_trajectory = out.first_pass;
  out.success = judge_success(c, out.first_pass);

  if (!out.success && config.budget.global_limit > 0) {
    std::vector<std::size_t> order;
    if (shuffled) {
      order.resize(out.first_pass.decisions.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed({config.seed, fnv1a(c.id), kShuffleTag}));
      rng.shuffle(order.begin(), order.end());
    } else {
      order = entropy_order(out.first_pass);
    }
    out.success = engine.branch(out.first_pass, order, out);
  }

  out.cost += engine.cost;
  out.dropped_mass = engine.dropped_mass;
  out.cost.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

SearchOutcome egb_run(const Case& c, Policy& policy, const SearchConfig& config) {
  return run_with_order(c, policy, config, false);
}

SearchOutcome random_branch_run(const Case& c, Policy& policy, const SearchConfig& config) {
  return run_with_order(c, policy, config, true);
}

SearchOutcome self_consistency_run(const Case& c, Policy& policy, int m, std::uint64_t seed, std::size_t k) {
  SearchConfig cfg;
  cfg.m = m;
  cfg.seed = seed;
  cfg.k = k;
  cfg.budget.global_limit = 0;
  return run_with_order(c, policy, cfg, false);
}

SearchOutcome greedy_run(const Case& c, Policy& policy, std::uint64_t seed, std::size_t k) {
  const auto t0 = std::chrono::steady_clock::now();
  SearchOutcome out;
  TrajectoryState& h = out.first_pass;
  for (const auto& node : c.plan) {
    if (node.kind != NodeKind::Substep) continue;
    const CandidateSet cands = retrieve_candidates(c, node, k);
    DecisionContext ctx{&c, &node, &h, &cands};
    const std::string prompt = render_prompt(ctx);
    Action a = policy.sample_action(ctx, sample_seed(decision_seed(seed, c.id, node.index, 0), 0));
    out.cost.generation_calls += 1;
    out.cost.input_token_proxy += token_proxy(prompt.size());
    out.cost.output_token_proxy += token_proxy(render_action(a).size());

    StepDecisionRecord rec;
    rec.substep = node.index;
    rec.entropy = 0.0;
    rec.distribution.push_back(ToolVote{a.tool, 1.0, {a}});
    rec.executed = a;
    rec.observation = execute(c, a);
    h.steps.push_back(TrajectoryStep{node.index, std::move(a), rec.observation});
    h.decisions.push_back(std::move(rec));
    ++h.cursor;
  }
  out.final_trajectory = out.first_pass;
  out.success = judge_success(c, out.final_trajectory);
  out.cost.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace egb
