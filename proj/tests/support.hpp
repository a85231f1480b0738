// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "egb/dataset.hpp"
#include "egb/policy.hpp"
#include "egb/synthgen.hpp"

namespace egb::test {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(EGB_TEST_DATA_DIR) / name;
}

inline const Case& promo_case() {
  static const Case c = load_cases(data_path("promo_example.json")).front();
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("egb-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Context for `node` with the full toolset as candidates.
struct Ctx {
  CandidateSet candidates;
  TrajectoryState history;
  DecisionContext ctx;

  Ctx(const Case& c, const PlanNode& node, std::size_t k = 100) : candidates(retrieve_candidates(c, node, k)) {
    ctx.case_ = &c;
    ctx.substep = &node;
    ctx.history = &history;
    ctx.candidates = &candidates;
  }
  Ctx(const Ctx&) = delete;
};

inline FaultRule fault(FaultSelect select, double p_correct, int count = 0, std::vector<int> positions = {}) {
  FaultRule r;
  r.select = select;
  r.p_correct = p_correct;
  r.count = count;
  r.positions = std::move(positions);
  return r;
}

}  // namespace egb::test
