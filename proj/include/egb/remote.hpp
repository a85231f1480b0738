// SPDX-License-Identifier: Apache-2.0

#pragma once

// Chat-completion adapter for a remote model server (OpenAI-style
// /v1/chat/completions). Plain HTTP only.
//
// Environment:
//   EGB_REMOTE_ENDPOINT  full URL, e.g. http://127.0.0.1:8000/v1/chat/completions
//   EGB_REMOTE_API_KEY   bearer token (optional)
//   EGB_REMOTE_MODEL     model id

#include <optional>
#include <string>

#include "json.hpp"

#include "egb/policy.hpp"

namespace egb {

struct RemoteConfig {
  std::string endpoint;
  std::string api_key;
  std::string model;
  double temperature = 1.0;
  int max_tokens = 256;
  double timeout_s = 60.0;
  int retries = 3;
  int retry_backoff_ms = 200;
  int top_logprobs = 20;
  /// Upper bound on concurrent in-flight requests for one sample_actions call.
  int max_in_flight = 8;

  /// Fills endpoint, api_key and model from the environment, keeping
  /// existing values for unset variables.
  static RemoteConfig from_env(RemoteConfig base);
  static RemoteConfig from_env();
};

/// Parses a model reply into an action over `candidates`. Returns
/// Action::invalid() when no JSON object with a known tool is found or an
/// argument is not a scalar.
Action parse_action_reply(const std::string& text, const CandidateSet& candidates);

class RemotePolicy final : public Policy {
 public:
  explicit RemotePolicy(RemoteConfig config);

  Action sample_action(const DecisionContext& ctx, std::uint64_t seed) override;
  std::vector<Action> sample_actions(const DecisionContext& ctx, int m, std::uint64_t base_seed) override;
  IndexDistribution index_distribution(const DecisionContext& ctx) override;
  Action generate_params(const DecisionContext& ctx, const std::string& tool) override;

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  /// POSTs `body` with bounded retries. Throws PolicyUnavailableError naming
  /// `where` and the endpoint once retries are exhausted.
  nlohmann::json post(const nlohmann::json& body, const std::string& where) const;
  nlohmann::json request(const std::string& prompt, std::optional<std::string> prefill, int max_tokens,
                         bool logprobs, std::optional<std::uint64_t> seed) const;

  RemoteConfig config_;
  std::string host_;
  std::string path_;
};

}  // namespace egb
