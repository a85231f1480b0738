// SPDX-License-Identifier: Apache-2.0

#include "egb/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

#include "httplib.h"

#include "egb/dataset.hpp"
#include "egb/error.hpp"

namespace egb {

RemoteConfig RemoteConfig::from_env() { return from_env(RemoteConfig{}); }

RemoteConfig RemoteConfig::from_env(RemoteConfig base) {
  if (const char* v = std::getenv("EGB_REMOTE_ENDPOINT"); v && *v) base.endpoint = v;
  if (const char* v = std::getenv("EGB_REMOTE_API_KEY"); v && *v) base.api_key = v;
  if (const char* v = std::getenv("EGB_REMOTE_MODEL"); v && *v) base.model = v;
  return base;
}

Action parse_action_reply(const std::string& text, const CandidateSet& candidates) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return Action::invalid();
  Json doc = Json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return Action::invalid();
  auto tool = doc.find("tool");
  if (tool == doc.end() || !tool->is_string()) return Action::invalid();
  const std::string name = tool->get<std::string>();
  if (!candidates.contains(name)) return Action::invalid();
  Action a{name, {}};
  if (name == kNoOp) return a;
  if (auto args = doc.find("args"); args != doc.end() && !args->is_null()) {
    if (!args->is_object()) return Action::invalid();
    for (auto it = args->begin(); it != args->end(); ++it) {
      try {
        a.args.emplace(it.key(), literal_from_json(*it));
      } catch (const std::invalid_argument&) {
        return Action::invalid();
      }
    }
  }
  return a;
}

RemotePolicy::RemotePolicy(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw ConfigError("remote backend needs an endpoint (set EGB_REMOTE_ENDPOINT)");
  }
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos || config_.endpoint.compare(0, scheme, "http") != 0) {
    throw ConfigError("remote endpoint '" + config_.endpoint + "' must be an http:// URL");
  }
  const auto slash = config_.endpoint.find('/', scheme + 3);
  host_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.endpoint.substr(slash);
}

Json RemotePolicy::post(const Json& body, const std::string& where) const {
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms << std::min(attempt - 1, 6)));
    }
    httplib::Client cli(host_);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw PolicyUnavailableError(where + ": " + config_.endpoint + " answered HTTP " +
                                   std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    Json doc = Json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) {
      last_error = "response is not JSON";
      continue;
    }
    return doc;
  }
  throw PolicyUnavailableError(where + ": " + config_.endpoint + " unavailable after " +
                               std::to_string(config_.retries + 1) + " attempts (" + last_error + ")");
}

Json RemotePolicy::request(const std::string& prompt, std::optional<std::string> prefill, int max_tokens,
                           bool logprobs, std::optional<std::uint64_t> seed) const {
  Json messages = Json::array();
  messages.push_back({{"role", "system"}, {"content", "You select tools for one step of a plan."}});
  messages.push_back({{"role", "user"}, {"content", prompt}});
  if (prefill) messages.push_back({{"role", "assistant"}, {"content", *prefill}});
  Json body{{"model", config_.model},
            {"messages", std::move(messages)},
            {"temperature", config_.temperature},
            {"max_tokens", max_tokens}};
  if (seed) body["seed"] = *seed & 0x7fffffffffffffffULL;
  if (logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = config_.top_logprobs;
  }
  return body;
}

namespace {

std::string reply_text(const Json& doc) {
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string{};
  } catch (const Json::exception&) {
    return {};
  }
}

/// Probabilities of the ten digit tokens at the first generated position.
std::optional<std::array<double, 10>> digit_probs(const Json& doc) {
  const Json* top = nullptr;
  try {
    top = &doc.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs");
  } catch (const Json::exception&) {
    return std::nullopt;
  }
  if (!top->is_array()) return std::nullopt;
  std::array<double, 10> p{};
  for (const auto& entry : *top) {
    if (!entry.contains("token") || !entry.contains("logprob")) continue;
    std::string tok = entry["token"].get<std::string>();
    while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
    if (tok.size() == 1 && tok[0] >= '0' && tok[0] <= '9') p[tok[0] - '0'] += std::exp(entry["logprob"].get<double>());
  }
  return p;
}

}  // namespace

Action RemotePolicy::sample_action(const DecisionContext& ctx, std::uint64_t seed) {
  const Json body = request(render_prompt(ctx), std::nullopt, config_.max_tokens, false, seed);
  return parse_action_reply(reply_text(post(body, "substep " + ctx.substep->index.str())), *ctx.candidates);
}

std::vector<Action> RemotePolicy::sample_actions(const DecisionContext& ctx, int m, std::uint64_t base_seed) {
  std::vector<Action> out(static_cast<std::size_t>(std::max(m, 0)));
  const int width = std::max(1, config_.max_in_flight);
  for (int start = 0; start < m; start += width) {
    std::vector<std::future<Action>> inflight;
    const int end = std::min(m, start + width);
    for (int i = start; i < end; ++i) {
      inflight.push_back(std::async(std::launch::async, [&, i] { return sample_action(ctx, sample_seed(base_seed, i)); }));
    }
    for (int i = start; i < end; ++i) out[static_cast<std::size_t>(i)] = inflight[static_cast<std::size_t>(i - start)].get();
  }
  return out;
}

IndexDistribution RemotePolicy::index_distribution(const DecisionContext& ctx) {
  const std::string where = "substep " + ctx.substep->index.str();
  const std::string prompt = render_index_prompt(ctx);
  const std::size_t k = ctx.candidates->size();

  auto first = digit_probs(post(request(prompt, std::nullopt, 1, true, std::nullopt), where));
  if (!first) throw UnsupportedModeError(where + ": " + config_.endpoint + " returned no token probabilities");

  DigitModel dm;
  double digit_total = 0.0;
  for (double p : *first) digit_total += p;
  if (!(digit_total > 0.0)) throw DegenerateDistributionError(where + ": no probability on digit tokens");
  int passes = 1;
  for (std::size_t d1 = 0; d1 < 10; ++d1) {
    dm.p1[d1] = (*first)[d1] / digit_total;
    if (dm.p1[d1] <= 0.0) {
      dm.p_end[d1] = 1.0;
      continue;
    }
    ++passes;
    auto second = digit_probs(post(request(prompt, std::to_string(d1), 1, true, std::nullopt), where));
    if (!second) throw UnsupportedModeError(where + ": " + config_.endpoint + " returned no token probabilities");
    double s = 0.0;
    for (std::size_t d2 = 0; d2 < 10; ++d2) {
      dm.p2[d1][d2] = (*second)[d2];
      s += (*second)[d2];
    }
    dm.p_end[d1] = std::max(0.0, 1.0 - s);
  }
  IndexDistribution d = compose_digits(dm, k);
  d.forward_passes = passes;
  d.dropped_mass = std::max(0.0, 1.0 - digit_total);
  return d;
}

Action RemotePolicy::generate_params(const DecisionContext& ctx, const std::string& tool) {
  if (tool == kNoOp) return Action::no_op();
  const std::string prompt = render_prompt(ctx) + "The tool for this substep is " + tool +
                             ". Reply with its call as {\"tool\": \"" + tool + "\", \"args\": {...}}.\n";
  const Json body = request(prompt, std::nullopt, config_.max_tokens, false, std::nullopt);
  Action a = parse_action_reply(reply_text(post(body, "substep " + ctx.substep->index.str())), *ctx.candidates);
  if (a.tool != tool) return Action{tool, {}};
  return a;
}

}  // namespace egb
