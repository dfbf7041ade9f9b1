#include "guard/remote_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "guard/errors.hpp"

namespace guard {

using nlohmann::json;

const char* kApiKeyEnvVar = "GUARD_API_KEY";

namespace {

TruncatedLogprobs build_truncated(const json& top_map, const std::string& token_text,
                                  const json& token_logprob) {
  TruncatedLogprobs t;
  bool token_covered = false;
  if (top_map.is_object()) {
    for (auto it = top_map.begin(); it != top_map.end(); ++it) {
      if (!it.value().is_number()) throw ParseError("top_logprobs value is not a number");
      t.entries.push_back({it.key(), it.value().get<double>()});
      if (it.key() == token_text) token_covered = true;
    }
  }
  if (!token_covered && token_logprob.is_number())
    t.entries.push_back({token_text, token_logprob.get<double>()});
  if (t.entries.empty()) throw ParseError("no logprobs for token '" + token_text + "'");

  double mass = 0.0;
  for (const auto& e : t.entries) mass += std::exp(e.logprob);
  double residual = 1.0 - mass;
  if (residual < -kTruncatedMassTol)
    throw ValidationError("logprob mass exceeds 1 by " + std::to_string(-residual));
  t.residual_mass = residual > 0.0 ? residual : 0.0;
  return t;
}

}  // namespace

ParsedCompletion parse_completion_detail(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("completion response is not JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw ParseError("completion response has no choices");
  const json& choice = doc["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null())
    throw ParseError("completion response carries no logprobs; request them with logprobs=k");
  const json& lp = choice["logprobs"];
  if (!lp.contains("tokens") || !lp["tokens"].is_array())
    throw ParseError("completion logprobs lack a tokens array");

  const json& tokens = lp["tokens"];
  const json token_logprobs = lp.value("token_logprobs", json::array());
  const json top_logprobs = lp.value("top_logprobs", json::array());

  ParsedCompletion out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].is_string()) throw ParseError("token entry is not a string");
    const std::string text = tokens[i].get<std::string>();
    const json tl = i < token_logprobs.size() ? token_logprobs[i] : json();
    const json top = i < top_logprobs.size() ? top_logprobs[i] : json();
    out.tokens.push_back(Token{-1, text});
    out.logprobs.push_back(build_truncated(top, text, tl));
  }
  out.stopped = choice.value("finish_reason", "") == "stop";
  return out;
}

SpanResult parse_completion_response(const std::string& body) {
  ParsedCompletion parsed = parse_completion_detail(body);
  SpanResult span;
  for (size_t i = 0; i < parsed.tokens.size(); ++i) {
    span.tokens.push_back(parsed.tokens[i]);
    span.entropies.push_back(entropy_lower_bound_from_topk(parsed.logprobs[i]));
    span.entropy_estimated = span.entropy_estimated || parsed.logprobs[i].residual_mass > 0.0;
    span.text += parsed.tokens[i].text;
  }
  span.stopped_early = parsed.stopped;
  return span;
}

struct RemoteBackend::Impl {
  RemoteConfig cfg;
  std::string key;
  std::counting_semaphore<> inflight{1};

  explicit Impl(RemoteConfig c) : cfg(std::move(c)), inflight(std::max(1, cfg.max_inflight)) {
    const char* env_key = std::getenv(kApiKeyEnvVar);
    key = env_key && *env_key ? env_key : cfg.api_key;
    if (key.empty())
      throw ValidationError(std::string("remote backend has no API key: set backend.api_key or "
                                        "the ") +
                            kApiKeyEnvVar + " environment variable");
    if (cfg.endpoint.empty()) throw ValidationError("remote backend requires backend.endpoint");
  }

  std::string post_completion(const std::string& prompt, int max_tokens,
                              const DecodePolicy& policy) {
    json req = {
        {"prompt", prompt},
        {"max_tokens", max_tokens},
        {"temperature", policy.temperature},
        {"top_p", policy.top_p},
        {"logprobs", cfg.topk},
        {"echo", false},
        {"stream", false},
        {"seed", policy.seed},
    };
    if (!cfg.model.empty()) req["model"] = cfg.model;
    const std::string body = req.dump();

    std::string last_error;
    int backoff = cfg.backoff_ms;
    for (int attempt = 1; attempt <= std::max(1, cfg.max_attempts); ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Client client(cfg.endpoint);
      client.set_connection_timeout(cfg.timeout_seconds, 0);
      client.set_read_timeout(cfg.timeout_seconds, 0);
      client.set_bearer_token_auth(key);
      auto res = client.Post(cfg.completions_path, body, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return res->body;
      last_error = "http status " + std::to_string(res->status);
      if (res->status < 500 && res->status != 429) break;  // not retryable
    }
    throw TransportError("completion request failed after retries: " + last_error);
  }
};

RemoteBackend::RemoteBackend(RemoteConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
RemoteBackend::~RemoteBackend() = default;

GenerationStep RemoteBackend::step(const Prefix& prefix, const DecodePolicy& policy) {
  impl_->inflight.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{impl_->inflight};

  ParsedCompletion parsed =
      parse_completion_detail(impl_->post_completion(prefix.text(), 1, policy));
  GenerationStep out;
  if (parsed.tokens.empty()) {
    // Prompt already complete: the endpoint stopped without emitting.
    out.token = Token{-1, ""};
    out.distribution = TruncatedLogprobs{{{"", 0.0}}, 0.0};
    out.entropy_nats = 0.0;
    out.is_eos = true;
    return out;
  }
  out.token = parsed.tokens[0];
  out.distribution = parsed.logprobs[0];
  out.entropy_nats = entropy_lower_bound_from_topk(parsed.logprobs[0]);
  out.entropy_estimated = parsed.logprobs[0].residual_mass > 0.0;
  out.is_eos = parsed.stopped && parsed.tokens.size() == 1 && parsed.tokens[0].text.empty();
  return out;
}

SpanResult RemoteBackend::generate_span(const Prefix& prefix, const std::string& injected_text,
                                        int horizon, const DecodePolicy& policy) {
  if (horizon < 1) throw DomainError("span horizon must be >= 1");
  impl_->inflight.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{impl_->inflight};

  return parse_completion_response(
      impl_->post_completion(prefix.text() + injected_text, horizon, policy));
}

BackendCapabilities RemoteBackend::capabilities() const {
  BackendCapabilities caps;
  caps.has_full_distribution = false;
  caps.max_topk = impl_->cfg.topk;
  caps.supports_prefix_reuse = false;  // server side, unobservable from here
  caps.supports_batched_spans = true;
  return caps;
}

}  // namespace guard
