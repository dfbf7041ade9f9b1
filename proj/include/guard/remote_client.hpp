#pragma once

/**
 * Backend over an OpenAI-compatible completions endpoint with token
 * logprobs. The endpoint never exposes full distributions, so per-token
 * entropy is the top-k lower-bound estimate and every result carries the
 * estimated flag.
 *
 * Transport policy: at most `max_attempts` tries per request with
 * exponential backoff, then TransportError. A span is never silently
 * spliced after a gap; the controller aborts the trajectory with the
 * partial record instead.
 */

#include <memory>
#include <string>

#include "guard/backend.hpp"

namespace guard {

struct RemoteConfig {
  std::string endpoint;                        // scheme://host[:port]
  std::string completions_path = "/v1/completions";
  std::string model;                           // omitted from requests when empty
  std::string api_key;                         // GUARD_API_KEY env var overrides
  int topk = 20;                               // logprobs=k request parameter
  int max_inflight = 4;
  int max_attempts = 3;
  int backoff_ms = 100;                        // doubled after each failed attempt
  int timeout_seconds = 120;
};

// Name of the environment variable that overrides RemoteConfig::api_key.
extern const char* kApiKeyEnvVar;

class RemoteBackend final : public Backend {
 public:
  // Throws ValidationError when no API key is configured (names the env
  // var) or the endpoint URL is unusable.
  explicit RemoteBackend(RemoteConfig cfg);
  ~RemoteBackend() override;

  GenerationStep step(const Prefix& prefix, const DecodePolicy& policy) override;
  SpanResult generate_span(const Prefix& prefix, const std::string& injected_text, int horizon,
                           const DecodePolicy& policy) override;
  BackendCapabilities capabilities() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Fully parsed completions response: token texts plus one truncated
// logprob set per token. Exposed for recorded-fixture contract tests.
struct ParsedCompletion {
  std::vector<Token> tokens;
  std::vector<TruncatedLogprobs> logprobs;
  bool stopped = false;  // finish_reason == "stop"
};

// Throws ParseError on malformed bodies and ValidationError when logprob
// mass accounting fails beyond 1e-6.
ParsedCompletion parse_completion_detail(const std::string& body);
SpanResult parse_completion_response(const std::string& body);

}  // namespace guard
