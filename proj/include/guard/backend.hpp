#pragma once

/**
 * Uniform contract for token generation with per-step distribution
 * information. Two implementations: ScriptedBackend (deterministic state
 * table, desk-scale test double) and RemoteBackend (OpenAI-compatible
 * completions endpoint with top-k logprobs).
 *
 * A backend instance must accept concurrent generate_span calls; branch
 * generation issues all three branches in parallel.
 */

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "guard/entropy.hpp"

namespace guard {

// Decoded text the backend continues from. The prompt is kept verbatim and
// generated/injected text accumulates behind it; backends consume text(),
// never raw token ids (the scripted format matches on decoded suffixes and
// remote endpoints take plain prompts).
struct Prefix {
  std::string prompt;
  std::string generated;

  std::string text() const { return prompt + generated; }
};

struct DecodePolicy {
  double temperature = 0.0;  // 0 = deterministic argmax
  double top_p = 0.95;
  uint64_t seed = 0;
};

struct Token {
  int32_t id = -1;  // backend-local id; -1 when the backend exposes none
  std::string text;
};

using StepDistribution = std::variant<TokenDistribution, TruncatedLogprobs>;

struct GenerationStep {
  Token token;
  StepDistribution distribution;
  double entropy_nats = 0.0;
  bool entropy_estimated = false;  // true when derived from truncated logprobs
  bool is_eos = false;
};

// One short-horizon continuation. Injected steering text is force-fed and
// never appears here: tokens/entropies cover the generated portion only.
struct SpanResult {
  std::vector<Token> tokens;
  std::string text;  // concatenation of token texts
  std::vector<double> entropies;
  bool entropy_estimated = false;
  bool stopped_early = false;  // EOS before the horizon
};

struct BackendCapabilities {
  bool has_full_distribution = false;
  int max_topk = 0;  // meaningful when has_full_distribution is false
  bool supports_prefix_reuse = false;
  bool supports_batched_spans = false;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Next candidate token under `policy`, plus distribution info.
  // Deterministic given (prefix, policy). Throws TransportError when the
  // backend is unreachable after retries.
  virtual GenerationStep step(const Prefix& prefix, const DecodePolicy& policy) = 0;

  // Appends injected_text to the prefix (force-fed: no entropies, does not
  // count toward the horizon), then generates up to `horizon` tokens or
  // until EOS. Throws DomainError when horizon < 1.
  virtual SpanResult generate_span(const Prefix& prefix, const std::string& injected_text,
                                   int horizon, const DecodePolicy& policy) = 0;

  virtual BackendCapabilities capabilities() const = 0;
};

}  // namespace guard
