#pragma once

/**
 * Deterministic scripted backend: a state table mapping decoded-prefix
 * suffix patterns to next-token distributions.
 *
 * File format (line oriented, # comments):
 *
 *   vocab: <tok> <tok> ...          tokens; quote for whitespace: "x.\n\n"
 *   match "<suffix>" -> p1 .. pn    longest matching suffix wins
 *   default -> p1 .. pn             fallback row for unknown prefixes
 *
 * Probabilities are decimals summing to 1 within 1e-6. The token named EOS
 * is reserved: sampling it ends generation and it contributes no text.
 * Rule patterns match against the full decoded text (prompt included);
 * among matching rules the longest pattern wins, first declared on ties.
 *
 * Instances are immutable after load and safe for concurrent use.
 */

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "guard/backend.hpp"

namespace guard {

struct ScriptRule {
  std::string suffix;
  TokenDistribution dist;
  int line = 0;
};

class ScriptedBackend final : public Backend {
 public:
  // Throws ParseError (with line numbers) on malformed input and
  // ValidationError on rows that do not sum to 1 within 1e-6.
  static std::shared_ptr<ScriptedBackend> parse(const std::string& text);
  static std::shared_ptr<ScriptedBackend> load_file(const std::string& path);

  GenerationStep step(const Prefix& prefix, const DecodePolicy& policy) override;
  SpanResult generate_span(const Prefix& prefix, const std::string& injected_text, int horizon,
                           const DecodePolicy& policy) override;
  BackendCapabilities capabilities() const override;

  // Introspection for enumeration-style tests and fixtures.
  const std::vector<std::string>& vocab() const { return vocab_; }
  int eos_id() const { return eos_id_; }
  // Longest-suffix rule lookup; the default row when nothing matches.
  const TokenDistribution& distribution_for(const std::string& decoded) const;

 private:
  std::vector<std::string> vocab_;
  int eos_id_ = -1;  // -1 when the vocabulary has no EOS token
  std::vector<ScriptRule> rules_;
  std::optional<TokenDistribution> default_dist_;
};

// Policy application shared with tests: temperature scaling + top-p
// truncation + seeded draw. Deterministic given (dist, policy, salt).
int sample_from_distribution(const TokenDistribution& dist, const DecodePolicy& policy,
                             uint64_t salt);

}  // namespace guard
