#pragma once

/**
 * Next-token distributions and Shannon entropy (nats).
 *
 * Everything here is pure and stateless: values are plain structs, safe to
 * copy between threads. Entropy is always in nats; 0*ln(0) is 0 by
 * continuity, so one-hot distributions have entropy exactly 0.
 */

#include <span>
#include <string>
#include <vector>

namespace guard {

// Probability vector over the full vocabulary at one decoding step.
// Entries are >= 0 and sum to 1 within kDistributionSumTol.
struct TokenDistribution {
  std::vector<double> probs;
};

struct LogprobEntry {
  std::string token;
  double logprob = 0.0;  // nats
};

// Top-k logprobs plus the unaccounted tail mass, as exposed by remote
// completion endpoints that never return the full distribution.
struct TruncatedLogprobs {
  std::vector<LogprobEntry> entries;
  double residual_mass = 0.0;  // 1 - sum(exp(logprob)), in [0, 1]
};

inline constexpr double kDistributionSumTol = 1e-9;
inline constexpr double kTruncatedMassTol = 1e-6;

// Throw DomainError if the invariants above do not hold.
void validate_distribution(const TokenDistribution& d);
void validate_truncated(const TruncatedLogprobs& t);

// Numerically stable softmax (max subtraction). Throws DomainError on empty
// or non-finite input.
TokenDistribution softmax(std::span<const double> logits);

// -sum p ln p over a validated distribution.
double shannon_entropy(const TokenDistribution& d);

// Arithmetic mean; throws DomainError on an empty sequence (a zero-length
// segment has no defined entropy). Accumulates in extended precision so the
// mean of a constant sequence is exactly that constant.
double mean_entropy(std::span<const double> entropies);

// Entropy of the coarsened distribution {p_1..p_k, residual}. Equals the
// exact entropy when residual_mass == 0 and is a lower bound on the true
// entropy otherwise (splitting the residual into >= 2 outcomes only adds
// uncertainty). Callers flag the result as estimated when residual > 0.
double entropy_lower_bound_from_topk(const TruncatedLogprobs& t);

}  // namespace guard
