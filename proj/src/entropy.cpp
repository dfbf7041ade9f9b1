#include "guard/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "guard/errors.hpp"

namespace guard {

void validate_distribution(const TokenDistribution& d) {
  if (d.probs.empty()) throw DomainError("distribution is empty");
  double sum = 0.0;
  for (double p : d.probs) {
    if (!std::isfinite(p)) throw DomainError("distribution has a non-finite entry");
    if (p < 0.0) throw DomainError("distribution has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionSumTol)
    throw DomainError("distribution sums to " + std::to_string(sum) + ", expected 1");
}

void validate_truncated(const TruncatedLogprobs& t) {
  if (t.entries.empty()) throw DomainError("truncated logprobs are empty");
  if (!std::isfinite(t.residual_mass) || t.residual_mass < 0.0)
    throw DomainError("residual mass must be a non-negative real");
  double mass = t.residual_mass;
  for (const auto& e : t.entries) {
    if (!std::isfinite(e.logprob) || e.logprob > 0.0)
      throw DomainError("logprob out of range for token '" + e.token + "'");
    mass += std::exp(e.logprob);
  }
  if (std::abs(mass - 1.0) > kTruncatedMassTol)
    throw DomainError("top-k mass plus residual is " + std::to_string(mass) + ", expected 1");
}

TokenDistribution softmax(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("softmax over empty logits");
  double max_logit = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("softmax input has a non-finite entry");
    max_logit = std::max(max_logit, z);
  }
  TokenDistribution out;
  out.probs.resize(logits.size());
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - max_logit);
    denom += out.probs[i];
  }
  for (double& p : out.probs) p /= denom;
  return out;
}

double shannon_entropy(const TokenDistribution& d) {
  validate_distribution(d);
  double h = 0.0;
  for (double p : d.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  // Guard against -0.0 for one-hot inputs.
  return h <= 0.0 ? 0.0 : h;
}

double mean_entropy(std::span<const double> entropies) {
  if (entropies.empty()) throw DomainError("mean entropy of an empty sequence");
  long double sum = 0.0L;
  for (double h : entropies) sum += h;
  return static_cast<double>(sum / static_cast<long double>(entropies.size()));
}

double entropy_lower_bound_from_topk(const TruncatedLogprobs& t) {
  validate_truncated(t);
  double h = 0.0;
  for (const auto& e : t.entries) {
    double p = std::exp(e.logprob);
    if (p > 0.0) h -= p * e.logprob;
  }
  if (t.residual_mass > 0.0) h -= t.residual_mass * std::log(t.residual_mass);
  return h <= 0.0 ? 0.0 : h;
}

}  // namespace guard
