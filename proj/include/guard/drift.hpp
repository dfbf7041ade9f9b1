#pragma once

/**
 * Entropy-drift detection: streaming entropy history, adaptive
 * nearest-rank quantile thresholding, and decoded-text boundary matching.
 *
 * The indicator fires only at a reasoning-step boundary, after the history
 * has warmed up, when the candidate's entropy strictly exceeds the q-quantile
 * of the history so far (the candidate itself excluded), and while the
 * remaining budget ratio is still above rho_min. Ties never fire.
 */

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace guard {

// Append-only per-token entropy log for one trajectory. Confined to a single
// control loop; snapshot values() for analysis.
class EntropyHistory {
 public:
  // Throws DomainError on negative or non-finite values.
  void record(double entropy_nats);

  const std::vector<double>& values() const { return values_; }
  size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// Nearest-rank quantile: ascending order statistic at rank ceil(q*n).
// Always returns an observed value. Throws DomainError on an empty history
// or q outside (0,1).
double quantile(std::span<const double> values, double q);

// Structural boundary patterns checked against the decoded text (tokenizers
// split "\n\n" inconsistently, so raw token identity is not used).
struct DelimiterMatcher {
  std::vector<std::string> patterns;

  // True iff the decoded text so far ends with any pattern.
  bool matches(std::string_view decoded) const;
};

// The nine default structural delimiters ("\n\n" and its punctuation
// combinations).
DelimiterMatcher default_delimiters();

struct DriftConfig {
  double quantile_q = 0.9;
  int warmup_min_tokens = 32;  // quantiles over near-empty histories are noise
};

// True iff boundary AND history warmed up AND h_t > Quantile_q(history)
// AND rho > rho_min. The history must not yet contain h_t; callers record
// it after the check.
bool drift_indicator(const EntropyHistory& hist, double h_t, bool boundary, double rho,
                     const DriftConfig& cfg, double rho_min);

}  // namespace guard
