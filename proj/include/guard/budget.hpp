#pragma once

/**
 * Token-budget tracking and late-stage hesitation-to-termination
 * substitution: once the remaining capacity ratio rho = 1 - used/max drops
 * to rho_min or below, a predicted hesitation token ("Wait") is replaced by
 * the termination marker so the trajectory converges instead of re-opening
 * deliberation.
 */

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guard {

struct BudgetState {
  int64_t used_tokens = 0;
  int64_t max_tokens = 10000;
};

// rho = 1 - used/max, in [0,1]. Throws DomainError when max_tokens < 1 or
// used_tokens is out of range.
double capacity_ratio(const BudgetState& b);

// Inclusive comparison: rho == rho_min already counts as late.
bool is_late_stage(double rho, double rho_min);

// Decoded token texts that signal renewed deliberation. Matching strips
// leading whitespace because tokenizers commonly fuse a leading space onto
// the word. May be empty, which disables termination control.
struct HesitationSet {
  std::vector<std::string> tokens{"Wait"};

  bool contains(std::string_view token_text) const;
};

// Returns `marker` iff late and the candidate is a hesitation token;
// otherwise returns the candidate unchanged.
std::string terminal_substitute(const std::string& candidate_text, bool late,
                                const HesitationSet& hes, const std::string& marker);

}  // namespace guard
