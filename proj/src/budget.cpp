#include "guard/budget.hpp"

#include <cctype>

#include "guard/errors.hpp"

namespace guard {

double capacity_ratio(const BudgetState& b) {
  if (b.max_tokens < 1) throw DomainError("budget max_tokens must be >= 1");
  if (b.used_tokens < 0 || b.used_tokens > b.max_tokens)
    throw DomainError("budget used_tokens out of [0, max_tokens]");
  return 1.0 - static_cast<double>(b.used_tokens) / static_cast<double>(b.max_tokens);
}

bool is_late_stage(double rho, double rho_min) { return rho <= rho_min; }

bool HesitationSet::contains(std::string_view token_text) const {
  size_t b = 0;
  while (b < token_text.size() && std::isspace(static_cast<unsigned char>(token_text[b]))) ++b;
  const std::string_view stripped = token_text.substr(b);
  for (const auto& t : tokens) {
    if (stripped == t) return true;
  }
  return false;
}

std::string terminal_substitute(const std::string& candidate_text, bool late,
                                const HesitationSet& hes, const std::string& marker) {
  if (late && hes.contains(candidate_text)) return marker;
  return candidate_text;
}

}  // namespace guard
