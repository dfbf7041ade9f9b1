#pragma once

#include <optional>
#include <string>

namespace guard {

// Content of the last \boxed{...} in `text`, with balanced-brace matching
// (so \boxed{\frac{100}{13}} yields "\frac{100}{13}"). std::nullopt when
// absent or unbalanced.
std::optional<std::string> extract_boxed_answer(const std::string& text);

// Answer equivalence: exact match after whitespace normalization, numeric
// equality within 1e-9 relative tolerance when both sides parse as
// rationals/decimals (plain, a/b, or \frac{a}{b} forms), or case-insensitive
// match when both are single-letter option keys.
bool check_answer(const std::string& extracted, const std::string& gold);

// Parses the numeric forms accepted by check_answer.
std::optional<double> parse_numeric_answer(const std::string& s);

}  // namespace guard
