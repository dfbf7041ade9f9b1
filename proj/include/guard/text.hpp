#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guard {

// 64-bit FNV-1a. Used for deterministic per-step RNG streams and manifest
// hashes; deliberately not std::hash so results are stable across builds.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t mix64(uint64_t a, uint64_t b);

// Decimal string with 9 significant digits. Round-trips through double:
// parse(format_sig9(x)) re-serializes to the same string.
std::string format_sig9(double value);

std::string trim(std::string_view s);
bool ends_with_any(std::string_view text, const std::vector<std::string>& suffixes);

// Unescapes \n \t \r \\ \" inside a quoted literal (quotes already removed).
std::string unescape(std::string_view s, int line_no = 0);
std::string escape(std::string_view s);

// Splits a line into whitespace-separated fields where a field may be a
// quoted string with escapes: `a "b c" d` -> {a, "b c", d}. Used by the
// scripted-model format and by list-valued config entries.
std::vector<std::string> split_quoted(std::string_view line, int line_no = 0);
std::string join_quoted(const std::vector<std::string>& items);

}  // namespace guard
