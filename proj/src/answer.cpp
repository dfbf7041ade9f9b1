#include "guard/answer.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace guard {

namespace {

std::string normalize_whitespace(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<double> parse_plain_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

// "\frac{a}{b}" or "\dfrac{a}{b}" -> a/b.
std::optional<double> parse_latex_frac(const std::string& s) {
  size_t i = 0;
  if (s.rfind("\\frac", 0) == 0) i = 5;
  else if (s.rfind("\\dfrac", 0) == 0) i = 6;
  else return std::nullopt;
  if (i >= s.size() || s[i] != '{') return std::nullopt;
  size_t close1 = s.find('}', i + 1);
  if (close1 == std::string::npos) return std::nullopt;
  if (close1 + 1 >= s.size() || s[close1 + 1] != '{' || s.back() != '}') return std::nullopt;
  auto num = parse_plain_number(s.substr(i + 1, close1 - i - 1));
  auto den = parse_plain_number(s.substr(close1 + 2, s.size() - close1 - 3));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

}  // namespace

std::optional<std::string> extract_boxed_answer(const std::string& text) {
  static const std::string kBoxed = "\\boxed{";
  const size_t pos = text.rfind(kBoxed);
  if (pos == std::string::npos) return std::nullopt;
  int depth = 1;
  for (size_t i = pos + kBoxed.size(); i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    else if (text[i] == '}') {
      --depth;
      if (depth == 0) return text.substr(pos + kBoxed.size(), i - pos - kBoxed.size());
    }
  }
  return std::nullopt;  // unbalanced
}

std::optional<double> parse_numeric_answer(const std::string& s) {
  std::string t = normalize_whitespace(s);
  // Strip surrounding $...$ and internal spaces; numbers never contain them.
  std::string clean;
  for (char c : t) {
    if (c == '$' || c == ' ') continue;
    clean.push_back(c);
  }
  if (clean.empty()) return std::nullopt;
  if (auto v = parse_plain_number(clean)) return v;
  if (auto v = parse_latex_frac(clean)) return v;
  const size_t slash = clean.find('/');
  if (slash != std::string::npos && slash > 0 && slash + 1 < clean.size()) {
    auto num = parse_plain_number(clean.substr(0, slash));
    auto den = parse_plain_number(clean.substr(slash + 1));
    if (num && den && *den != 0.0) return *num / *den;
  }
  return std::nullopt;
}

bool check_answer(const std::string& extracted, const std::string& gold) {
  const std::string a = normalize_whitespace(extracted);
  const std::string b = normalize_whitespace(gold);
  if (a == b) return true;

  const auto na = parse_numeric_answer(extracted);
  const auto nb = parse_numeric_answer(gold);
  if (na && nb) {
    const double scale = std::max({1.0, std::abs(*na), std::abs(*nb)});
    return std::abs(*na - *nb) <= 1e-9 * scale;
  }

  // Multiple-choice option keys compare case-insensitively.
  if (a.size() == 1 && b.size() == 1 && std::isalpha(static_cast<unsigned char>(a[0])) &&
      std::isalpha(static_cast<unsigned char>(b[0]))) {
    return std::tolower(static_cast<unsigned char>(a[0])) ==
           std::tolower(static_cast<unsigned char>(b[0]));
  }
  return false;
}

}  // namespace guard
