#include "guard/text.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "guard/errors.hpp"

namespace guard {

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t mix64(uint64_t a, uint64_t b) {
  // splitmix64 finalizer over the xor; good enough to decorrelate seeds.
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string format_sig9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool ends_with_any(std::string_view text, const std::vector<std::string>& suffixes) {
  for (const auto& suf : suffixes) {
    if (!suf.empty() && text.ends_with(suf)) return true;
  }
  return false;
}

std::string unescape(std::string_view s, int line_no) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 1 >= s.size()) throw ParseError("dangling escape", line_no);
    char c = s[++i];
    switch (c) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case '\\': out.push_back('\\'); break;
      case '"': out.push_back('"'); break;
      default: throw ParseError(std::string("unknown escape \\") + c, line_no);
    }
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> split_quoted(std::string_view line, int line_no) {
  std::vector<std::string> fields;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '"') {
      size_t j = i + 1;
      std::string raw;
      bool closed = false;
      while (j < line.size()) {
        if (line[j] == '\\' && j + 1 < line.size()) {
          raw.push_back(line[j]);
          raw.push_back(line[j + 1]);
          j += 2;
          continue;
        }
        if (line[j] == '"') {
          closed = true;
          break;
        }
        raw.push_back(line[j]);
        ++j;
      }
      if (!closed) throw ParseError("unterminated quoted string", line_no);
      fields.push_back(unescape(raw, line_no));
      i = j + 1;
    } else {
      size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      fields.emplace_back(line.substr(i, j - i));
      i = j;
    }
  }
  return fields;
}

std::string join_quoted(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(' ');
    out.push_back('"');
    out += escape(items[i]);
    out.push_back('"');
  }
  return out;
}

}  // namespace guard
