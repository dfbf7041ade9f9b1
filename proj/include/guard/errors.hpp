#pragma once

#include <stdexcept>
#include <string>

namespace guard {

// Contract violation on a value: invalid distribution, empty input, NaN, ...
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file. `line` is 1-based; 0 means "not line-addressable".
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
        line(line_no) {}
  int line = 0;
};

// Well-formed input whose contents violate an invariant (e.g. a distribution
// row that does not sum to 1).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Backend/network failure. Raised after the client has exhausted retries.
struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Token/text mismatch while mapping segments onto token spans.
struct AlignmentError : std::runtime_error {
  AlignmentError(const std::string& msg, size_t offset_in)
      : std::runtime_error(msg + " (first divergent offset " + std::to_string(offset_in) + ")"),
        offset(offset_in) {}
  size_t offset = 0;
};

}  // namespace guard
