#include "guard/drift.hpp"

#include <algorithm>
#include <cmath>

#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

void EntropyHistory::record(double entropy_nats) {
  if (!std::isfinite(entropy_nats) || entropy_nats < 0.0)
    throw DomainError("entropy must be a finite non-negative value");
  values_.push_back(entropy_nats);
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty history");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile q must lie in (0,1)");
  const size_t n = values.size();
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<size_t>(rank, 1, n);
  std::vector<double> work(values.begin(), values.end());
  std::nth_element(work.begin(), work.begin() + (rank - 1), work.end());
  return work[rank - 1];
}

bool DelimiterMatcher::matches(std::string_view decoded) const {
  return ends_with_any(decoded, patterns);
}

DelimiterMatcher default_delimiters() {
  return DelimiterMatcher{{"\n\n", ",\n\n", ".\n\n", "]\n\n", ")\n\n", "]),\n\n", "].\n\n",
                           ").\n\n", ".)\n\n"}};
}

bool drift_indicator(const EntropyHistory& hist, double h_t, bool boundary, double rho,
                     const DriftConfig& cfg, double rho_min) {
  if (!boundary) return false;
  if (!(rho > rho_min)) return false;
  if (hist.size() < static_cast<size_t>(std::max(1, cfg.warmup_min_tokens))) return false;
  return h_t > quantile(hist.values(), cfg.quantile_q);
}

}  // namespace guard
