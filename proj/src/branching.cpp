#include "guard/branching.hpp"

#include <future>

#include "guard/errors.hpp"

namespace guard {

const char* branch_kind_name(BranchKind kind) {
  switch (kind) {
    case BranchKind::Momentum: return "momentum";
    case BranchKind::Inhibitory: return "inhibitory";
    case BranchKind::Counterfactual: return "counterfactual";
  }
  return "unknown";
}

const std::string& BranchTexts::injected(BranchKind kind) const {
  static const std::string empty;
  switch (kind) {
    case BranchKind::Momentum: return empty;
    case BranchKind::Inhibitory: return inhibitory;
    case BranchKind::Counterfactual: return counterfactual;
  }
  return empty;
}

double score_branch(const SpanResult& span) {
  if (span.entropies.empty()) return 0.0;
  return mean_entropy(span.entropies);
}

std::array<BranchCandidate, 3> spawn_branches(Backend& backend, const Prefix& prefix, int horizon,
                                              const DecodePolicy& policy,
                                              const BranchTexts& texts) {
  if (horizon < 1) throw DomainError("branch horizon must be >= 1");
  const std::array<BranchKind, 3> kinds = {BranchKind::Momentum, BranchKind::Inhibitory,
                                           BranchKind::Counterfactual};
  std::array<std::future<SpanResult>, 3> futures;
  for (size_t i = 0; i < kinds.size(); ++i) {
    const std::string& injected = texts.injected(kinds[i]);
    futures[i] = std::async(std::launch::async, [&backend, prefix, injected, horizon, policy] {
      return backend.generate_span(prefix, injected, horizon, policy);
    });
  }

  std::array<BranchCandidate, 3> out;
  std::exception_ptr failure;
  for (size_t i = 0; i < kinds.size(); ++i) {
    out[i].kind = kinds[i];
    out[i].injected_text = texts.injected(kinds[i]);
    try {
      out[i].span = futures[i].get();
      out[i].terminal = out[i].span.tokens.empty();
      out[i].score = score_branch(out[i].span);
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

BranchOutcome select_branch(std::array<BranchCandidate, 3> candidates) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (candidates[static_cast<size_t>(i)].score < candidates[static_cast<size_t>(best)].score)
      best = i;
  }
  return BranchOutcome{std::move(candidates), best};
}

}  // namespace guard
