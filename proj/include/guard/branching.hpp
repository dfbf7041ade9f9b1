#pragma once

/**
 * Branch-and-select intervention: on an entropy-drift trigger, generate
 * three short-horizon continuations from the identical prefix
 * (unperturbed / "Wait,"-steered / "Let me reconsider:"-steered), score
 * each by mean token entropy over its generated horizon, and keep the
 * minimum. Holds no state between triggers.
 */

#include <array>
#include <string>

#include "guard/backend.hpp"

namespace guard {

enum class BranchKind { Momentum = 0, Inhibitory = 1, Counterfactual = 2 };

const char* branch_kind_name(BranchKind kind);

// Steering text force-fed before each branch's generation. Momentum is
// always empty; the other two are configurable.
struct BranchTexts {
  std::string inhibitory = "Wait,";
  std::string counterfactual = "Let me reconsider:";

  const std::string& injected(BranchKind kind) const;
};

struct BranchCandidate {
  BranchKind kind = BranchKind::Momentum;
  std::string injected_text;
  SpanResult span;
  double score = 0.0;   // mean entropy over generated tokens; 0 when terminal
  bool terminal = false;  // immediate EOS: nothing generated, maximally certain
};

struct BranchOutcome {
  std::array<BranchCandidate, 3> candidates;  // fixed order: momentum, inhibitory, counterfactual
  int selected = 0;

  const BranchCandidate& chosen() const { return candidates[static_cast<size_t>(selected)]; }
};

// Mean per-token entropy of a span. An empty span (immediate EOS) scores 0
// by convention; callers flag it terminal.
double score_branch(const SpanResult& span);

// Generates the three branches concurrently from byte-identical prefixes.
// Any branch's transport failure propagates as TransportError after the
// remaining branches finish (the controller falls back to the original
// candidate).
std::array<BranchCandidate, 3> spawn_branches(Backend& backend, const Prefix& prefix, int horizon,
                                              const DecodePolicy& policy,
                                              const BranchTexts& texts);

// Argmin over scores; ties resolve in fixed order momentum > inhibitory >
// counterfactual (first minimum wins).
BranchOutcome select_branch(std::array<BranchCandidate, 3> candidates);

}  // namespace guard
