#pragma once

/**
 * The inference controller: a single-trajectory generation loop with
 * late-stage termination control, entropy-drift detection, and
 * branch-and-select intervention, plus full event logging.
 *
 * Loop semantics per step:
 *   1. obtain candidate token + entropy from the backend;
 *   2. late stage (rho <= rho_min) and candidate is a hesitation token:
 *      substitute the termination marker and continue;
 *   3. drift indicator fires (boundary, warmed-up history, entropy above
 *      the adaptive quantile, rho > rho_min): spawn three branches, keep
 *      the minimum-mean-entropy continuation, discard the pre-branch
 *      candidate, resume after the selected span;
 *   4. otherwise emit the candidate.
 * Stops on EOS or budget exhaustion. The baseline runs the same loop with
 * branching and termination control disabled; entropies are still logged.
 *
 * One controller instance per trajectory; a runner may execute many
 * trajectories concurrently as long as the shared backend tolerates
 * concurrent requests.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "guard/backend.hpp"
#include "guard/branching.hpp"
#include "guard/budget.hpp"
#include "guard/drift.hpp"

namespace guard {

struct GuardConfig {
  double quantile_q = 0.9;
  double rho_min = 0.2;
  int horizon = 200;  // L, branch horizon in tokens
  int64_t b_max = 10000;
  int warmup_min_tokens = 32;
  bool enable_branching = true;
  bool enable_termination = true;
  DecodePolicy policy;  // temperature 0.0, top_p 0.95
  DelimiterMatcher delimiters = default_delimiters();
  HesitationSet hesitation;
  BranchTexts branch_texts;
  std::string termination_marker = "</think>";
};

enum class EventKind { BranchTrigger, BranchSelected, Termination, Degraded };
const char* event_kind_name(EventKind kind);

// One observable decision of the control loop. `position` is the 0-based
// index of the token slot the event applies to (== tokens emitted so far at
// the time of the event). Fields beyond `kind`/`position` are populated per
// kind; unused ones stay defaulted.
struct InterventionEvent {
  EventKind kind = EventKind::BranchTrigger;
  int64_t position = 0;

  // BranchTrigger
  double trigger_entropy = 0.0;
  double threshold = 0.0;

  // BranchSelected
  BranchKind selected_kind = BranchKind::Momentum;
  double scores[3] = {0.0, 0.0, 0.0};
  std::string injected_text;
  int64_t span_tokens = 0;
  int64_t discarded_tokens = 0;
  bool terminal_branch = false;

  // Termination
  std::string original_token;
  std::string substituted;

  // Degraded (branch generation failed; fell back to the candidate)
  std::string detail;
};

enum class RunMode { Guard, Baseline };
enum class FinishReason { Eos, BudgetExhausted, Error };
const char* run_mode_name(RunMode mode);
const char* finish_reason_name(FinishReason reason);

struct TrajectoryRecord {
  int64_t prompt_index = 0;
  RunMode mode = RunMode::Guard;
  uint64_t seed = 0;
  std::string prompt;
  std::string gold;  // ground-truth answer when known, else empty

  // Generated tokens only. Injected steering text is part of decoded_text
  // but has no token/entropy entries; branch-selected events carry it.
  std::vector<std::string> tokens;
  std::vector<double> entropies;  // one per token, nats
  std::string decoded_text;       // generated text (prompt excluded)
  bool entropy_estimated = false;

  std::vector<InterventionEvent> events;  // position-ordered
  BudgetState budget;                     // final state; used counts emitted tokens
  int64_t total_generated_tokens = 0;     // includes discarded branch tokens
  FinishReason finished_reason = FinishReason::Eos;
  std::string error_detail;
  std::string manifest_hash;
};

TrajectoryRecord run_guard(const std::string& prompt, const GuardConfig& cfg, Backend& backend);
TrajectoryRecord run_baseline(const std::string& prompt, const GuardConfig& cfg, Backend& backend);

// Recomputes every drift/termination decision from the logged entropies and
// verifies the event log is exactly the implied one: no missing events, no
// events the conditions do not imply, payloads consistent, text/token/budget
// accounting intact. Returns false and fills `diagnostic` on the first
// inconsistency.
bool replay_check(const TrajectoryRecord& rec, const GuardConfig& cfg,
                  std::string* diagnostic = nullptr);

}  // namespace guard
