#include "guard/controller.hpp"

#include <algorithm>
#include <cmath>

#include "guard/errors.hpp"

namespace guard {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::BranchTrigger: return "branch_trigger";
    case EventKind::BranchSelected: return "branch_selected";
    case EventKind::Termination: return "termination";
    case EventKind::Degraded: return "degraded";
  }
  return "unknown";
}

const char* run_mode_name(RunMode mode) {
  return mode == RunMode::Guard ? "guard" : "baseline";
}

const char* finish_reason_name(FinishReason reason) {
  switch (reason) {
    case FinishReason::Eos: return "eos";
    case FinishReason::BudgetExhausted: return "budget_exhausted";
    case FinishReason::Error: return "error";
  }
  return "unknown";
}

namespace {

struct LoopState {
  TrajectoryRecord rec;
  Prefix prefix;
  EntropyHistory hist;

  void emit(const std::string& text, double entropy) {
    rec.tokens.push_back(text);
    rec.entropies.push_back(entropy);
    hist.record(entropy);
    prefix.generated += text;
    rec.decoded_text += text;
    rec.budget.used_tokens += 1;
  }
};

TrajectoryRecord run_loop(const std::string& prompt, const GuardConfig& cfg, Backend& backend,
                          RunMode mode) {
  if (prompt.empty()) throw DomainError("prompt must be non-empty");
  if (cfg.b_max < 1) throw DomainError("b_max must be >= 1");

  LoopState st;
  st.rec.mode = mode;
  st.rec.seed = cfg.policy.seed;
  st.rec.prompt = prompt;
  st.rec.budget = BudgetState{0, cfg.b_max};
  st.prefix = Prefix{prompt, ""};

  const DriftConfig drift_cfg{cfg.quantile_q, cfg.warmup_min_tokens};
  const bool guard_on = mode == RunMode::Guard;
  const bool termination_on = guard_on && cfg.enable_termination && !cfg.hesitation.tokens.empty();
  const bool branching_on = guard_on && cfg.enable_branching;

  for (;;) {
    if (st.rec.budget.used_tokens >= st.rec.budget.max_tokens) {
      st.rec.finished_reason = FinishReason::BudgetExhausted;
      break;
    }

    GenerationStep step;
    try {
      step = backend.step(st.prefix, cfg.policy);
    } catch (const TransportError& e) {
      st.rec.finished_reason = FinishReason::Error;
      st.rec.error_detail = e.what();
      break;
    }
    st.rec.entropy_estimated = st.rec.entropy_estimated || step.entropy_estimated;
    const double rho = capacity_ratio(st.rec.budget);

    // Late-stage control: substitute the termination marker for hesitation
    // tokens once rho <= rho_min, then keep decoding the answer region.
    if (termination_on && !step.is_eos) {
      const bool late = is_late_stage(rho, cfg.rho_min);
      const std::string substituted =
          terminal_substitute(step.token.text, late, cfg.hesitation, cfg.termination_marker);
      if (substituted != step.token.text) {
        InterventionEvent ev;
        ev.kind = EventKind::Termination;
        ev.position = static_cast<int64_t>(st.rec.tokens.size());
        ev.original_token = step.token.text;
        ev.substituted = substituted;
        st.rec.events.push_back(std::move(ev));
        st.emit(substituted, step.entropy_nats);
        st.rec.total_generated_tokens += 1;
        continue;
      }
    }

    if (step.is_eos) {
      st.rec.finished_reason = FinishReason::Eos;
      break;
    }

    // Drift detection at reasoning-step boundaries; branching is implicitly
    // disabled in the late stage via the rho > rho_min gate.
    if (branching_on &&
        drift_indicator(st.hist, step.entropy_nats, cfg.delimiters.matches(st.prefix.text()), rho,
                        drift_cfg, cfg.rho_min)) {
      InterventionEvent trig;
      trig.kind = EventKind::BranchTrigger;
      trig.position = static_cast<int64_t>(st.rec.tokens.size());
      trig.trigger_entropy = step.entropy_nats;
      trig.threshold = quantile(st.hist.values(), cfg.quantile_q);
      st.rec.events.push_back(std::move(trig));

      const int64_t remaining = st.rec.budget.max_tokens - st.rec.budget.used_tokens;
      const int horizon = static_cast<int>(std::min<int64_t>(cfg.horizon, remaining));

      bool intervened = false;
      bool stop = false;
      try {
        BranchOutcome outcome =
            select_branch(spawn_branches(backend, st.prefix, horizon, cfg.policy,
                                         cfg.branch_texts));
        const BranchCandidate& sel = outcome.chosen();

        InterventionEvent ev;
        ev.kind = EventKind::BranchSelected;
        ev.position = static_cast<int64_t>(st.rec.tokens.size());
        ev.selected_kind = sel.kind;
        int64_t all_span_tokens = 0;
        for (int k = 0; k < 3; ++k) {
          ev.scores[k] = outcome.candidates[static_cast<size_t>(k)].score;
          all_span_tokens +=
              static_cast<int64_t>(outcome.candidates[static_cast<size_t>(k)].span.tokens.size());
        }
        ev.injected_text = sel.injected_text;
        ev.span_tokens = static_cast<int64_t>(sel.span.tokens.size());
        ev.discarded_tokens = all_span_tokens - ev.span_tokens;
        ev.terminal_branch = sel.terminal;
        st.rec.events.push_back(std::move(ev));

        st.rec.total_generated_tokens += all_span_tokens;
        st.rec.entropy_estimated = st.rec.entropy_estimated || sel.span.entropy_estimated;

        // The pre-branch candidate is discarded; generation resumes from
        // the selected continuation. A terminal branch emitted nothing:
        // the trajectory just ends, steering text included in the event
        // payload only.
        if (sel.terminal) {
          st.rec.finished_reason = FinishReason::Eos;
          stop = true;
        } else {
          st.prefix.generated += sel.injected_text;
          st.rec.decoded_text += sel.injected_text;
          for (size_t k = 0; k < sel.span.tokens.size(); ++k)
            st.emit(sel.span.tokens[k].text, sel.span.entropies[k]);
          if (sel.span.stopped_early) {
            st.rec.finished_reason = FinishReason::Eos;
            stop = true;
          }
        }
        intervened = true;
      } catch (const TransportError& e) {
        InterventionEvent ev;
        ev.kind = EventKind::Degraded;
        ev.position = static_cast<int64_t>(st.rec.tokens.size());
        ev.detail = e.what();
        st.rec.events.push_back(std::move(ev));
      }
      if (stop) break;
      if (intervened) continue;
      // Branch generation failed: fall through and emit the original
      // candidate (momentum by default).
    }

    st.emit(step.token.text, step.entropy_nats);
    st.rec.total_generated_tokens += 1;
  }
  return st.rec;
}

int argmin_with_tiebreak(const double scores[3]) {
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (scores[k] < scores[best]) best = k;
  }
  return best;
}

}  // namespace

TrajectoryRecord run_guard(const std::string& prompt, const GuardConfig& cfg, Backend& backend) {
  return run_loop(prompt, cfg, backend, RunMode::Guard);
}

TrajectoryRecord run_baseline(const std::string& prompt, const GuardConfig& cfg,
                              Backend& backend) {
  return run_loop(prompt, cfg, backend, RunMode::Baseline);
}

bool replay_check(const TrajectoryRecord& rec, const GuardConfig& cfg, std::string* diagnostic) {
  auto fail = [&](const std::string& msg) {
    if (diagnostic) *diagnostic = msg;
    return false;
  };

  if (rec.tokens.size() != rec.entropies.size())
    return fail("tokens and entropies have different lengths");
  for (size_t e = 1; e < rec.events.size(); ++e) {
    if (rec.events[e].position < rec.events[e - 1].position)
      return fail("events are not position-ordered");
  }

  const DriftConfig drift_cfg{cfg.quantile_q, cfg.warmup_min_tokens};
  const bool guard_on = rec.mode == RunMode::Guard;
  const bool termination_on = guard_on && cfg.enable_termination && !cfg.hesitation.tokens.empty();
  const bool branching_on = guard_on && cfg.enable_branching;
  if (!guard_on && !rec.events.empty()) return fail("baseline record carries events");

  BudgetState budget{0, rec.budget.max_tokens};
  EntropyHistory hist;
  std::string context = rec.prompt;  // prompt + generated text so far
  size_t pos = 0;                    // offset into rec.decoded_text
  size_t i = 0;                      // token index
  size_t ei = 0;                     // event index
  int64_t expected_generated = 0;
  bool skip_drift_check = false;  // set after a Degraded event at this slot

  auto consume_text = [&](const std::string& text, const char* what) -> bool {
    if (pos + text.size() > rec.decoded_text.size() ||
        rec.decoded_text.compare(pos, text.size(), text) != 0)
      return false;
    (void)what;
    pos += text.size();
    context += text;
    return true;
  };
  auto consume_token = [&](size_t idx) -> const char* {
    const double h = rec.entropies[idx];
    if (!std::isfinite(h) || h < 0.0) return "entropy out of range";
    if (!consume_text(rec.tokens[idx], "token")) return "token text diverges from decoded_text";
    hist.record(h);
    budget.used_tokens += 1;
    return nullptr;
  };

  while (i < rec.tokens.size() || ei < rec.events.size()) {
    if (budget.used_tokens >= budget.max_tokens)
      return fail("tokens recorded beyond the budget");
    const double rho = capacity_ratio(budget);
    const bool late = is_late_stage(rho, cfg.rho_min);

    const InterventionEvent* ev = ei < rec.events.size() ? &rec.events[ei] : nullptr;
    if (ev && ev->position == static_cast<int64_t>(i) && !skip_drift_check) {
      const std::string at = " at position " + std::to_string(i);
      switch (ev->kind) {
        case EventKind::Termination: {
          if (!termination_on) return fail("termination event with termination disabled" + at);
          if (!late) return fail("termination event outside the late stage" + at);
          if (!cfg.hesitation.contains(ev->original_token))
            return fail("termination original token not in the hesitation set" + at);
          if (ev->substituted != cfg.termination_marker)
            return fail("substituted text is not the configured marker" + at);
          if (i >= rec.tokens.size() || rec.tokens[i] != cfg.termination_marker)
            return fail("marker token missing" + at);
          if (const char* err = consume_token(i)) return fail(std::string(err) + at);
          ++i;
          ++ei;
          expected_generated += 1;
          break;
        }
        case EventKind::BranchTrigger: {
          if (!branching_on) return fail("branch trigger with branching disabled" + at);
          const bool boundary = cfg.delimiters.matches(context);
          if (!drift_indicator(hist, ev->trigger_entropy, boundary, rho, drift_cfg, cfg.rho_min))
            return fail("logged trigger is not implied by the drift predicate" + at);
          if (ev->threshold != quantile(hist.values(), cfg.quantile_q))
            return fail("trigger threshold does not match the history quantile" + at);
          ++ei;
          if (ei >= rec.events.size() ||
              rec.events[ei].position != static_cast<int64_t>(i) ||
              (rec.events[ei].kind != EventKind::BranchSelected &&
               rec.events[ei].kind != EventKind::Degraded))
            return fail("trigger without a selection or degraded event" + at);
          if (rec.events[ei].kind == EventKind::Degraded) {
            ++ei;
            skip_drift_check = true;  // the candidate was emitted normally
            break;
          }
          const InterventionEvent& sel = rec.events[ei];
          if (argmin_with_tiebreak(sel.scores) != static_cast<int>(sel.selected_kind))
            return fail("selected branch is not the argmin under the declared tie-break" + at);
          expected_generated += sel.span_tokens + sel.discarded_tokens;
          if (sel.terminal_branch) {
            // Terminal selections end the trajectory without emitting; the
            // steering text lives only in the event payload.
            if (sel.span_tokens != 0) return fail("terminal branch with span tokens" + at);
            if (i != rec.tokens.size())
              return fail("tokens recorded after a terminal branch selection" + at);
            if (rec.finished_reason != FinishReason::Eos)
              return fail("terminal branch without an EOS finish" + at);
          } else {
            if (!consume_text(sel.injected_text, "injected"))
              return fail("injected steering text missing from decoded_text" + at);
            if (sel.span_tokens < 1) return fail("non-terminal selection with empty span" + at);
            for (int64_t k = 0; k < sel.span_tokens; ++k) {
              if (i >= rec.tokens.size()) return fail("selected span extends past tokens" + at);
              if (const char* err = consume_token(i)) return fail(std::string(err) + at);
              ++i;
            }
          }
          ++ei;
          break;
        }
        case EventKind::BranchSelected:
          return fail("selection event without a preceding trigger" + at);
        case EventKind::Degraded:
          return fail("degraded event without a preceding trigger" + at);
      }
      continue;
    }

    if (i >= rec.tokens.size())
      return fail("event position " + std::to_string(ev ? ev->position : -1) +
                  " lies beyond the token list");

    const std::string at = " at position " + std::to_string(i);
    const double h = rec.entropies[i];
    if (termination_on && late && cfg.hesitation.contains(rec.tokens[i]))
      return fail("hesitation token emitted in the late stage without substitution" + at);
    // The late-stage marker is the controller's signature: it only appears
    // there through substitution, which always logs an event.
    if (termination_on && late && rec.tokens[i] == cfg.termination_marker)
      return fail("termination marker at a late position without a termination event" + at);
    if (branching_on && !skip_drift_check &&
        drift_indicator(hist, h, cfg.delimiters.matches(context), rho, drift_cfg, cfg.rho_min))
      return fail("drift predicate fires but no trigger was logged" + at);
    skip_drift_check = false;
    if (const char* err = consume_token(i)) return fail(std::string(err) + at);
    ++i;
    expected_generated += 1;
  }

  if (pos != rec.decoded_text.size())
    return fail("decoded_text has " + std::to_string(rec.decoded_text.size() - pos) +
                " unaccounted trailing bytes");
  if (budget.used_tokens != rec.budget.used_tokens)
    return fail("final used_tokens does not match the token count");
  if (rec.total_generated_tokens != expected_generated)
    return fail("total_generated_tokens does not match event accounting");
  if (rec.finished_reason == FinishReason::BudgetExhausted &&
      budget.used_tokens != budget.max_tokens)
    return fail("budget_exhausted finish with unused budget");
  return true;
}

}  // namespace guard
