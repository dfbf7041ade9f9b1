#pragma once

// Scripted-model builders shared by the controller tests and the acceptance
// suite: the adversarial branch-recovery tasks, flat-entropy tasks,
// randomized termination fixtures, and random models for the degeneracy
// property.

#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "guard/controller.hpp"
#include "guard/text.hpp"
#include "guard/trajectory_io.hpp"

namespace fixtures {

// Sparse-row script assembly: rows are given as (token text, probability)
// pairs and rendered as dense vocab-wide lines.
class ScriptBuilder {
 public:
  void token(const std::string& text) {
    if (!ids_.count(text)) {
      ids_[text] = static_cast<int>(vocab_.size());
      vocab_.push_back(text);
    }
  }

  void rule(const std::string& suffix, std::vector<std::pair<std::string, double>> probs) {
    for (const auto& [tok, p] : probs) token(tok);
    rows_.push_back(Row{suffix, std::move(probs), false});
  }

  void fallback(std::vector<std::pair<std::string, double>> probs) {
    for (const auto& [tok, p] : probs) token(tok);
    rows_.push_back(Row{"", std::move(probs), true});
  }

  void onehot(const std::string& suffix, const std::string& tok) { rule(suffix, {{tok, 1.0}}); }

  std::string text() const {
    std::ostringstream out;
    out << "vocab:";
    for (const auto& t : vocab_) out << " \"" << guard::escape(t) << "\"";
    out << "\n";
    for (const auto& row : rows_) {
      if (row.is_default) out << "default ->";
      else out << "match \"" << guard::escape(row.suffix) << "\" ->";
      std::map<std::string, double> dense;
      for (const auto& [tok, p] : row.probs) dense[tok] += p;
      for (const auto& t : vocab_) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", dense.count(t) ? dense[t] : 0.0);
        out << ' ' << buf;
      }
      out << "\n";
    }
    return out.str();
  }

 private:
  struct Row {
    std::string suffix;
    std::vector<std::pair<std::string, double>> probs;
    bool is_default;
  };
  std::vector<std::string> vocab_;
  std::map<std::string, int> ids_;
  std::vector<Row> rows_;
};

enum class TaskFlavor { CounterfactualWins, InhibitoryWins, MomentumWins, Flat };

struct AdversarialTask {
  std::string name;
  std::string script;
  std::string prompt;
  std::string gold = "42";
  bool guard_should_pass = false;
  bool baseline_should_pass = false;
  bool expect_trigger = false;
};

// One-hot preamble chain long enough to warm up the drift history, ending
// in a structural boundary token. Returns the boundary suffix.
inline std::string add_preamble(ScriptBuilder& b, const std::string& prompt, int length) {
  std::string prev;
  for (int i = 0; i < length - 1; ++i) {
    const std::string tok = "s" + std::to_string(i) + " ";
    if (i == 0) b.onehot(prompt, tok);
    else b.onehot(prev, tok);
    prev = tok;
  }
  b.onehot(prev, "lead.\n\n");
  return "lead.\n\n";
}

// Chain of `steps` tokens named <stem>0.. ending in \boxed{answer} then EOS.
// mix > 0 puts (1-mix) mass on the chain token and mix on a dead-end pad,
// giving every chain row the same nonzero entropy.
inline void add_answer_chain(ScriptBuilder& b, const std::string& from,
                             const std::string& stem, int steps, const std::string& answer,
                             double mix) {
  std::string prev = from;
  for (int i = 0; i < steps; ++i) {
    const std::string tok = stem + std::to_string(i) + " ";
    if (mix > 0.0) b.rule(prev, {{tok, 1.0 - mix}, {"pad ", mix}});
    else b.onehot(prev, tok);
    prev = tok;
  }
  const std::string boxed = "\\boxed{" + answer + "}";
  b.onehot(prev, boxed);
  b.onehot(boxed, "EOS");
}

// Branch-recovery task: a low-entropy preamble, an entropy spike at the
// "\n\n" boundary whose greedy continuation is wrong, a stochastic
// alternative that is right (so the outcome tree provably contains the
// correct answer), and steering-text rules that make one branch the argmin.
inline AdversarialTask make_task(int id, TaskFlavor flavor) {
  AdversarialTask task;
  task.prompt = "Solve T" + std::to_string(id) + ":\n";
  ScriptBuilder b;
  b.token("EOS");
  b.token("pad ");
  b.onehot("pad ", "EOS");

  switch (flavor) {
    case TaskFlavor::Flat: {
      // Entirely one-hot: constant zero entropy, no trigger can fire, and
      // the single trajectory is enumerable and correct.
      task.name = "flat" + std::to_string(id);
      const std::string boundary = add_preamble(b, task.prompt, 36);
      add_answer_chain(b, boundary, "f", 3, task.gold, 0.0);
      task.guard_should_pass = true;
      task.baseline_should_pass = true;
      task.expect_trigger = false;
      break;
    }
    case TaskFlavor::CounterfactualWins:
    case TaskFlavor::InhibitoryWins:
    case TaskFlavor::MomentumWins: {
      task.name = flavor == TaskFlavor::CounterfactualWins ? "cf"
                  : flavor == TaskFlavor::InhibitoryWins   ? "ih"
                                                           : "mw";
      task.name += std::to_string(id);
      const std::string boundary = add_preamble(b, task.prompt, 36);
      // Spike over {wrong start, stochastic right start, side path}.
      b.rule(boundary, {{"wrong0 ", 0.5}, {"alt0 ", 0.3}, {"side0 ", 0.2}});
      // Greedy continuation is wrong. Momentum-wins tasks keep it one-hot
      // so the momentum branch is the entropy argmin.
      const double wrong_mix = flavor == TaskFlavor::MomentumWins ? 0.0 : 0.38;
      add_answer_chain(b, "wrong0 ", "w", 2, "13", wrong_mix);
      add_answer_chain(b, "alt0 ", "a", 2, task.gold, 0.0);
      add_answer_chain(b, "side0 ", "x", 2, "13", 0.0);
      // Steering-text continuations.
      const double steer_mix = 0.3;  // H(.7/.3) ~= 0.611
      if (flavor == TaskFlavor::CounterfactualWins) {
        add_answer_chain(b, "Let me reconsider:", "c", 3, task.gold, 0.0);
        add_answer_chain(b, "Wait,", "m", 3, "13", steer_mix);
      } else if (flavor == TaskFlavor::InhibitoryWins) {
        add_answer_chain(b, "Wait,", "c", 3, task.gold, 0.0);
        add_answer_chain(b, "Let me reconsider:", "m", 3, "13", steer_mix);
      } else {
        add_answer_chain(b, "Wait,", "c", 3, "13", steer_mix);
        add_answer_chain(b, "Let me reconsider:", "m", 3, "13", steer_mix);
      }
      task.guard_should_pass = flavor != TaskFlavor::MomentumWins;
      task.baseline_should_pass = false;
      task.expect_trigger = true;
      break;
    }
  }
  // Unreachable inside the designed automaton; covers foreign prompts.
  b.fallback({{"EOS", 1.0}});
  task.script = b.text();
  return task;
}

// The standard 20-task adversarial suite plus its flavor mix.
inline std::vector<AdversarialTask> adversarial_suite() {
  std::vector<AdversarialTask> tasks;
  int id = 0;
  for (int i = 0; i < 8; ++i) tasks.push_back(make_task(id++, TaskFlavor::CounterfactualWins));
  for (int i = 0; i < 6; ++i) tasks.push_back(make_task(id++, TaskFlavor::InhibitoryWins));
  for (int i = 0; i < 3; ++i) tasks.push_back(make_task(id++, TaskFlavor::MomentumWins));
  for (int i = 0; i < 3; ++i) tasks.push_back(make_task(id++, TaskFlavor::Flat));
  return tasks;
}

// Flat-entropy model with identical two-outcome rows everywhere: entropy is
// constant, so the strict quantile comparison never fires.
inline AdversarialTask make_flat_nonzero_task(int id, int chain_len) {
  AdversarialTask task;
  task.name = "flatnz" + std::to_string(id);
  task.prompt = "Flat T" + std::to_string(id) + ":\n";
  ScriptBuilder b;
  b.token("EOS");
  b.token("pad ");
  b.onehot("pad ", "EOS");
  std::string prev = task.prompt;
  for (int i = 0; i < chain_len; ++i) {
    // A mid-chain boundary makes the tie case load-bearing.
    const std::string tok = i == chain_len / 2 ? "mid.\n\n" : "g" + std::to_string(i) + " ";
    b.rule(prev, {{tok, 0.6}, {"pad ", 0.4}});
    prev = tok;
  }
  b.rule(prev, {{"\\boxed{42}", 0.6}, {"pad ", 0.4}});
  b.onehot("\\boxed{42}", "EOS");
  task.guard_should_pass = true;
  task.baseline_should_pass = true;
  task.expect_trigger = false;
  task.script = b.text();
  return task;
}

struct TerminationFixture {
  std::string script;
  std::string prompt;
  int64_t b_max = 40;
  int hesitation_position = 0;  // 0-based token position of the late "Wait"
  bool has_early_wait = false;
  int early_wait_position = 0;
  bool second_wait = false;
};

// Deterministic chain that proposes "Wait" after the budget crosses
// rho_min; some variants also emit an early (unsubstituted) "Wait" or keep
// hesitating after the first substitution.
inline TerminationFixture make_termination_fixture(std::mt19937_64& rng) {
  TerminationFixture fx;
  std::uniform_int_distribution<int> pos_dist(33, 37);
  fx.hesitation_position = pos_dist(rng);
  fx.has_early_wait = (rng() % 2) == 0;
  fx.early_wait_position = 5 + static_cast<int>(rng() % 16);
  fx.second_wait = (rng() % 2) == 0;
  fx.prompt = "Long task:\n";

  ScriptBuilder b;
  b.token("EOS");
  std::string prev = fx.prompt;
  for (int i = 0; i < fx.hesitation_position; ++i) {
    std::string tok;
    if (fx.has_early_wait && i == fx.early_wait_position) tok = "Wait";
    else tok = "t" + std::to_string(i) + " ";
    b.onehot(prev, tok);
    prev = tok;
  }
  b.onehot(prev, "Wait");  // proposed in the late stage; must be substituted
  if (fx.second_wait) {
    // Keeps proposing hesitation after the marker until the budget runs out.
    b.onehot("</think>", "a0 ");
    b.onehot("a0 ", "Wait");
  } else {
    b.onehot("</think>", "a0 ");
    b.onehot("a0 ", "done.");
    b.onehot("done.", "EOS");
  }
  // The baseline leaves "Wait" in place; give that path somewhere to go.
  b.fallback({{"EOS", 1.0}});
  fx.script = b.text();
  return fx;
}

// Random scripted model over a small vocabulary, with a default row so
// every prefix resolves. Used for the degeneracy property.
inline std::string make_random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> vocab_dist(3, 6);
  std::uniform_int_distribution<int> rule_dist(2, 5);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  const int n_tokens = vocab_dist(rng);

  ScriptBuilder b;
  std::vector<std::string> toks;
  for (int i = 0; i < n_tokens; ++i) toks.push_back("w" + std::to_string(i) + " ");
  toks.push_back("br.\n\n");  // reachable boundary token
  toks.push_back("EOS");
  for (const auto& t : toks) b.token(t);

  auto random_row = [&]() {
    std::vector<std::pair<std::string, double>> row;
    double total = 0.0;
    for (const auto& t : toks) {
      const double w = mass(rng);
      row.emplace_back(t, w);
      total += w;
    }
    for (auto& [t, w] : row) w /= total;
    // Renormalization drift stays far below the 1e-6 load tolerance.
    return row;
  };
  const int n_rules = rule_dist(rng);
  for (int r = 0; r < n_rules; ++r) b.rule(toks[rng() % toks.size()], random_row());
  b.fallback(random_row());
  return b.text();
}

// Stochastic probe model: from the anchor text, one of the next tokens
// leads to the right answer with probability `p_right`.
inline std::string make_probe_script(double p_right) {
  ScriptBuilder b;
  b.token("EOS");
  b.rule("start.\n\n", {{"r ", p_right}, {"w ", 1.0 - p_right}});
  b.onehot("r ", "\\boxed{42}");
  b.onehot("w ", "\\boxed{13}");
  b.onehot("\\boxed{42}", "EOS");
  b.onehot("\\boxed{13}", "EOS");
  b.fallback({{"w ", 1.0}});
  return b.text();
}

// A record whose second segment is the failure onset; the probe re-anchors
// at "start.\n\n".
inline guard::TrajectoryRecord make_probe_record(int64_t b_max) {
  guard::TrajectoryRecord rec;
  rec.prompt = "probe:";
  rec.gold = "42";
  rec.decoded_text = "start.\n\nbad step.";
  rec.tokens = {"start.\n\n", "bad ", "step."};
  rec.entropies = {0.1, 0.4, 0.4};
  rec.budget = guard::BudgetState{3, b_max};
  rec.total_generated_tokens = 3;
  rec.finished_reason = guard::FinishReason::Eos;
  rec.mode = guard::RunMode::Baseline;
  return rec;
}

// Byte-level record comparison that ignores the controller mode tag (the
// only field that legitimately differs between a degenerate guard run and
// the baseline).
inline std::string normalized_record_json(guard::TrajectoryRecord rec) {
  rec.mode = guard::RunMode::Guard;
  rec.manifest_hash.clear();
  return guard::record_to_json(rec);
}

}  // namespace fixtures
