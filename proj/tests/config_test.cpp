#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#include "doctest.h"
#include "guard/config.hpp"
#include "guard/errors.hpp"
#include "guard/text.hpp"
#include "guard/trajectory_io.hpp"

using namespace guard;

TEST_CASE("defaults carry the documented hyperparameters") {
  const Config cfg = Config::defaults();
  const GuardConfig gc = cfg.to_guard_config();
  CHECK(gc.quantile_q == 0.9);
  CHECK(gc.rho_min == 0.2);
  CHECK(gc.horizon == 200);
  CHECK(gc.b_max == 10000);
  CHECK(gc.warmup_min_tokens == 32);
  CHECK(gc.policy.temperature == 0.0);
  CHECK(gc.policy.top_p == 0.95);
  CHECK(gc.termination_marker == "</think>");
  CHECK(gc.hesitation.tokens == std::vector<std::string>{"Wait"});
  CHECK(gc.delimiters.patterns.size() == 9);
  CHECK(gc.branch_texts.inhibitory == "Wait,");
  CHECK(gc.branch_texts.counterfactual == "Let me reconsider:");
  CHECK(gc.enable_branching);
  CHECK(gc.enable_termination);
}

TEST_CASE("config round-trips through serialize/parse") {
  Config cfg = Config::defaults();
  cfg.set("guard.q", "0.85");
  cfg.set("guard.hesitation", "\"Wait\" \"Hmm\"");
  cfg.set("branch.counterfactual_text", "Let me rethink:");
  const Config back = Config::parse(cfg.serialize());
  CHECK(back.values() == cfg.values());
  CHECK(back.manifest_hash() == cfg.manifest_hash());
  // Hash moves when any key moves.
  Config other = cfg;
  other.set("guard.q", "0.95");
  CHECK(other.manifest_hash() != cfg.manifest_hash());
}

TEST_CASE("unknown keys and malformed lines are parse errors with context") {
  CHECK_THROWS_AS(Config::parse("guard.quux = 1\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), ParseError);
  Config cfg = Config::defaults();
  CHECK_THROWS_AS(cfg.set("typo.key", "x"), ParseError);
  try {
    Config::parse("guard.quux = 1\n", "test.conf");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("guard.quux") != std::string::npos);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("typed getters validate and name the key") {
  Config cfg = Config::defaults();
  cfg.set("guard.q", "not-a-number");
  CHECK_THROWS_WITH_AS(cfg.to_guard_config(), doctest::Contains("guard.q"), ParseError);
  cfg.set("guard.q", "1.5");
  CHECK_THROWS_AS(cfg.to_guard_config(), ValidationError);
  cfg.set("guard.q", "0.9");
  cfg.set("guard.delimiters", "");
  CHECK_THROWS_AS(cfg.to_guard_config(), ValidationError);
}

TEST_CASE("comments and blank lines are ignored; files load") {
  const std::string path = "config_roundtrip_test.conf";
  {
    std::ofstream out(path);
    out << "# tuned run\n\nguard.q = 0.85\nguard.rho_min = 0.3\n";
  }
  const Config cfg = Config::load_file(path);
  CHECK(cfg.get_double("guard.q") == 0.85);
  CHECK(cfg.get_double("guard.rho_min") == 0.3);
  std::remove(path.c_str());
  CHECK_THROWS_AS(Config::load_file("missing.conf"), ParseError);
}

TEST_CASE("empty hesitation list disables termination control cleanly") {
  Config cfg = Config::defaults();
  cfg.set("guard.hesitation", "");
  const GuardConfig gc = cfg.to_guard_config();
  CHECK(gc.hesitation.tokens.empty());
}

TEST_CASE("9-significant-digit encoding is a serialization fixed point") {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> mag(-12.0, 12.0);
  for (int it = 0; it < 5000; ++it) {
    const double x = std::copysign(std::exp(mag(rng)), mag(rng));
    const std::string once = format_sig9(x);
    const std::string twice = format_sig9(std::strtod(once.c_str(), nullptr));
    CHECK(once == twice);
  }
  CHECK(format_sig9(0.0) == "0");
  CHECK(format_sig9(std::log(4.0)) == "1.38629436");
}

TEST_CASE("trajectory records survive a JSONL round-trip byte for byte") {
  TrajectoryRecord rec;
  rec.prompt_index = 3;
  rec.mode = RunMode::Guard;
  rec.seed = 99;
  rec.prompt = "Q with \"quotes\" and \n newline";
  rec.gold = "1/2";
  rec.tokens = {"a ", "b.\n\n", "</think>"};
  rec.entropies = {0.123456789123, 1.5, 0.0};
  rec.decoded_text = "a b.\n\nWait,</think>";
  rec.entropy_estimated = true;
  InterventionEvent trig;
  trig.kind = EventKind::BranchTrigger;
  trig.position = 2;
  trig.trigger_entropy = 1.75;
  trig.threshold = 0.5;
  rec.events.push_back(trig);
  InterventionEvent sel;
  sel.kind = EventKind::BranchSelected;
  sel.position = 2;
  sel.selected_kind = BranchKind::Inhibitory;
  sel.scores[0] = 1.0;
  sel.scores[1] = 0.25;
  sel.scores[2] = 0.5;
  sel.injected_text = "Wait,";
  sel.span_tokens = 1;
  sel.discarded_tokens = 4;
  rec.events.push_back(sel);
  rec.budget = BudgetState{3, 100};
  rec.total_generated_tokens = 7;
  rec.finished_reason = FinishReason::BudgetExhausted;
  rec.manifest_hash = "deadbeef";

  const std::string line = record_to_json(rec);
  const TrajectoryRecord back = record_from_json(line);
  CHECK(record_to_json(back) == line);  // stable fixed point
  CHECK(back.tokens == rec.tokens);
  CHECK(back.gold == rec.gold);
  CHECK(back.events.size() == 2);
  CHECK(back.events[1].selected_kind == BranchKind::Inhibitory);
  CHECK(back.events[1].discarded_tokens == 4);
  CHECK(back.budget.max_tokens == 100);
  CHECK(back.mode == RunMode::Guard);

  // 9-significant-digit entropies parse back to the serialized value.
  CHECK(back.entropies[0] == doctest::Approx(rec.entropies[0]).epsilon(1e-9));
}

TEST_CASE("trajectory readers reject unknown major schema versions") {
  TrajectoryRecord rec;
  rec.prompt = "p";
  rec.decoded_text = "";
  std::string line = record_to_json(rec);
  const std::string bumped =
      line.replace(line.find("\"1.0\""), 5, "\"2.0\"");
  CHECK_THROWS_WITH_AS(record_from_json(bumped), doctest::Contains("migrate"), ParseError);
}

TEST_CASE("truncated JSONL lines report their line number") {
  const std::string path = "bad_rows_test.jsonl";
  TrajectoryRecord rec;
  rec.prompt = "p";
  {
    std::ofstream out(path);
    out << record_to_json(rec) << "\n";
    out << "{\"schema_version\": \"1.0\", \"prompt\": tru\n";
  }
  CHECK_THROWS_WITH_AS(read_trajectories(path), doctest::Contains("line 2"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("prompt files accept JSONL and plain text") {
  const std::string path = "prompts_test.tmp";
  {
    std::ofstream out(path);
    out << "{\"prompt\": \"Q1\", \"gold\": \"42\"}\n";
    out << "plain prompt line\n";
  }
  auto prompts = read_prompt_file(path);
  REQUIRE(prompts.size() == 2);
  CHECK(prompts[0].prompt == "Q1");
  CHECK(prompts[0].gold == "42");
  CHECK(prompts[1].prompt == "plain prompt line");
  CHECK(prompts[1].gold.empty());
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "\n  \n";
  }
  CHECK_THROWS_AS(read_prompt_file(path), ParseError);  // empty prompt file
  std::remove(path.c_str());
}
