#include <random>
#include <string>

#include "doctest.h"
#include "guard/budget.hpp"
#include "guard/errors.hpp"

using namespace guard;

TEST_CASE("capacity ratio arithmetic") {
  CHECK(capacity_ratio(BudgetState{2000, 10000}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(capacity_ratio(BudgetState{0, 10000}) == 1.0);
  CHECK(capacity_ratio(BudgetState{10000, 10000}) == 0.0);
  CHECK_THROWS_AS(capacity_ratio(BudgetState{0, 0}), DomainError);
  CHECK_THROWS_AS(capacity_ratio(BudgetState{11, 10}), DomainError);
}

TEST_CASE("capacity ratio strictly decreases in used tokens") {
  double prev = 2.0;
  for (int used = 0; used <= 100; ++used) {
    const double rho = capacity_ratio(BudgetState{used, 100});
    CHECK(rho < prev);
    prev = rho;
  }
}

TEST_CASE("late stage comparison is inclusive") {
  CHECK(is_late_stage(0.19, 0.2));
  CHECK(is_late_stage(0.2, 0.2));
  CHECK_FALSE(is_late_stage(0.21, 0.2));
}

TEST_CASE("terminal substitution") {
  const HesitationSet hes;  // default {"Wait"}
  CHECK(terminal_substitute("Wait", true, hes, "</think>") == "</think>");
  CHECK(terminal_substitute("Wait", false, hes, "</think>") == "Wait");
  CHECK(terminal_substitute("The", true, hes, "</think>") == "The");
  // Leading whitespace is stripped before matching; tokenizers fuse spaces.
  CHECK(terminal_substitute(" Wait", true, hes, "</think>") == "</think>");
  CHECK(terminal_substitute("\tWait", true, hes, "</think>") == "</think>");
  CHECK(terminal_substitute("Waiting", true, hes, "</think>") == "Waiting");
  CHECK(terminal_substitute("Wait ", true, hes, "</think>") == "Wait ");

  const HesitationSet empty{{}};
  CHECK(terminal_substitute("Wait", true, empty, "</think>") == "Wait");
}

TEST_CASE("substitution is the identity whenever late is false") {
  std::mt19937_64 rng(31);
  const HesitationSet hes{{"Wait", "Hmm"}};
  for (int it = 0; it < 500; ++it) {
    std::string s;
    const size_t n = rng() % 12;
    for (size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('A' + rng() % 58));
    CHECK(terminal_substitute(s, false, hes, "</think>") == s);
  }
}
