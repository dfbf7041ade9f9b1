#include <cmath>
#include <random>

#include "doctest.h"
#include "guard/entropy.hpp"
#include "guard/errors.hpp"
#include "support/oracles.hpp"

using namespace guard;

TEST_CASE("softmax matches the analytic cases") {
  auto d = softmax(std::vector<double>{0.0, 0.0});
  CHECK(d.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.probs[1] == doctest::Approx(0.5).epsilon(1e-12));

  // Stability under large-magnitude logits.
  d = softmax(std::vector<double>{1000.0, 1000.0});
  CHECK(d.probs[0] == doctest::Approx(0.5).epsilon(1e-12));

  d = softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(d.probs[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d.probs[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rejects empty and non-finite input") {
  CHECK_THROWS_AS(softmax(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, std::nan("")}), DomainError);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, INFINITY}), DomainError);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logit(-30.0, 30.0);
  std::uniform_int_distribution<size_t> len(1, 40);
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> logits(len(rng));
    for (double& z : logits) z = logit(rng);
    const TokenDistribution d = softmax(logits);
    double sum = 0.0;
    for (double p : d.probs) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-9);

    const double shift = logit(rng);
    std::vector<double> shifted = logits;
    for (double& z : shifted) z += shift;
    const TokenDistribution ds = softmax(shifted);
    for (size_t i = 0; i < d.probs.size(); ++i)
      CHECK(std::abs(d.probs[i] - ds.probs[i]) <= 1e-12);
  }
}

TEST_CASE("shannon entropy on known distributions") {
  TokenDistribution uniform4{{0.25, 0.25, 0.25, 0.25}};
  CHECK(shannon_entropy(uniform4) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  TokenDistribution onehot{{0.0, 1.0, 0.0}};
  CHECK(shannon_entropy(onehot) == 0.0);

  // Frozen from the high-precision summation oracle.
  TokenDistribution skew{{0.25, 0.75}};
  CHECK(shannon_entropy(skew) == doctest::Approx(0.5623351446188083).epsilon(1e-12));
}

TEST_CASE("shannon entropy rejects invalid distributions") {
  CHECK_THROWS_AS(shannon_entropy(TokenDistribution{{0.5, 0.6}}), DomainError);
  CHECK_THROWS_AS(shannon_entropy(TokenDistribution{{-0.1, 1.1}}), DomainError);
  CHECK_THROWS_AS(shannon_entropy(TokenDistribution{{}}), DomainError);
}

TEST_CASE("entropy is maximized by the uniform distribution") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> mass(0.0, 1.0);
  std::uniform_int_distribution<size_t> len(2, 16);
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> p(len(rng));
    double total = 0.0;
    for (double& v : p) {
      v = mass(rng);
      total += v;
    }
    for (double& v : p) v /= total;
    const double h = shannon_entropy(TokenDistribution{p});
    CHECK(h <= std::log(static_cast<double>(p.size())) + 1e-9);
    CHECK(h == doctest::Approx(oracle::entropy_kahan(p)).epsilon(1e-12));
  }
}

TEST_CASE("mean entropy basics") {
  CHECK(mean_entropy(std::vector<double>{1.0, 2.0, 3.0}) == 2.0);
  CHECK(mean_entropy(std::vector<double>{0.7}) == 0.7);
  CHECK(mean_entropy(std::vector<double>{0.0, 0.0, 0.9}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(mean_entropy(std::vector<double>{}), DomainError);
}

TEST_CASE("mean of a constant sequence is exactly that constant") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> val(0.0, 12.0);
  std::uniform_int_distribution<size_t> len(1, 512);
  for (int it = 0; it < 500; ++it) {
    const double c = val(rng);
    std::vector<double> seq(len(rng), c);
    CHECK(mean_entropy(seq) == c);
  }
}

TEST_CASE("truncated logprob entropy: known values") {
  TruncatedLogprobs t;
  t.entries = {{"a", std::log(0.6)}, {"b", std::log(0.3)}};
  t.residual_mass = 0.1;
  // Frozen from the direct summation oracle.
  CHECK(entropy_lower_bound_from_topk(t) == doctest::Approx(0.8979457248566382).epsilon(1e-9));

  TruncatedLogprobs full;
  full.entries = {{"a", std::log(0.5)}, {"b", std::log(0.5)}};
  full.residual_mass = 0.0;
  CHECK(entropy_lower_bound_from_topk(full) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  TruncatedLogprobs onehot;
  onehot.entries = {{"a", 0.0}};
  onehot.residual_mass = 0.0;
  CHECK(entropy_lower_bound_from_topk(onehot) == 0.0);
}

TEST_CASE("truncated logprob entropy rejects bad mass accounting") {
  TruncatedLogprobs t;
  t.entries = {{"a", std::log(0.5)}, {"b", std::log(0.38)}};
  t.residual_mass = 0.0;  // mass 0.88
  CHECK_THROWS_AS(entropy_lower_bound_from_topk(t), DomainError);
  t.residual_mass = -0.05;
  CHECK_THROWS_AS(entropy_lower_bound_from_topk(t), DomainError);
}

TEST_CASE("truncated entropy lower-bounds every completion of the residual") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> mass(0.01, 1.0);
  std::uniform_int_distribution<size_t> vocab(3, 6);
  std::uniform_int_distribution<size_t> splits(2, 4);
  for (int it = 0; it < 800; ++it) {
    // Build a full distribution over n <= 6 outcomes, expose the top k.
    std::vector<double> p(vocab(rng));
    double total = 0.0;
    for (double& v : p) {
      v = mass(rng);
      total += v;
    }
    for (double& v : p) v /= total;
    std::sort(p.begin(), p.end(), std::greater<>());
    const size_t k = 1 + rng() % (p.size() - 1);

    TruncatedLogprobs t;
    double residual = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      if (i < k) t.entries.push_back({"t" + std::to_string(i), std::log(p[i])});
      else residual += p[i];
    }
    t.residual_mass = residual;
    const double bound = entropy_lower_bound_from_topk(t);

    // Any split of the residual into >= 2 outcomes has at least the coarse
    // entropy; the original full distribution is one such completion.
    CHECK(bound <= shannon_entropy(TokenDistribution{p}) + 1e-12);
    std::vector<double> completion(p.begin(), p.begin() + static_cast<long>(k));
    const size_t parts = splits(rng);
    std::vector<double> w(parts);
    double wt = 0.0;
    for (double& v : w) {
      v = mass(rng);
      wt += v;
    }
    for (double v : w) completion.push_back(residual * v / wt);
    CHECK(bound <= oracle::entropy_kahan(completion) + 1e-12);
  }
}
