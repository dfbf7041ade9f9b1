#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

#include "guard/analysis.hpp"
#include "guard/errors.hpp"
#include "guard/scripted_model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace guard;

namespace {

std::vector<std::string> segment_texts(const std::vector<Segment>& segments) {
  std::vector<std::string> out;
  for (const auto& s : segments) out.push_back(s.text);
  return out;
}

// Two segments of 3 and 2 tokens with a known tokenization.
TrajectoryRecord two_segment_record() {
  TrajectoryRecord rec;
  rec.decoded_text = "a b.\n\nc d";
  rec.tokens = {"a ", "b.", "\n\n", "c ", "d"};
  rec.entropies = {1.0, 1.0, 1.0, 3.0, 3.0};
  rec.budget = BudgetState{5, 100};
  rec.mode = RunMode::Baseline;
  return rec;
}

}  // namespace

TEST_CASE("segmentation splits on double newlines and drops empties") {
  CHECK(segment_texts(segment_trajectory("A\n\nB\n\nC")) ==
        std::vector<std::string>{"A", "B", "C"});
  CHECK(segment_texts(segment_trajectory("A")) == std::vector<std::string>{"A"});
  CHECK(segment_texts(segment_trajectory("A\n\n\n\nB")) == std::vector<std::string>{"A", "B"});
  CHECK(segment_texts(segment_trajectory("\n\nA\n\n")) == std::vector<std::string>{"A"});
  CHECK(segment_trajectory("").empty());
  CHECK(segment_trajectory("\n\n\n\n").empty());

  // Delimiters attach to the preceding segment; offsets partition the text.
  const std::string text = "A\n\n\n\nB\n\n";
  const auto segments = segment_trajectory(text);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].char_begin == 0);
  CHECK(segments[0].char_end == 5);
  CHECK(segments[1].char_begin == 5);
  CHECK(segments[1].char_end == text.size());
  CHECK(segments[0].index == 1);
  CHECK(segments[1].index == 2);
}

TEST_CASE("segmentation round-trips modulo dropped empties") {
  std::mt19937_64 rng(71);
  for (int it = 0; it < 200; ++it) {
    std::string text;
    const int parts = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> expected;
    for (int p = 0; p < parts; ++p) {
      if (rng() % 3 == 0) text += "\n\n";
      std::string body = "p" + std::to_string(rng() % 100);
      text += body;
      expected.push_back(body);
      text += "\n\n";
    }
    CHECK(segment_texts(segment_trajectory(text)) == expected);
  }
}

TEST_CASE("token alignment assigns contiguous 1-based spans") {
  TrajectoryRecord rec = two_segment_record();
  auto segments = segment_trajectory(rec.decoded_text);
  align_segments_to_tokens(rec, segments);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].span_begin == 1);
  CHECK(segments[0].span_end == 3);
  CHECK(segments[1].span_begin == 4);
  CHECK(segments[1].span_end == 5);

  segment_entropy_profile(rec, segments);
  CHECK(segments[0].mean_entropy == 1.0);
  CHECK(segments[1].mean_entropy == 3.0);
}

TEST_CASE("single segment spans all tokens") {
  TrajectoryRecord rec;
  rec.decoded_text = "one two";
  rec.tokens = {"one ", "two"};
  rec.entropies = {0.5, 0.7};
  auto segments = segment_trajectory(rec.decoded_text);
  align_segments_to_tokens(rec, segments);
  REQUIRE(segments.size() == 1);
  CHECK(segments[0].span_begin == 1);
  CHECK(segments[0].span_end == 2);
}

TEST_CASE("corrupted records raise alignment errors naming the offset") {
  TrajectoryRecord rec = two_segment_record();
  rec.tokens.erase(rec.tokens.begin() + 1);  // token deleted
  rec.entropies.erase(rec.entropies.begin() + 1);
  auto segments = segment_trajectory(rec.decoded_text);
  CHECK_THROWS_AS(align_segments_to_tokens(rec, segments), AlignmentError);
  try {
    align_segments_to_tokens(rec, segments);
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("alignment skips injected steering text recorded in events") {
  TrajectoryRecord rec;
  rec.mode = RunMode::Guard;
  rec.decoded_text = "x.\n\nWait, y";
  rec.tokens = {"x.", "\n\n", " y"};
  rec.entropies = {0.1, 0.1, 0.2};
  InterventionEvent sel;
  sel.kind = EventKind::BranchSelected;
  sel.position = 2;
  sel.injected_text = "Wait,";
  sel.span_tokens = 1;
  rec.events.push_back(sel);
  auto segments = segment_trajectory(rec.decoded_text);
  align_segments_to_tokens(rec, segments);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].span_begin == 1);
  CHECK(segments[0].span_end == 2);
  CHECK(segments[1].span_begin == 3);
  CHECK(segments[1].span_end == 3);
}

TEST_CASE("onset detection matches the scan oracle exhaustively up to length 12") {
  for (int len = 1; len <= 12; ++len) {
    for (unsigned mask = 0; mask < (1u << len); ++mask) {
      std::vector<int> labels(static_cast<size_t>(len));
      for (int k = 0; k < len; ++k) labels[static_cast<size_t>(k)] = (mask >> k) & 1u;
      CHECK(detect_onsets(labels) == oracle::onsets_scan(labels));
    }
  }
}

TEST_CASE("onset examples from the definition") {
  CHECK(detect_onsets(std::vector<int>{1, 1, 0, 0, 1, 0}) == std::vector<int>{3, 6});
  CHECK(detect_onsets(std::vector<int>{1, 1, 1}).empty());
  CHECK(detect_onsets(std::vector<int>{0, 1}) == std::vector<int>{1});
  CHECK_THROWS_AS(detect_onsets(std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(detect_onsets(std::vector<int>{1, -1, 0}), DomainError);
}

TEST_CASE("marker oracle labels planted segments") {
  MarkerOracle oracle({"(!)"});
  std::vector<Segment> segments(3);
  segments[0].text = "fine step";
  segments[1].text = "bad (!) step";
  segments[2].text = "fine again";
  CHECK(oracle.label("problem", segments) == std::vector<int>{1, 0, 1});

  std::vector<Segment> clean(2);
  clean[0].text = "a";
  clean[1].text = "b";
  CHECK(oracle.label("problem", clean) == std::vector<int>{1, 1});
}

TEST_CASE("remote judge oracle parses labels and leaves explicit gaps") {
  httplib::Server server;
  server.Post("/judge", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body.contains("criterion"));
    CHECK(body.at("segments").size() == 3);
    res.set_content(R"({"labels": [1, 0]})", "application/json");  // one short
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteJudgeOracle oracle("http://127.0.0.1:" + std::to_string(port), "/judge", "k");
  std::vector<Segment> segments(3);
  segments[0].text = "a";
  segments[1].text = "b";
  segments[2].text = "c";
  CHECK(oracle.label("p", segments) == std::vector<int>{1, 0, -1});

  server.stop();
  t.join();
}

TEST_CASE("onset statistics aggregate positions, histograms, and splits") {
  std::vector<TrajectoryDigest> corpus(3);
  corpus[0].trajectory_id = 0;
  corpus[0].segment_count = 10;
  corpus[0].labels = std::vector<int>(10, 1);
  corpus[0].labels[1] = 0;  // onset at 2 -> 0.2
  corpus[0].onsets = {2};
  corpus[0].invalid_count = 1;
  corpus[0].correct = false;

  corpus[1].trajectory_id = 1;
  corpus[1].segment_count = 10;
  corpus[1].onsets = {3};  // 0.3
  corpus[1].invalid_count = 2;
  corpus[1].correct = false;
  corpus[1].labels = std::vector<int>(10, 1);

  corpus[2].trajectory_id = 2;
  corpus[2].segment_count = 6;
  corpus[2].correct = true;
  corpus[2].labels = std::vector<int>(6, 1);

  const OnsetStatistics stats = onset_statistics(corpus, 10, 0.3);
  CHECK(stats.trajectories == 3);
  CHECK(stats.trajectories_with_onsets == 2);
  CHECK(stats.first_onset_positions == std::vector<double>{0.2, 0.3});
  CHECK(stats.early_fraction == 1.0);  // both <= 0.3
  CHECK(stats.single_invalid_fraction == 0.5);
  CHECK(stats.invalid_count_distribution.at(1) == 1);
  CHECK(stats.invalid_count_distribution.at(2) == 1);
  CHECK(stats.segment_count_distribution.at(10)[1] == 2);  // incorrect
  CHECK(stats.segment_count_distribution.at(6)[0] == 1);   // correct

  int64_t hist_total = 0;
  for (const auto& bin : stats.position_histogram) hist_total += bin.count;
  CHECK(hist_total == 2);
  CHECK_THROWS_AS(onset_statistics({}, 10, 0.3), DomainError);
}

TEST_CASE("corpus with no incorrect trajectories yields an empty onset list") {
  std::vector<TrajectoryDigest> corpus(2);
  for (auto& d : corpus) {
    d.segment_count = 4;
    d.labels = std::vector<int>(4, 1);
    d.correct = true;
  }
  const OnsetStatistics stats = onset_statistics(corpus, 10, 0.3);
  CHECK(stats.trajectories_with_onsets == 0);
  CHECK(stats.first_onset_positions.empty());
  CHECK(stats.early_fraction == 0.0);
}

TEST_CASE("KDE matches the double-loop oracle and is symmetric") {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::vector<std::pair<double, double>> pts(50);
  for (auto& [x, y] : pts) {
    x = coord(rng);
    y = 1.0 + 4.0 * coord(rng);
  }
  const Kde2dGrid grid = kde2d_silverman(pts, 24, 20, 3.0);
  // Silverman with d=2: h = sigma * n^(-1/6).
  double mx = 0, my = 0;
  for (auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= 50;
  my /= 50;
  double vx = 0, vy = 0;
  for (auto& [x, y] : pts) {
    vx += (x - mx) * (x - mx);
    vy += (y - my) * (y - my);
  }
  CHECK(grid.bandwidth_x ==
        doctest::Approx(std::sqrt(vx / 49) * std::pow(50.0, -1.0 / 6.0)).epsilon(1e-12));
  CHECK(grid.bandwidth_y ==
        doctest::Approx(std::sqrt(vy / 49) * std::pow(50.0, -1.0 / 6.0)).epsilon(1e-12));

  for (size_t iy = 0; iy < grid.y.size(); ++iy) {
    for (size_t ix = 0; ix < grid.x.size(); ++ix) {
      const double expect =
          oracle::kde_node(pts, grid.x[ix], grid.y[iy], grid.bandwidth_x, grid.bandwidth_y);
      CHECK(std::abs(grid.density[iy * grid.x.size() + ix] - expect) <= 1e-9);
    }
  }

  // Symmetric data produce a symmetric density.
  std::vector<std::pair<double, double>> sym = {{-1.0, 0.0}, {1.0, 0.0}, {-0.5, 0.5},
                                                {0.5, 0.5}};
  const Kde2dGrid sgrid = kde2d_silverman(sym, 21, 5, 3.0);
  const size_t gx = sgrid.x.size();
  for (size_t iy = 0; iy < sgrid.y.size(); ++iy) {
    for (size_t ix = 0; ix < gx; ++ix) {
      CHECK(sgrid.density[iy * gx + ix] ==
            doctest::Approx(sgrid.density[iy * gx + (gx - 1 - ix)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("KDE handles degenerate clusters via the bandwidth floor") {
  std::vector<std::pair<double, double>> twin = {{0.25, 1.0}, {0.25, 1.0}};
  const Kde2dGrid grid = kde2d_silverman(twin, 15, 15, 3.0);
  CHECK(grid.bandwidth_x == 1e-3);
  CHECK(grid.bandwidth_y == 1e-3);
  // Peak at the shared point: the center node dominates.
  double best = -1.0;
  size_t best_ix = 0, best_iy = 0;
  for (size_t iy = 0; iy < grid.y.size(); ++iy) {
    for (size_t ix = 0; ix < grid.x.size(); ++ix) {
      if (grid.density[iy * grid.x.size() + ix] > best) {
        best = grid.density[iy * grid.x.size() + ix];
        best_ix = ix;
        best_iy = iy;
      }
    }
  }
  CHECK(grid.x[best_ix] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(grid.y[best_iy] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(kde2d_silverman(std::vector<std::pair<double, double>>{{0, 0}}, 8, 8, 3.0),
                  DomainError);
}

TEST_CASE("KDE integrates to about one over a wide grid") {
  std::mt19937_64 rng(73);
  std::normal_distribution<double> gx(0.0, 1.0), gy(3.0, 0.5);
  std::vector<std::pair<double, double>> pts(120);
  for (auto& [x, y] : pts) {
    x = gx(rng);
    y = gy(rng);
  }
  const Kde2dGrid grid = kde2d_silverman(pts, 96, 96, 5.0);
  // Trapezoidal quadrature over the grid.
  double integral = 0.0;
  for (size_t iy = 0; iy + 1 < grid.y.size(); ++iy) {
    for (size_t ix = 0; ix + 1 < grid.x.size(); ++ix) {
      const double cell =
          (grid.density[iy * grid.x.size() + ix] + grid.density[iy * grid.x.size() + ix + 1] +
           grid.density[(iy + 1) * grid.x.size() + ix] +
           grid.density[(iy + 1) * grid.x.size() + ix + 1]) /
          4.0;
      integral += cell * (grid.x[ix + 1] - grid.x[ix]) * (grid.y[iy + 1] - grid.y[iy]);
    }
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("recoverability probe on a stochastic scripted model") {
  auto backend = ScriptedBackend::parse(fixtures::make_probe_script(0.25));
  const TrajectoryRecord rec = fixtures::make_probe_record(50);

  ProbeConfig cfg;
  cfg.num_samples = 8;
  cfg.temperature = 1.0;
  cfg.top_p = 1.0;
  cfg.seed = 3;  // fixed seed: at least one of 8 draws hits p = 0.25
  const RecoverabilityReport report = recoverability_probe(rec, 2, *backend, cfg);
  CHECK(report.onset_index == 2);
  CHECK(report.anchor_index == 1);
  CHECK(report.num_samples == 8);
  CHECK(report.num_correct >= 1);
  CHECK(report.recoverable);
  CHECK(report.complete);

  // A wrong-only script can never recover.
  auto wrong_only = ScriptedBackend::parse(fixtures::make_probe_script(0.0));
  const RecoverabilityReport never = recoverability_probe(rec, 2, *wrong_only, cfg);
  CHECK_FALSE(never.recoverable);
  CHECK(never.num_correct == 0);
}

TEST_CASE("probe with onset 1 anchors at the bare prompt") {
  // Rules keyed on the prompt itself: the anchor prefix is just the prompt.
  fixtures::ScriptBuilder b;
  b.token("EOS");
  b.rule("probe:", {{"r ", 0.5}, {"w ", 0.5}});
  b.onehot("r ", "\\boxed{42}");
  b.onehot("w ", "\\boxed{13}");
  b.onehot("\\boxed{42}", "EOS");
  b.onehot("\\boxed{13}", "EOS");
  auto backend = ScriptedBackend::parse(b.text());

  TrajectoryRecord rec = fixtures::make_probe_record(50);
  ProbeConfig cfg;
  cfg.num_samples = 6;
  cfg.temperature = 1.0;
  cfg.top_p = 1.0;
  const RecoverabilityReport report = recoverability_probe(rec, 1, *backend, cfg);
  CHECK(report.anchor_index == 0);
  CHECK(report.num_samples == 6);
  CHECK(report.recoverable);  // p = 0.5 over 6 seeded samples

  CHECK_THROWS_AS(recoverability_probe(rec, 0, *backend, cfg), DomainError);
  TrajectoryRecord no_gold = rec;
  no_gold.gold.clear();
  CHECK_THROWS_AS(recoverability_probe(no_gold, 1, *backend, cfg), DomainError);
}

TEST_CASE("probe reports partial results on transport failure") {
  class FailingBackend final : public Backend {
   public:
    GenerationStep step(const Prefix&, const DecodePolicy&) override {
      throw TransportError("down");
    }
    SpanResult generate_span(const Prefix&, const std::string&, int,
                             const DecodePolicy&) override {
      if (++calls_ > 3) throw TransportError("down");
      SpanResult span;
      span.tokens = {Token{0, "\\boxed{13}"}};
      span.entropies = {0.1};
      span.text = "\\boxed{13}";
      span.stopped_early = true;
      return span;
    }
    BackendCapabilities capabilities() const override { return {}; }

   private:
    int calls_ = 0;
  };
  FailingBackend backend;
  const TrajectoryRecord rec = fixtures::make_probe_record(50);
  ProbeConfig cfg;
  cfg.num_samples = 8;
  const RecoverabilityReport report = recoverability_probe(rec, 2, backend, cfg);
  CHECK_FALSE(report.complete);
  CHECK(report.num_samples == 3);
  CHECK(report.error_detail.find("down") != std::string::npos);
}
