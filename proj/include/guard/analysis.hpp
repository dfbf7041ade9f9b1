#pragma once

/**
 * Trajectory forensics over logged runs: "\n\n" segmentation with token-span
 * alignment, validity labeling through a pluggable oracle, failure-onset
 * detection and statistics, per-segment entropy profiles, 2-D Gaussian KDE
 * with Silverman bandwidth, and local-recoverability probing.
 *
 * Everything here is independent per trajectory and may run concurrently;
 * reports merge deterministically by trajectory id.
 */

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "guard/backend.hpp"
#include "guard/controller.hpp"

namespace guard {

// One reasoning step. Token spans are 1-based inclusive [span_begin,
// span_end]; char offsets index the source text and include the trailing
// delimiter, which attaches to the preceding segment.
struct Segment {
  int index = 0;  // 1-based
  std::string text;
  size_t char_begin = 0;
  size_t char_end = 0;
  int64_t span_begin = 0;  // 0 = unassigned
  int64_t span_end = 0;
  double mean_entropy = 0.0;
  std::optional<int> validity;  // 1 valid, 0 invalid
};

// Splits on "\n\n". Empty segments from leading/trailing/doubled delimiters
// are dropped; their delimiter characters attach to the preceding segment.
std::vector<Segment> segment_trajectory(const std::string& text);

// Assigns contiguous token spans by cumulative decoded length. Injected
// steering text (from branch events) occupies characters without tokens.
// Throws AlignmentError naming the first divergent offset.
void align_segments_to_tokens(const TrajectoryRecord& rec, std::vector<Segment>& segments);

// Mean per-token entropy per segment; requires assigned spans. Throws
// DomainError on a segment whose span holds no tokens.
void segment_entropy_profile(const TrajectoryRecord& rec, std::vector<Segment>& segments);

// Validity oracle contract: one label per segment, in order. 1 = valid,
// 0 = invalid, -1 = gap (oracle could not label; never silently filled).
class SegmentOracle {
 public:
  virtual ~SegmentOracle() = default;
  virtual std::vector<int> label(const std::string& problem,
                                 const std::vector<Segment>& segments) = 0;
};

// Rule-based oracle for fixtures: a segment is invalid iff its text contains
// any of the marker substrings planted by the corpus generator.
class MarkerOracle final : public SegmentOracle {
 public:
  explicit MarkerOracle(std::vector<std::string> markers);
  std::vector<int> label(const std::string& problem,
                         const std::vector<Segment>& segments) override;

 private:
  std::vector<std::string> markers_;
};

// Remote judge speaking a small JSON protocol (see README). Labels beyond
// what the judge returns are reported as -1 gaps.
class RemoteJudgeOracle final : public SegmentOracle {
 public:
  RemoteJudgeOracle(std::string endpoint, std::string path, std::string api_key);
  std::vector<int> label(const std::string& problem,
                         const std::vector<Segment>& segments) override;

 private:
  std::string endpoint_;
  std::string path_;
  std::string api_key_;
};

// Every valid->invalid transition, 1-based. A leading invalid segment counts
// as an onset (the empty prefix is vacuously valid). Labels must be binary;
// gaps are rejected.
std::vector<int> detect_onsets(std::span<const int> labels);

// Per-trajectory digest feeding the corpus statistics.
struct TrajectoryDigest {
  int64_t trajectory_id = 0;
  int segment_count = 0;
  std::vector<int> labels;
  std::vector<int> onsets;
  int invalid_count = 0;
  std::optional<bool> correct;  // vs gold, when known
};

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  int64_t count = 0;
  double fraction = 0.0;
};

struct OnsetStatistics {
  int64_t trajectories = 0;
  int64_t trajectories_with_onsets = 0;
  std::vector<double> first_onset_positions;  // first onset k/K per trajectory
  std::vector<HistogramBin> position_histogram;
  std::map<int, int64_t> invalid_count_distribution;  // over trajectories with >= 1 invalid
  // segment count -> {correct, incorrect, unknown} trajectory counts
  std::map<int, std::array<int64_t, 3>> segment_count_distribution;
  double early_fraction = 0.0;          // first onsets with k/K <= early_cutoff
  double single_invalid_fraction = 0.0; // trajectories with exactly one invalid segment
};

// Throws DomainError on an empty corpus. `early_cutoff` is the normalized
// position boundary behind early_fraction.
OnsetStatistics onset_statistics(const std::vector<TrajectoryDigest>& corpus, int bins,
                                 double early_cutoff);

struct Kde2dGrid {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> density;  // row-major: density[iy * x.size() + ix]
  double bandwidth_x = 0.0;
  double bandwidth_y = 0.0;
};

// Gaussian product-kernel density with per-dimension Silverman bandwidth
// h_j = sigma_j * (4/(d+2))^(1/(d+4)) * n^(-1/(d+4)), d = 2. Degenerate
// dimensions (sigma 0) fall back to a 1e-3 bandwidth floor. Throws
// DomainError on fewer than 2 points.
Kde2dGrid kde2d_silverman(std::span<const std::pair<double, double>> points, int grid_x = 64,
                          int grid_y = 64, double pad_sigmas = 3.0);

struct ProbeConfig {
  int num_samples = 8;
  double temperature = 0.6;
  double top_p = 0.95;
  uint64_t seed = 0;
  int64_t max_tokens_per_sample = 0;  // 0: the record's remaining budget at the anchor
};

struct RecoverabilityReport {
  int64_t trajectory_id = 0;
  int onset_index = 0;   // k
  int anchor_index = 0;  // k-1
  int num_samples = 0;
  int num_correct = 0;
  bool recoverable = false;  // num_correct >= 1
  bool complete = true;      // false when the backend failed mid-probe
  std::string error_detail;
};

// Re-anchors at the last valid segment before onset_k and samples stochastic
// continuations, checking each final answer against rec.gold. Requires a
// gold answer and a reconstructible anchor prefix.
RecoverabilityReport recoverability_probe(const TrajectoryRecord& rec, int onset_k,
                                          Backend& backend, const ProbeConfig& cfg);

}  // namespace guard
