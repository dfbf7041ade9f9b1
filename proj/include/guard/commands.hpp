#pragma once

/**
 * App-level commands behind the CLI subcommands. Prompts run concurrently
 * up to a jobs limit; outputs are written in prompt order by a single
 * serializer, so a fixed seed and a scripted backend make every run
 * byte-reproducible.
 */

#include <optional>
#include <string>
#include <vector>

#include "guard/backend.hpp"
#include "guard/config.hpp"
#include "guard/trajectory_io.hpp"

namespace guard {

struct RunSummary {
  std::string mode;
  int64_t prompts = 0;
  int64_t with_gold = 0;
  int64_t correct = 0;
  double pass_rate = -1.0;  // -1 when no gold answers were available
  double mean_output_tokens = 0.0;
  int64_t total_generated_tokens = 0;
  int64_t errors = 0;
  std::string manifest_hash;
  std::string trajectories_path;
};

struct CompareSummary {
  RunSummary guard;
  RunSummary baseline;
};

struct VoteSummary {
  int64_t prompts = 0;
  int votes = 0;
  int64_t with_gold = 0;
  int64_t correct = 0;
  double pass_rate = -1.0;
  // Mean per prompt of the summed sample token counts (parallel-sampling
  // methods pay for every path).
  double mean_output_tokens = 0.0;
  int64_t total_generated_tokens = 0;
  std::string manifest_hash;
  std::string trajectories_path;
};

struct AnalyzeSummary {
  int64_t trajectories = 0;
  int64_t trajectories_with_onsets = 0;
  int64_t labeled = 0;
  int64_t label_gaps = 0;  // trajectories with oracle gaps, excluded from onset stats
  double early_fraction = 0.0;
  double single_invalid_fraction = 0.0;
  std::vector<HistogramBin> position_histogram;  // first-onset positions, binned
  int64_t probes = 0;
  int64_t recoverable = 0;
  std::string out_dir;
  std::string manifest_hash;
};

struct SimulateSummary {
  int64_t trajectories = 0;
  int64_t incorrect = 0;
  int64_t planted_early = 0;
  int64_t planted_single_invalid = 0;
  std::string path;
  std::string manifest_hash;
};

std::string to_json_string(const RunSummary& s);
std::string to_json_string(const CompareSummary& s);
std::string to_json_string(const VoteSummary& s);
std::string to_json_string(const AnalyzeSummary& s);
std::string to_json_string(const SimulateSummary& s);

// Runs every prompt under one controller mode. Writes trajectories.jsonl
// (or baseline.jsonl), manifest.json and summary.json into out_dir.
// Per-prompt failures become records with finished_reason = error.
RunSummary cmd_run(const Config& cfg, Backend& backend, const std::vector<PromptEntry>& prompts,
                   const std::string& out_dir, RunMode mode, int jobs,
                   const std::string& prompt_source);

// Both controllers with shared per-prompt seeds.
CompareSummary cmd_compare(const Config& cfg, Backend& backend,
                           const std::vector<PromptEntry>& prompts, const std::string& out_dir,
                           int jobs, const std::string& prompt_source);

// Self-consistency baseline: N stochastic plain-decoding samples per prompt
// (distinct derived seeds; set decode.temperature > 0), majority vote over
// extracted answers, ties broken by first occurrence. Every sample is
// logged to votes.jsonl with prompt_index = prompt * votes + sample.
VoteSummary cmd_vote(const Config& cfg, Backend& backend,
                     const std::vector<PromptEntry>& prompts, const std::string& out_dir,
                     int votes, int jobs, const std::string& prompt_source);

// Reads a trajectory JSONL, labels segments (file or oracle), and emits the
// five report CSVs: onsets, entropy_profiles, segment_counts, kde_grid,
// recoverability. The recoverability CSV gains rows only when a probe
// backend is supplied and gold answers exist; otherwise it is header-only.
AnalyzeSummary cmd_analyze(const Config& cfg, const std::string& trajectories_path,
                           const std::string& labels_path, Backend* probe_backend,
                           const std::string& out_dir);

// Standalone recoverability probing; writes recoverability.csv.
AnalyzeSummary cmd_probe(const Config& cfg, Backend& backend,
                         const std::string& trajectories_path, const std::string& labels_path,
                         const std::string& out_dir);

// Synthetic corpus with exact-count planted onset structure, for the
// analysis pipeline. Parameters come from the simulate.* config keys.
struct SimulateParams {
  int64_t trajectories = 200;
  double incorrect_fraction = 0.6;
  double early_fraction = 0.85;
  double early_cutoff = 0.3;
  double single_invalid_fraction = 0.435;
  int min_segments = 12;
  int max_segments = 40;
  int correct_min_segments = 4;
  int correct_max_segments = 16;
  std::string marker = "(!)";
  std::string gold = "42";
  int64_t b_max = 10000;
  uint64_t seed = 7;
};
SimulateParams simulate_params_from(const Config& cfg);
std::vector<TrajectoryRecord> generate_synthetic_corpus(const SimulateParams& params);
SimulateSummary cmd_simulate(const Config& cfg, const std::string& out_path);

}  // namespace guard
