#pragma once

/**
 * File formats: trajectory JSONL (schema v1), report CSVs, prompt sets and
 * label files.
 *
 * JSONL rows store entropies and scores as decimal strings with 9
 * significant digits, which keeps records byte-stable across platforms and
 * round-trips exactly through double. Readers reject unknown major schema
 * versions. CSV column orders are fixed (documented in the README).
 */

#include <map>
#include <string>
#include <vector>

#include "guard/analysis.hpp"
#include "guard/controller.hpp"

namespace guard {

inline constexpr const char* kTrajectorySchemaVersion = "1.0";

// One JSONL line (no trailing newline), keys sorted.
std::string record_to_json(const TrajectoryRecord& rec);
// Throws ParseError on malformed JSON, schema violations, or an unsupported
// major schema version ("migration required").
TrajectoryRecord record_from_json(const std::string& line);

void write_trajectories(const std::string& path, const std::vector<TrajectoryRecord>& records);
// Errors name the 1-based line number of the offending row.
std::vector<TrajectoryRecord> read_trajectories(const std::string& path);

struct PromptEntry {
  std::string prompt;
  std::string gold;
};

// JSONL rows {"prompt": ..., "gold": ...} or plain text (one prompt per
// line, no gold). Throws ParseError when the file is missing or empty.
std::vector<PromptEntry> read_prompt_file(const std::string& path);
// Plain text, line i = gold answer for prompt i.
void apply_gold_file(std::vector<PromptEntry>& prompts, const std::string& path);

// JSONL rows {"trajectory_id": N, "labels": [0|1, ...]}.
std::map<int64_t, std::vector<int>> read_labels_file(const std::string& path);

// Report rows. Column orders are part of the format contract.
struct OnsetRow {
  int64_t trajectory_id = 0;
  int segment_count = 0;
  int invalid_count = 0;
  int first_onset_index = 0;
  double first_onset_position = 0.0;
};

struct ProfileRow {
  int64_t trajectory_id = 0;
  int segment_index = 0;
  int64_t span_begin = 0;
  int64_t span_end = 0;
  double mean_entropy = 0.0;
  int validity = -1;  // -1 unlabeled
};

// Every report starts with a `# manifest_hash=<hash>` comment line, tying
// the file back to the config snapshot that produced it.
void write_onsets_csv(const std::string& path, const std::vector<OnsetRow>& rows,
                      const std::string& manifest_hash);
void write_entropy_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows,
                                const std::string& manifest_hash);
void write_segment_counts_csv(const std::string& path, const OnsetStatistics& stats,
                              const std::string& manifest_hash);
void write_kde_csv(const std::string& path, const Kde2dGrid& grid,
                   const std::string& manifest_hash);
void write_recoverability_csv(const std::string& path,
                              const std::vector<RecoverabilityReport>& rows,
                              const std::string& manifest_hash);

}  // namespace guard
