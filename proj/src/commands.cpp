#include "guard/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <thread>

#include "json.hpp"

#include "guard/answer.hpp"
#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << content;
}

void write_manifest(const Config& cfg, const std::string& out_dir,
                    const std::string& prompt_source, const std::string& backend_desc) {
  json j;
  j["schema_version"] = kTrajectorySchemaVersion;
  j["manifest_hash"] = cfg.manifest_hash();
  j["backend"] = backend_desc;
  j["prompt_source"] = prompt_source;
  json config = json::object();
  for (const auto& [k, v] : cfg.values()) config[k] = v;
  j["config"] = config;
  write_text_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

// Run all prompts under `mode` with a bounded worker pool; results keep
// prompt order regardless of completion order.
std::vector<TrajectoryRecord> run_prompts(const Config& cfg, Backend& backend,
                                          const std::vector<PromptEntry>& prompts, RunMode mode,
                                          int jobs) {
  const GuardConfig base = cfg.to_guard_config();
  const std::string hash = cfg.manifest_hash();
  std::vector<TrajectoryRecord> records(prompts.size());
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      GuardConfig gc = base;
      gc.policy.seed = mix64(base.policy.seed, static_cast<uint64_t>(i));
      TrajectoryRecord rec;
      try {
        rec = mode == RunMode::Guard ? run_guard(prompts[i].prompt, gc, backend)
                                     : run_baseline(prompts[i].prompt, gc, backend);
      } catch (const std::exception& e) {
        rec.mode = mode;
        rec.prompt = prompts[i].prompt;
        rec.seed = gc.policy.seed;
        rec.budget = BudgetState{0, gc.b_max};
        rec.finished_reason = FinishReason::Error;
        rec.error_detail = e.what();
      }
      rec.prompt_index = static_cast<int64_t>(i);
      rec.gold = prompts[i].gold;
      rec.manifest_hash = hash;
      records[i] = std::move(rec);
    }
  };

  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(prompts.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return records;
}

RunSummary summarize(const std::vector<TrajectoryRecord>& records, RunMode mode,
                     const std::string& hash, const std::string& path) {
  RunSummary s;
  s.mode = run_mode_name(mode);
  s.manifest_hash = hash;
  s.trajectories_path = path;
  s.prompts = static_cast<int64_t>(records.size());
  int64_t token_sum = 0;
  for (const auto& rec : records) {
    token_sum += static_cast<int64_t>(rec.tokens.size());
    s.total_generated_tokens += rec.total_generated_tokens;
    if (rec.finished_reason == FinishReason::Error) ++s.errors;
    if (!rec.gold.empty()) {
      ++s.with_gold;
      const auto answer = extract_boxed_answer(rec.decoded_text);
      if (answer && check_answer(*answer, rec.gold)) ++s.correct;
    }
  }
  s.mean_output_tokens =
      records.empty() ? 0.0 : static_cast<double>(token_sum) / static_cast<double>(records.size());
  if (s.with_gold > 0)
    s.pass_rate = static_cast<double>(s.correct) / static_cast<double>(s.with_gold);
  return s;
}

json summary_json(const RunSummary& s) {
  json j;
  j["mode"] = s.mode;
  j["prompts"] = s.prompts;
  j["with_gold"] = s.with_gold;
  j["correct"] = s.correct;
  if (s.pass_rate >= 0.0) j["pass_rate"] = format_sig9(s.pass_rate);
  j["mean_output_tokens"] = format_sig9(s.mean_output_tokens);
  j["total_generated_tokens"] = s.total_generated_tokens;
  j["errors"] = s.errors;
  j["manifest_hash"] = s.manifest_hash;
  j["trajectories"] = s.trajectories_path;
  return j;
}

}  // namespace

std::string to_json_string(const RunSummary& s) { return summary_json(s).dump(); }

std::string to_json_string(const CompareSummary& s) {
  json j;
  j["guard"] = summary_json(s.guard);
  j["baseline"] = summary_json(s.baseline);
  return j.dump();
}

std::string to_json_string(const VoteSummary& s) {
  json j;
  j["mode"] = "vote";
  j["prompts"] = s.prompts;
  j["votes"] = s.votes;
  j["with_gold"] = s.with_gold;
  j["correct"] = s.correct;
  if (s.pass_rate >= 0.0) j["pass_rate"] = format_sig9(s.pass_rate);
  j["mean_output_tokens"] = format_sig9(s.mean_output_tokens);
  j["total_generated_tokens"] = s.total_generated_tokens;
  j["manifest_hash"] = s.manifest_hash;
  j["trajectories"] = s.trajectories_path;
  return j.dump();
}

std::string to_json_string(const AnalyzeSummary& s) {
  json j;
  j["trajectories"] = s.trajectories;
  j["trajectories_with_onsets"] = s.trajectories_with_onsets;
  j["labeled"] = s.labeled;
  j["label_gaps"] = s.label_gaps;
  j["early_fraction"] = format_sig9(s.early_fraction);
  j["single_invalid_fraction"] = format_sig9(s.single_invalid_fraction);
  json bins = json::array();
  for (const auto& bin : s.position_histogram) {
    bins.push_back({{"lo", format_sig9(bin.lo)},
                    {"hi", format_sig9(bin.hi)},
                    {"count", bin.count},
                    {"fraction", format_sig9(bin.fraction)}});
  }
  j["position_histogram"] = bins;
  j["probes"] = s.probes;
  j["recoverable"] = s.recoverable;
  j["out_dir"] = s.out_dir;
  j["manifest_hash"] = s.manifest_hash;
  return j.dump();
}

std::string to_json_string(const SimulateSummary& s) {
  json j;
  j["trajectories"] = s.trajectories;
  j["incorrect"] = s.incorrect;
  j["planted_early"] = s.planted_early;
  j["planted_single_invalid"] = s.planted_single_invalid;
  j["path"] = s.path;
  j["manifest_hash"] = s.manifest_hash;
  return j.dump();
}

RunSummary cmd_run(const Config& cfg, Backend& backend, const std::vector<PromptEntry>& prompts,
                   const std::string& out_dir, RunMode mode, int jobs,
                   const std::string& prompt_source) {
  if (prompts.empty()) throw DomainError("no prompts to run");
  fs::create_directories(out_dir);
  write_manifest(cfg, out_dir, prompt_source, cfg.get("backend.kind"));

  std::vector<TrajectoryRecord> records = run_prompts(cfg, backend, prompts, mode, jobs);
  const std::string path =
      out_dir + (mode == RunMode::Guard ? "/trajectories.jsonl" : "/baseline.jsonl");
  write_trajectories(path, records);
  RunSummary summary = summarize(records, mode, cfg.manifest_hash(), path);
  write_text_file(out_dir + "/summary.json", to_json_string(summary) + "\n");
  return summary;
}

CompareSummary cmd_compare(const Config& cfg, Backend& backend,
                           const std::vector<PromptEntry>& prompts, const std::string& out_dir,
                           int jobs, const std::string& prompt_source) {
  if (prompts.empty()) throw DomainError("no prompts to run");
  fs::create_directories(out_dir);
  write_manifest(cfg, out_dir, prompt_source, cfg.get("backend.kind"));

  CompareSummary out;
  auto guard_records = run_prompts(cfg, backend, prompts, RunMode::Guard, jobs);
  write_trajectories(out_dir + "/guard.jsonl", guard_records);
  out.guard = summarize(guard_records, RunMode::Guard, cfg.manifest_hash(),
                        out_dir + "/guard.jsonl");
  auto base_records = run_prompts(cfg, backend, prompts, RunMode::Baseline, jobs);
  write_trajectories(out_dir + "/baseline.jsonl", base_records);
  out.baseline = summarize(base_records, RunMode::Baseline, cfg.manifest_hash(),
                           out_dir + "/baseline.jsonl");
  write_text_file(out_dir + "/summary.json", to_json_string(out) + "\n");
  return out;
}

VoteSummary cmd_vote(const Config& cfg, Backend& backend,
                     const std::vector<PromptEntry>& prompts, const std::string& out_dir,
                     int votes, int jobs, const std::string& prompt_source) {
  if (prompts.empty()) throw DomainError("no prompts to run");
  if (votes < 1) throw DomainError("vote count must be >= 1");
  fs::create_directories(out_dir);
  write_manifest(cfg, out_dir, prompt_source, cfg.get("backend.kind"));

  const GuardConfig base = cfg.to_guard_config();
  const std::string hash = cfg.manifest_hash();
  const size_t total = prompts.size() * static_cast<size_t>(votes);
  std::vector<TrajectoryRecord> records(total);
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const size_t slot = next.fetch_add(1);
      if (slot >= total) return;
      const size_t i = slot / static_cast<size_t>(votes);
      const size_t v = slot % static_cast<size_t>(votes);
      GuardConfig gc = base;
      gc.policy.seed = mix64(mix64(base.policy.seed, static_cast<uint64_t>(i)),
                             static_cast<uint64_t>(v));
      TrajectoryRecord rec;
      try {
        rec = run_baseline(prompts[i].prompt, gc, backend);
      } catch (const std::exception& e) {
        rec.mode = RunMode::Baseline;
        rec.prompt = prompts[i].prompt;
        rec.seed = gc.policy.seed;
        rec.budget = BudgetState{0, gc.b_max};
        rec.finished_reason = FinishReason::Error;
        rec.error_detail = e.what();
      }
      rec.prompt_index = static_cast<int64_t>(slot);
      rec.gold = prompts[i].gold;
      rec.manifest_hash = hash;
      records[slot] = std::move(rec);
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  const std::string path = out_dir + "/votes.jsonl";
  write_trajectories(path, records);

  VoteSummary summary;
  summary.prompts = static_cast<int64_t>(prompts.size());
  summary.votes = votes;
  summary.manifest_hash = hash;
  summary.trajectories_path = path;
  int64_t token_sum = 0;
  for (size_t i = 0; i < prompts.size(); ++i) {
    // Majority over extracted answers; ties keep the first-seen answer.
    std::vector<std::pair<std::string, int>> tally;
    for (int v = 0; v < votes; ++v) {
      const TrajectoryRecord& rec = records[i * static_cast<size_t>(votes) +
                                            static_cast<size_t>(v)];
      token_sum += static_cast<int64_t>(rec.tokens.size());
      summary.total_generated_tokens += rec.total_generated_tokens;
      const auto answer = extract_boxed_answer(rec.decoded_text);
      if (!answer) continue;
      bool found = false;
      for (auto& [text, count] : tally) {
        if (check_answer(text, *answer)) {
          ++count;
          found = true;
          break;
        }
      }
      if (!found) tally.emplace_back(*answer, 1);
    }
    if (prompts[i].gold.empty()) continue;
    ++summary.with_gold;
    const std::pair<std::string, int>* best = nullptr;
    for (const auto& entry : tally) {
      if (!best || entry.second > best->second) best = &entry;
    }
    if (best && check_answer(best->first, prompts[i].gold)) ++summary.correct;
  }
  summary.mean_output_tokens =
      static_cast<double>(token_sum) / static_cast<double>(prompts.size());
  if (summary.with_gold > 0)
    summary.pass_rate = static_cast<double>(summary.correct) /
                        static_cast<double>(summary.with_gold);
  write_text_file(out_dir + "/summary.json", to_json_string(summary) + "\n");
  return summary;
}

namespace {

struct AnalyzedTrajectory {
  TrajectoryDigest digest;
  std::vector<Segment> segments;
  bool has_gaps = false;
};

std::unique_ptr<SegmentOracle> oracle_from(const Config& cfg) {
  const std::string kind = cfg.get("analysis.oracle");
  if (kind == "marker") {
    return std::make_unique<MarkerOracle>(std::vector<std::string>{cfg.get("analysis.marker")});
  }
  if (kind == "judge") {
    const char* env_key = std::getenv("GUARD_API_KEY");
    return std::make_unique<RemoteJudgeOracle>(cfg.get("analysis.judge_endpoint"),
                                               cfg.get("analysis.judge_path"),
                                               env_key ? env_key : cfg.get("backend.api_key"));
  }
  throw ValidationError("analysis.oracle must be 'marker' or 'judge', got '" + kind + "'");
}

}  // namespace

AnalyzeSummary cmd_analyze(const Config& cfg, const std::string& trajectories_path,
                           const std::string& labels_path, Backend* probe_backend,
                           const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_manifest(cfg, out_dir, trajectories_path, "analysis");
  const std::vector<TrajectoryRecord> records = read_trajectories(trajectories_path);

  std::map<int64_t, std::vector<int>> file_labels;
  std::unique_ptr<SegmentOracle> oracle;
  if (!labels_path.empty()) file_labels = read_labels_file(labels_path);
  else oracle = oracle_from(cfg);

  AnalyzeSummary summary;
  summary.out_dir = out_dir;
  summary.manifest_hash = cfg.manifest_hash();

  std::vector<AnalyzedTrajectory> analyzed;
  std::vector<ProfileRow> profile_rows;
  for (const auto& rec : records) {
    AnalyzedTrajectory at;
    at.digest.trajectory_id = rec.prompt_index;
    at.segments = segment_trajectory(rec.decoded_text);
    at.digest.segment_count = static_cast<int>(at.segments.size());
    if (!at.segments.empty()) {
      align_segments_to_tokens(rec, at.segments);
      segment_entropy_profile(rec, at.segments);
    }

    if (!labels_path.empty()) {
      auto it = file_labels.find(rec.prompt_index);
      if (it != file_labels.end() && it->second.size() == at.segments.size())
        at.digest.labels = it->second;
      else
        at.digest.labels.assign(at.segments.size(), -1);
    } else if (!at.segments.empty()) {
      at.digest.labels = oracle->label(rec.prompt, at.segments);
    }

    for (size_t k = 0; k < at.segments.size(); ++k) {
      if (k < at.digest.labels.size()) at.segments[k].validity = at.digest.labels[k];
      ProfileRow row;
      row.trajectory_id = rec.prompt_index;
      row.segment_index = at.segments[k].index;
      row.span_begin = at.segments[k].span_begin;
      row.span_end = at.segments[k].span_end;
      row.mean_entropy = at.segments[k].mean_entropy;
      row.validity = k < at.digest.labels.size() ? at.digest.labels[k] : -1;
      profile_rows.push_back(row);
    }

    at.has_gaps = false;
    for (int v : at.digest.labels) at.has_gaps = at.has_gaps || (v != 0 && v != 1);
    if (!at.digest.labels.empty() && !at.has_gaps) {
      ++summary.labeled;
      at.digest.onsets = detect_onsets(at.digest.labels);
      for (int v : at.digest.labels) at.digest.invalid_count += v == 0 ? 1 : 0;
    } else if (at.has_gaps) {
      ++summary.label_gaps;
    }
    if (!rec.gold.empty()) {
      const auto answer = extract_boxed_answer(rec.decoded_text);
      at.digest.correct = answer && check_answer(*answer, rec.gold);
    }
    analyzed.push_back(std::move(at));
  }

  // Onset statistics + CSVs.
  std::vector<TrajectoryDigest> digests;
  for (const auto& at : analyzed) digests.push_back(at.digest);
  if (digests.empty()) throw DomainError("trajectory file holds no records");
  const OnsetStatistics stats =
      onset_statistics(digests, static_cast<int>(cfg.get_int("analysis.bins")),
                       cfg.get_double("analysis.early_cutoff"));
  summary.trajectories = stats.trajectories;
  summary.trajectories_with_onsets = stats.trajectories_with_onsets;
  summary.early_fraction = stats.early_fraction;
  summary.single_invalid_fraction = stats.single_invalid_fraction;
  summary.position_histogram = stats.position_histogram;

  std::vector<OnsetRow> onset_rows;
  std::vector<std::pair<double, double>> kde_points;
  for (const auto& d : digests) {
    if (d.onsets.empty()) continue;
    OnsetRow row;
    row.trajectory_id = d.trajectory_id;
    row.segment_count = d.segment_count;
    row.invalid_count = d.invalid_count;
    row.first_onset_index = d.onsets.front();
    row.first_onset_position =
        static_cast<double>(d.onsets.front()) / static_cast<double>(d.segment_count);
    onset_rows.push_back(row);
    kde_points.emplace_back(row.first_onset_position, static_cast<double>(d.invalid_count));
  }
  const std::string hash = cfg.manifest_hash();
  write_onsets_csv(out_dir + "/onsets.csv", onset_rows, hash);
  write_entropy_profiles_csv(out_dir + "/entropy_profiles.csv", profile_rows, hash);
  write_segment_counts_csv(out_dir + "/segment_counts.csv", stats, hash);
  if (kde_points.size() >= 2) {
    write_kde_csv(out_dir + "/kde_grid.csv",
                  kde2d_silverman(kde_points, static_cast<int>(cfg.get_int("analysis.kde_grid_x")),
                                  static_cast<int>(cfg.get_int("analysis.kde_grid_y")),
                                  cfg.get_double("analysis.kde_pad_sigmas")),
                  hash);
  } else {
    write_kde_csv(out_dir + "/kde_grid.csv", Kde2dGrid{}, hash);
  }

  // Recoverability: needs a backend and gold answers.
  std::vector<RecoverabilityReport> probes;
  if (probe_backend) {
    const ProbeConfig pc = cfg.to_probe_config();
    for (size_t i = 0; i < analyzed.size(); ++i) {
      const auto& d = analyzed[i].digest;
      if (d.onsets.empty() || records[i].gold.empty()) continue;
      probes.push_back(recoverability_probe(records[i], d.onsets.front(), *probe_backend, pc));
      ++summary.probes;
      if (probes.back().recoverable) ++summary.recoverable;
    }
  }
  write_recoverability_csv(out_dir + "/recoverability.csv", probes, hash);

  write_text_file(out_dir + "/analyze_summary.json", to_json_string(summary) + "\n");
  return summary;
}

AnalyzeSummary cmd_probe(const Config& cfg, Backend& backend,
                         const std::string& trajectories_path, const std::string& labels_path,
                         const std::string& out_dir) {
  return cmd_analyze(cfg, trajectories_path, labels_path, &backend, out_dir);
}

SimulateParams simulate_params_from(const Config& cfg) {
  SimulateParams p;
  p.trajectories = cfg.get_int("simulate.trajectories");
  p.incorrect_fraction = cfg.get_double("simulate.incorrect_fraction");
  p.early_fraction = cfg.get_double("simulate.early_fraction");
  p.early_cutoff = cfg.get_double("simulate.early_cutoff");
  p.single_invalid_fraction = cfg.get_double("simulate.single_invalid_fraction");
  p.min_segments = static_cast<int>(cfg.get_int("simulate.min_segments"));
  p.max_segments = static_cast<int>(cfg.get_int("simulate.max_segments"));
  p.correct_min_segments = static_cast<int>(cfg.get_int("simulate.correct_min_segments"));
  p.correct_max_segments = static_cast<int>(cfg.get_int("simulate.correct_max_segments"));
  p.marker = cfg.get("analysis.marker");
  p.gold = cfg.get("simulate.gold");
  p.b_max = cfg.get_int("guard.b_max");
  p.seed = static_cast<uint64_t>(cfg.get_int("simulate.seed"));
  if (p.trajectories < 1) throw ValidationError("simulate.trajectories must be >= 1");
  if (p.min_segments < 4) throw ValidationError("simulate.min_segments must be >= 4");
  if (p.max_segments < p.min_segments)
    throw ValidationError("simulate.max_segments must be >= simulate.min_segments");
  return p;
}

std::vector<TrajectoryRecord> generate_synthetic_corpus(const SimulateParams& params) {
  std::mt19937_64 rng(params.seed);
  const auto n = static_cast<size_t>(params.trajectories);
  const auto n_incorrect =
      static_cast<size_t>(std::llround(params.incorrect_fraction * static_cast<double>(n)));
  const auto n_early = static_cast<size_t>(
      std::llround(params.early_fraction * static_cast<double>(n_incorrect)));
  const auto n_single = static_cast<size_t>(
      std::llround(params.single_invalid_fraction * static_cast<double>(n_incorrect)));

  // Exact-count planting: flags are shuffled, not sampled, so the corpus
  // carries the target fractions up to rounding.
  std::vector<char> early_flags(n_incorrect, 0), single_flags(n_incorrect, 0);
  std::fill_n(early_flags.begin(), std::min(n_early, n_incorrect), 1);
  std::fill_n(single_flags.begin(), std::min(n_single, n_incorrect), 1);
  std::shuffle(early_flags.begin(), early_flags.end(), rng);
  std::shuffle(single_flags.begin(), single_flags.end(), rng);

  auto uniform_int = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto uniform_real = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<TrajectoryRecord> records;
  records.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const bool incorrect = i < n_incorrect;
    TrajectoryRecord rec;
    rec.prompt_index = static_cast<int64_t>(i);
    rec.mode = RunMode::Baseline;
    rec.seed = mix64(params.seed, i);
    rec.prompt = "synthetic problem " + std::to_string(i);
    rec.gold = params.gold;
    rec.budget.max_tokens = params.b_max;

    int K, onset_k = 0, invalid_run = 0;
    if (incorrect) {
      K = uniform_int(params.min_segments, params.max_segments);
      // Largest k with k/K <= cutoff; the epsilon absorbs cases like
      // 0.3 * 10 landing just below 3.0 in floating point.
      const int early_max = static_cast<int>(std::floor(params.early_cutoff * K + 1e-9));
      const bool single = single_flags[i] != 0;
      if (early_flags[i]) {
        onset_k = uniform_int(1, std::max(1, early_max));
      } else {
        const int lo = std::min(early_max + 1, K);
        onset_k = uniform_int(lo, single ? K : std::max(lo, K - 1));
      }
      invalid_run = single ? 1 : uniform_int(2, std::max(2, std::min(4, K - onset_k + 1)));
      invalid_run = std::min(invalid_run, K - onset_k + 1);
    } else {
      K = uniform_int(params.correct_min_segments, params.correct_max_segments);
    }

    for (int k = 1; k <= K; ++k) {
      const bool invalid = incorrect && k >= onset_k && k < onset_k + invalid_run;
      const bool is_onset = incorrect && k == onset_k;
      const bool last = k == K;
      std::vector<std::string> words = {"step", std::to_string(k) + ":", "value",
                                        std::to_string(uniform_int(10, 99)) + "."};
      if (invalid) words.insert(words.begin() + 2, params.marker);
      if (last) {
        const std::string answer = incorrect ? "13" : params.gold;
        words = {"final", "answer", "\\boxed{" + answer + "}."};
        if (invalid) words.insert(words.begin(), params.marker);
      }
      for (size_t w = 0; w < words.size(); ++w) {
        std::string text = words[w];
        if (w + 1 < words.size()) text += " ";
        else if (!last) text += "\n\n";
        double h = invalid ? uniform_real(1.2, 1.8) : uniform_real(0.2, 0.6);
        if (is_onset && w == 0) h = uniform_real(2.0, 2.5);
        rec.tokens.push_back(text);
        rec.entropies.push_back(h);
        rec.decoded_text += text;
      }
    }
    rec.budget.used_tokens = static_cast<int64_t>(rec.tokens.size());
    rec.total_generated_tokens = rec.budget.used_tokens;
    rec.finished_reason = FinishReason::Eos;
    records.push_back(std::move(rec));
  }
  return records;
}

SimulateSummary cmd_simulate(const Config& cfg, const std::string& out_path) {
  const SimulateParams params = simulate_params_from(cfg);
  std::vector<TrajectoryRecord> records = generate_synthetic_corpus(params);
  const std::string hash = cfg.manifest_hash();
  for (auto& rec : records) rec.manifest_hash = hash;
  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_trajectories(out_path, records);

  SimulateSummary summary;
  summary.trajectories = params.trajectories;
  summary.incorrect =
      std::llround(params.incorrect_fraction * static_cast<double>(params.trajectories));
  summary.planted_early =
      std::llround(params.early_fraction * static_cast<double>(summary.incorrect));
  summary.planted_single_invalid =
      std::llround(params.single_invalid_fraction * static_cast<double>(summary.incorrect));
  summary.path = out_path;
  summary.manifest_hash = hash;
  return summary;
}

}  // namespace guard
