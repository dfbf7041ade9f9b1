#include "guard/trajectory_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

using nlohmann::json;

namespace {

json number_string(double v) { return json(format_sig9(v)); }

double parse_number_string(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ParseError(std::string(what) + " is neither string nor number");
  const std::string s = v.get<std::string>();
  const char* begin = s.c_str();
  char* end = nullptr;
  double out = std::strtod(begin, &end);
  if (end != begin + s.size()) throw ParseError(std::string(what) + " is not numeric: " + s);
  return out;
}

BranchKind branch_kind_from_name(const std::string& name) {
  if (name == "momentum") return BranchKind::Momentum;
  if (name == "inhibitory") return BranchKind::Inhibitory;
  if (name == "counterfactual") return BranchKind::Counterfactual;
  throw ParseError("unknown branch kind '" + name + "'");
}

json event_to_json(const InterventionEvent& ev) {
  json j;
  j["kind"] = event_kind_name(ev.kind);
  j["position"] = ev.position;
  switch (ev.kind) {
    case EventKind::BranchTrigger:
      j["entropy"] = number_string(ev.trigger_entropy);
      j["threshold"] = number_string(ev.threshold);
      break;
    case EventKind::BranchSelected: {
      j["selected"] = branch_kind_name(ev.selected_kind);
      json scores = json::array();
      for (int k = 0; k < 3; ++k) scores.push_back(number_string(ev.scores[k]));
      j["scores"] = scores;
      j["injected_text"] = ev.injected_text;
      j["span_tokens"] = ev.span_tokens;
      j["discarded_tokens"] = ev.discarded_tokens;
      j["terminal"] = ev.terminal_branch;
      break;
    }
    case EventKind::Termination:
      j["original"] = ev.original_token;
      j["substituted"] = ev.substituted;
      break;
    case EventKind::Degraded:
      j["detail"] = ev.detail;
      break;
  }
  return j;
}

InterventionEvent event_from_json(const json& j) {
  InterventionEvent ev;
  const std::string kind = j.at("kind").get<std::string>();
  ev.position = j.at("position").get<int64_t>();
  if (kind == "branch_trigger") {
    ev.kind = EventKind::BranchTrigger;
    ev.trigger_entropy = parse_number_string(j.at("entropy"), "event entropy");
    ev.threshold = parse_number_string(j.at("threshold"), "event threshold");
  } else if (kind == "branch_selected") {
    ev.kind = EventKind::BranchSelected;
    ev.selected_kind = branch_kind_from_name(j.at("selected").get<std::string>());
    const json& scores = j.at("scores");
    if (!scores.is_array() || scores.size() != 3)
      throw ParseError("branch_selected event needs exactly 3 scores");
    for (int k = 0; k < 3; ++k)
      ev.scores[k] = parse_number_string(scores[static_cast<size_t>(k)], "branch score");
    ev.injected_text = j.at("injected_text").get<std::string>();
    ev.span_tokens = j.at("span_tokens").get<int64_t>();
    ev.discarded_tokens = j.at("discarded_tokens").get<int64_t>();
    ev.terminal_branch = j.value("terminal", false);
  } else if (kind == "termination") {
    ev.kind = EventKind::Termination;
    ev.original_token = j.at("original").get<std::string>();
    ev.substituted = j.at("substituted").get<std::string>();
  } else if (kind == "degraded") {
    ev.kind = EventKind::Degraded;
    ev.detail = j.value("detail", "");
  } else {
    throw ParseError("unknown event kind '" + kind + "'");
  }
  return ev;
}

FinishReason finish_reason_from_name(const std::string& name) {
  if (name == "eos") return FinishReason::Eos;
  if (name == "budget_exhausted") return FinishReason::BudgetExhausted;
  if (name == "error") return FinishReason::Error;
  throw ParseError("unknown finished_reason '" + name + "'");
}

}  // namespace

std::string record_to_json(const TrajectoryRecord& rec) {
  json j;
  j["schema_version"] = kTrajectorySchemaVersion;
  j["manifest_hash"] = rec.manifest_hash;
  j["prompt_index"] = rec.prompt_index;
  j["mode"] = run_mode_name(rec.mode);
  j["seed"] = rec.seed;
  j["prompt"] = rec.prompt;
  if (!rec.gold.empty()) j["gold"] = rec.gold;
  j["tokens"] = rec.tokens;
  json entropies = json::array();
  for (double h : rec.entropies) entropies.push_back(number_string(h));
  j["entropies"] = entropies;
  j["entropy_estimated"] = rec.entropy_estimated;
  j["decoded_text"] = rec.decoded_text;
  json events = json::array();
  for (const auto& ev : rec.events) events.push_back(event_to_json(ev));
  j["events"] = events;
  j["budget"] = {{"used_tokens", rec.budget.used_tokens}, {"max_tokens", rec.budget.max_tokens}};
  j["total_generated_tokens"] = rec.total_generated_tokens;
  j["finished_reason"] = finish_reason_name(rec.finished_reason);
  if (rec.finished_reason == FinishReason::Error) j["error_detail"] = rec.error_detail;
  return j.dump();
}

TrajectoryRecord record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("record is not valid JSON: ") + e.what());
  }
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    if (version.rfind("1.", 0) != 0)
      throw ParseError("trajectory schema version " + version +
                       " is unsupported (expected major 1); migrate the file first");
    TrajectoryRecord rec;
    rec.manifest_hash = j.value("manifest_hash", "");
    rec.prompt_index = j.value("prompt_index", static_cast<int64_t>(0));
    rec.mode = j.value("mode", "guard") == std::string("baseline") ? RunMode::Baseline
                                                                   : RunMode::Guard;
    rec.seed = j.value("seed", static_cast<uint64_t>(0));
    rec.prompt = j.at("prompt").get<std::string>();
    rec.gold = j.value("gold", "");
    rec.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const json& h : j.at("entropies"))
      rec.entropies.push_back(parse_number_string(h, "entropy"));
    if (rec.entropies.size() != rec.tokens.size())
      throw ParseError("tokens and entropies have different lengths");
    rec.entropy_estimated = j.value("entropy_estimated", false);
    rec.decoded_text = j.at("decoded_text").get<std::string>();
    for (const json& ev : j.value("events", json::array()))
      rec.events.push_back(event_from_json(ev));
    const json& budget = j.at("budget");
    rec.budget.used_tokens = budget.at("used_tokens").get<int64_t>();
    rec.budget.max_tokens = budget.at("max_tokens").get<int64_t>();
    rec.total_generated_tokens = j.value("total_generated_tokens", static_cast<int64_t>(0));
    rec.finished_reason = finish_reason_from_name(j.at("finished_reason").get<std::string>());
    rec.error_detail = j.value("error_detail", "");
    return rec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("record is missing required fields: ") + e.what());
  }
}

void write_trajectories(const std::string& path, const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  for (const auto& rec : records) out << record_to_json(rec) << '\n';
}

std::vector<TrajectoryRecord> read_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open trajectory file: " + path);
  std::vector<TrajectoryRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
  }
  return records;
}

std::vector<PromptEntry> read_prompt_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open prompt file: " + path);
  std::vector<PromptEntry> prompts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '{') {
      try {
        json j = json::parse(t);
        prompts.push_back(PromptEntry{j.at("prompt").get<std::string>(), j.value("gold", "")});
      } catch (const json::exception& e) {
        throw ParseError(path + ": bad prompt row: " + e.what(), line_no);
      }
    } else {
      prompts.push_back(PromptEntry{t, ""});
    }
  }
  if (prompts.empty()) throw ParseError("prompt file has no prompts: " + path);
  return prompts;
}

void apply_gold_file(std::vector<PromptEntry>& prompts, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open gold file: " + path);
  std::string line;
  size_t i = 0;
  while (std::getline(in, line) && i < prompts.size()) {
    prompts[i].gold = trim(line);
    ++i;
  }
}

std::map<int64_t, std::vector<int>> read_labels_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open labels file: " + path);
  std::map<int64_t, std::vector<int>> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      labels[j.at("trajectory_id").get<int64_t>()] = j.at("labels").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw ParseError(path + ": bad labels row: " + e.what(), line_no);
    }
  }
  return labels;
}

namespace {

std::ofstream open_csv(const std::string& path, const std::string& manifest_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << "# manifest_hash=" << manifest_hash << '\n';
  return out;
}

}  // namespace

void write_onsets_csv(const std::string& path, const std::vector<OnsetRow>& rows,
                      const std::string& manifest_hash) {
  auto out = open_csv(path, manifest_hash);
  out << "trajectory_id,segment_count,invalid_count,first_onset_index,first_onset_position\n";
  for (const auto& r : rows) {
    out << r.trajectory_id << ',' << r.segment_count << ',' << r.invalid_count << ','
        << r.first_onset_index << ',' << format_sig9(r.first_onset_position) << '\n';
  }
}

void write_entropy_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows,
                                const std::string& manifest_hash) {
  auto out = open_csv(path, manifest_hash);
  out << "trajectory_id,segment_index,span_begin,span_end,mean_entropy,validity\n";
  for (const auto& r : rows) {
    out << r.trajectory_id << ',' << r.segment_index << ',' << r.span_begin << ',' << r.span_end
        << ',' << format_sig9(r.mean_entropy) << ',' << r.validity << '\n';
  }
}

void write_segment_counts_csv(const std::string& path, const OnsetStatistics& stats,
                              const std::string& manifest_hash) {
  auto out = open_csv(path, manifest_hash);
  out << "segment_count,correct,incorrect,unknown\n";
  for (const auto& [count, split] : stats.segment_count_distribution) {
    out << count << ',' << split[0] << ',' << split[1] << ',' << split[2] << '\n';
  }
}

void write_kde_csv(const std::string& path, const Kde2dGrid& grid,
                   const std::string& manifest_hash) {
  auto out = open_csv(path, manifest_hash);
  out << "x,y,density\n";
  for (size_t iy = 0; iy < grid.y.size(); ++iy) {
    for (size_t ix = 0; ix < grid.x.size(); ++ix) {
      out << format_sig9(grid.x[ix]) << ',' << format_sig9(grid.y[iy]) << ','
          << format_sig9(grid.density[iy * grid.x.size() + ix]) << '\n';
    }
  }
}

void write_recoverability_csv(const std::string& path,
                              const std::vector<RecoverabilityReport>& rows,
                              const std::string& manifest_hash) {
  auto out = open_csv(path, manifest_hash);
  out << "trajectory_id,onset_index,anchor_index,num_samples,num_correct,recoverable,complete\n";
  for (const auto& r : rows) {
    out << r.trajectory_id << ',' << r.onset_index << ',' << r.anchor_index << ','
        << r.num_samples << ',' << r.num_correct << ',' << (r.recoverable ? 1 : 0) << ','
        << (r.complete ? 1 : 0) << '\n';
  }
}

}  // namespace guard
