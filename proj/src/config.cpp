#include "guard/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> kDefaults = {
      {"guard.q", "0.9"},
      {"guard.rho_min", "0.2"},
      {"guard.horizon", "200"},
      {"guard.b_max", "10000"},
      {"guard.warmup_min_tokens", "32"},
      {"guard.enable_branching", "true"},
      {"guard.enable_termination", "true"},
      {"guard.termination_marker", "</think>"},
      {"guard.hesitation", "\"Wait\""},
      {"guard.delimiters",
       "\"\\n\\n\" \",\\n\\n\" \".\\n\\n\" \"]\\n\\n\" \")\\n\\n\" \"]),\\n\\n\" \"].\\n\\n\" "
       "\").\\n\\n\" \".)\\n\\n\""},
      {"branch.inhibitory_text", "Wait,"},
      {"branch.counterfactual_text", "Let me reconsider:"},
      {"decode.temperature", "0"},
      {"decode.top_p", "0.95"},
      {"decode.seed", "0"},
      {"backend.kind", "scripted"},
      {"backend.script", ""},
      {"backend.endpoint", ""},
      {"backend.path", "/v1/completions"},
      {"backend.model", ""},
      {"backend.api_key", ""},
      {"backend.topk", "20"},
      {"backend.max_inflight", "4"},
      {"backend.max_attempts", "3"},
      {"backend.backoff_ms", "100"},
      {"backend.timeout_s", "120"},
      {"probe.samples", "8"},
      {"probe.temperature", "0.6"},
      {"probe.top_p", "0.95"},
      {"probe.max_tokens", "0"},
      {"analysis.bins", "10"},
      {"analysis.early_cutoff", "0.3"},
      {"analysis.kde_grid_x", "64"},
      {"analysis.kde_grid_y", "64"},
      {"analysis.kde_pad_sigmas", "3"},
      {"analysis.oracle", "marker"},
      {"analysis.marker", "(!)"},
      {"analysis.judge_endpoint", ""},
      {"analysis.judge_path", "/judge"},
      {"simulate.trajectories", "200"},
      {"simulate.incorrect_fraction", "0.6"},
      {"simulate.early_fraction", "0.85"},
      {"simulate.early_cutoff", "0.3"},
      {"simulate.single_invalid_fraction", "0.435"},
      {"simulate.min_segments", "12"},
      {"simulate.max_segments", "40"},
      {"simulate.correct_min_segments", "4"},
      {"simulate.correct_max_segments", "16"},
      {"simulate.gold", "42"},
      {"simulate.seed", "7"},
  };
  return kDefaults;
}

}  // namespace

Config Config::defaults() {
  Config cfg;
  cfg.values_ = default_values();
  return cfg;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg = defaults();
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ": expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!default_values().count(key))
      throw ParseError(origin + ": unknown config key '" + key + "'", line_no);
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!default_values().count(key)) throw ParseError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ParseError("unknown config key '" + key + "'");
  return it->second;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' is not a number: '" + v + "'");
  }
}

int64_t Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' is not an integer: '" + v + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  try {
    return split_quoted(get(key));
  } catch (const ParseError& e) {
    throw ParseError("config key '" + key + "': " + e.what());
  }
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::string Config::manifest_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize())));
  return buf;
}

GuardConfig Config::to_guard_config() const {
  GuardConfig gc;
  gc.quantile_q = get_double("guard.q");
  if (!(gc.quantile_q > 0.0 && gc.quantile_q < 1.0))
    throw ValidationError("guard.q must lie in (0,1)");
  gc.rho_min = get_double("guard.rho_min");
  if (gc.rho_min < 0.0 || gc.rho_min > 1.0)
    throw ValidationError("guard.rho_min must lie in [0,1]");
  gc.horizon = static_cast<int>(get_int("guard.horizon"));
  if (gc.horizon < 1) throw ValidationError("guard.horizon must be >= 1");
  gc.b_max = get_int("guard.b_max");
  if (gc.b_max < 1) throw ValidationError("guard.b_max must be >= 1");
  gc.warmup_min_tokens = static_cast<int>(get_int("guard.warmup_min_tokens"));
  if (gc.warmup_min_tokens < 1) throw ValidationError("guard.warmup_min_tokens must be >= 1");
  gc.enable_branching = get_bool("guard.enable_branching");
  gc.enable_termination = get_bool("guard.enable_termination");
  gc.termination_marker = get("guard.termination_marker");
  if (gc.termination_marker.empty())
    throw ValidationError("guard.termination_marker must be non-empty");
  gc.hesitation.tokens = get_list("guard.hesitation");  // may be empty: disables control
  gc.delimiters.patterns = get_list("guard.delimiters");
  if (gc.delimiters.patterns.empty())
    throw ValidationError("guard.delimiters must list at least one pattern");
  for (const auto& p : gc.delimiters.patterns) {
    if (p.empty()) throw ValidationError("guard.delimiters patterns must be non-empty");
  }
  gc.branch_texts.inhibitory = get("branch.inhibitory_text");
  gc.branch_texts.counterfactual = get("branch.counterfactual_text");
  gc.policy.temperature = get_double("decode.temperature");
  if (gc.policy.temperature < 0.0)
    throw ValidationError("decode.temperature must be non-negative");
  gc.policy.top_p = get_double("decode.top_p");
  if (!(gc.policy.top_p > 0.0 && gc.policy.top_p <= 1.0))
    throw ValidationError("decode.top_p must lie in (0,1]");
  gc.policy.seed = static_cast<uint64_t>(get_int("decode.seed"));
  return gc;
}

RemoteConfig Config::to_remote_config() const {
  RemoteConfig rc;
  rc.endpoint = get("backend.endpoint");
  rc.completions_path = get("backend.path");
  rc.model = get("backend.model");
  rc.api_key = get("backend.api_key");
  rc.topk = static_cast<int>(get_int("backend.topk"));
  if (rc.topk < 1) throw ValidationError("backend.topk must be >= 1");
  rc.max_inflight = static_cast<int>(get_int("backend.max_inflight"));
  rc.max_attempts = static_cast<int>(get_int("backend.max_attempts"));
  rc.backoff_ms = static_cast<int>(get_int("backend.backoff_ms"));
  rc.timeout_seconds = static_cast<int>(get_int("backend.timeout_s"));
  return rc;
}

ProbeConfig Config::to_probe_config() const {
  ProbeConfig pc;
  pc.num_samples = static_cast<int>(get_int("probe.samples"));
  if (pc.num_samples < 1) throw ValidationError("probe.samples must be >= 1");
  pc.temperature = get_double("probe.temperature");
  pc.top_p = get_double("probe.top_p");
  pc.max_tokens_per_sample = get_int("probe.max_tokens");
  pc.seed = static_cast<uint64_t>(get_int("decode.seed"));
  return pc;
}

}  // namespace guard
