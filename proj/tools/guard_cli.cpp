// guard-cli: entropy-guarded decoding runs and trajectory analysis over the
// libguard C API.
//
//   guard-cli run      --backend scripted --script model.gsm prompts.jsonl
//   guard-cli compare  --backend scripted --script model.gsm prompts.jsonl
//   guard-cli analyze  trajectories.jsonl --out reports/
//   guard-cli probe    trajectories.jsonl --script model.gsm --out reports/
//   guard-cli simulate --out corpus.jsonl
//
// Precedence: config file < --set key=value < dedicated flags. Secrets come
// from the environment (GUARD_API_KEY) only.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "guard/guard.h"

namespace {

struct ConfigDeleter {
  void operator()(guard_config* cfg) const { guard_config_free(cfg); }
};
struct BackendDeleter {
  void operator()(guard_backend* b) const { guard_backend_free(b); }
};
using ConfigPtr = std::unique_ptr<guard_config, ConfigDeleter>;
using BackendPtr = std::unique_ptr<guard_backend, BackendDeleter>;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string backend_kind;
  std::string script;
  std::string endpoint;
  std::string out = "out";
  std::string gold;
  std::string labels;
  long long seed = -1;
  int jobs = 1;
};

[[noreturn]] void die(const std::string& context) {
  std::fprintf(stderr, "guard-cli: %s: %s\n", context.c_str(), guard_last_error());
  std::exit(1);
}

ConfigPtr build_config(const CommonOpts& opts) {
  guard_config* raw = nullptr;
  guard_status st = opts.config_path.empty() ? guard_config_create(&raw)
                                             : guard_config_load(opts.config_path.c_str(), &raw);
  if (st != GUARD_OK) die("loading config");
  ConfigPtr cfg(raw);

  for (const std::string& kv : opts.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "guard-cli: --set expects key=value, got '%s'\n", kv.c_str());
      std::exit(1);
    }
    if (guard_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) !=
        GUARD_OK)
      die("applying --set " + kv);
  }
  // Dedicated flags override config and --set.
  if (!opts.backend_kind.empty() &&
      guard_config_set(cfg.get(), "backend.kind", opts.backend_kind.c_str()) != GUARD_OK)
    die("setting backend.kind");
  if (!opts.script.empty() &&
      guard_config_set(cfg.get(), "backend.script", opts.script.c_str()) != GUARD_OK)
    die("setting backend.script");
  if (!opts.endpoint.empty() &&
      guard_config_set(cfg.get(), "backend.endpoint", opts.endpoint.c_str()) != GUARD_OK)
    die("setting backend.endpoint");
  if (opts.seed >= 0 &&
      guard_config_set(cfg.get(), "decode.seed", std::to_string(opts.seed).c_str()) != GUARD_OK)
    die("setting decode.seed");
  return cfg;
}

BackendPtr open_backend(const guard_config* cfg) {
  char* kind_raw = nullptr;
  if (guard_config_get(cfg, "backend.kind", &kind_raw) != GUARD_OK) die("reading backend.kind");
  const std::string kind = kind_raw;
  guard_string_free(kind_raw);

  guard_backend* raw = nullptr;
  if (kind == "scripted") {
    char* script = nullptr;
    if (guard_config_get(cfg, "backend.script", &script) != GUARD_OK)
      die("reading backend.script");
    const std::string path = script;
    guard_string_free(script);
    if (path.empty()) {
      std::fprintf(stderr, "guard-cli: scripted backend needs --script FILE\n");
      std::exit(1);
    }
    if (guard_backend_open_scripted(path.c_str(), &raw) != GUARD_OK)
      die("loading scripted model");
  } else if (kind == "remote") {
    if (guard_backend_open_remote(cfg, &raw) != GUARD_OK) die("opening remote backend");
  } else {
    std::fprintf(stderr, "guard-cli: unknown backend kind '%s'\n", kind.c_str());
    std::exit(1);
  }
  return BackendPtr(raw);
}

void print_and_free(char* summary) {
  std::printf("%s\n", summary);
  guard_string_free(summary);
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_backend) {
  cmd->add_option("--config", opts.config_path, "Config file (flat key = value)");
  cmd->add_option("--set", opts.sets, "Override a config key: --set guard.q=0.85");
  cmd->add_option("--out", opts.out, "Output directory (or file for simulate)");
  cmd->add_option("--seed", opts.seed, "Decode seed (overrides decode.seed)");
  if (with_backend) {
    cmd->add_option("--backend", opts.backend_kind, "Backend kind: scripted | remote");
    cmd->add_option("--script", opts.script, "Scripted model file");
    cmd->add_option("--endpoint", opts.endpoint, "Remote completions endpoint URL");
    cmd->add_option("--jobs", opts.jobs, "Concurrent prompts")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy-guarded decoding control and trajectory analysis"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string prompts_path;
  std::string trajectories_path;
  std::string prompt_text;
  bool baseline = false;

  int votes = 0;

  CLI::App* run = app.add_subcommand("run", "Run prompts under the guard controller");
  add_common(run, opts, true);
  run->add_option("prompts", prompts_path, "Prompt file (JSONL or plain text)");
  run->add_option("--prompt", prompt_text, "Run a single inline prompt instead of a file");
  run->add_option("--gold", opts.gold, "Gold answers, one per line");
  run->add_flag("--baseline", baseline, "Disable interventions (greedy baseline)");
  run->add_option("--votes", votes,
                  "N-sample majority-vote baseline (needs decode.temperature > 0)")
      ->check(CLI::PositiveNumber);

  CLI::App* compare = app.add_subcommand("compare", "Paired guard/baseline runs, shared seeds");
  add_common(compare, opts, true);
  compare->add_option("prompts", prompts_path, "Prompt file")->required();
  compare->add_option("--gold", opts.gold, "Gold answers, one per line");

  CLI::App* analyze = app.add_subcommand("analyze", "Emit report CSVs from a trajectory log");
  add_common(analyze, opts, true);
  analyze->add_option("trajectories", trajectories_path, "Trajectory JSONL")->required();
  analyze->add_option("--labels", opts.labels, "Per-trajectory labels JSONL");

  CLI::App* probe = app.add_subcommand("probe", "Recoverability probing at failure onsets");
  add_common(probe, opts, true);
  probe->add_option("trajectories", trajectories_path, "Trajectory JSONL")->required();
  probe->add_option("--labels", opts.labels, "Per-trajectory labels JSONL");

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic labeled corpus");
  add_common(simulate, opts, false);

  CLI11_PARSE(app, argc, argv);

  ConfigPtr cfg = build_config(opts);

  if (run->parsed()) {
    if (prompts_path.empty() && prompt_text.empty()) {
      std::fprintf(stderr, "guard-cli run: provide a prompt file or --prompt TEXT\n");
      return 1;
    }
    BackendPtr backend = open_backend(cfg.get());
    const guard_mode mode = baseline ? GUARD_MODE_BASELINE : GUARD_MODE_GUARD;
    if (!prompt_text.empty()) {
      char* record = nullptr;
      if (guard_run_prompt(cfg.get(), backend.get(), prompt_text.c_str(), mode, &record) !=
          GUARD_OK)
        die("run");
      print_and_free(record);
      return 0;
    }
    char* summary = nullptr;
    if (votes > 0) {
      if (guard_cmd_vote(cfg.get(), backend.get(), prompts_path.c_str(),
                         opts.gold.empty() ? nullptr : opts.gold.c_str(), opts.out.c_str(),
                         votes, opts.jobs, &summary) != GUARD_OK)
        die("vote run");
      print_and_free(summary);
      return 0;
    }
    if (guard_cmd_run(cfg.get(), backend.get(), prompts_path.c_str(),
                      opts.gold.empty() ? nullptr : opts.gold.c_str(), opts.out.c_str(), mode,
                      opts.jobs, &summary) != GUARD_OK)
      die("run");
    print_and_free(summary);
    return 0;
  }

  if (compare->parsed()) {
    BackendPtr backend = open_backend(cfg.get());
    char* summary = nullptr;
    if (guard_cmd_compare(cfg.get(), backend.get(), prompts_path.c_str(),
                          opts.gold.empty() ? nullptr : opts.gold.c_str(), opts.out.c_str(),
                          opts.jobs, &summary) != GUARD_OK)
      die("compare");
    print_and_free(summary);
    return 0;
  }

  if (analyze->parsed()) {
    // A backend is optional here; it enables recoverability probing.
    BackendPtr backend;
    if (!opts.script.empty() || opts.backend_kind == "remote") backend = open_backend(cfg.get());
    char* summary = nullptr;
    if (guard_cmd_analyze(cfg.get(), trajectories_path.c_str(),
                          opts.labels.empty() ? nullptr : opts.labels.c_str(), backend.get(),
                          opts.out.c_str(), &summary) != GUARD_OK)
      die("analyze");
    print_and_free(summary);
    return 0;
  }

  if (probe->parsed()) {
    BackendPtr backend = open_backend(cfg.get());
    char* summary = nullptr;
    if (guard_cmd_probe(cfg.get(), backend.get(), trajectories_path.c_str(),
                        opts.labels.empty() ? nullptr : opts.labels.c_str(), opts.out.c_str(),
                        &summary) != GUARD_OK)
      die("probe");
    print_and_free(summary);
    return 0;
  }

  if (simulate->parsed()) {
    char* summary = nullptr;
    if (guard_cmd_simulate(cfg.get(), opts.out.c_str(), &summary) != GUARD_OK) die("simulate");
    print_and_free(summary);
    return 0;
  }
  return 1;
}
