#include "guard/guard.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "guard/commands.hpp"
#include "guard/errors.hpp"
#include "guard/remote_client.hpp"
#include "guard/scripted_model.hpp"

using namespace guard;

struct guard_config {
  Config cfg = Config::defaults();
};

struct guard_backend {
  std::shared_ptr<Backend> backend;
  std::string kind;
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps C++ exceptions onto status codes and records the message.
template <typename Fn>
guard_status wrap(Fn&& fn) {
  try {
    t_last_error.clear();
    return fn();
  } catch (const ParseError& e) {
    t_last_error = e.what();
    return GUARD_ERR_PARSE;
  } catch (const ValidationError& e) {
    t_last_error = e.what();
    return GUARD_ERR_VALIDATION;
  } catch (const TransportError& e) {
    t_last_error = e.what();
    return GUARD_ERR_TRANSPORT;
  } catch (const AlignmentError& e) {
    t_last_error = e.what();
    return GUARD_ERR_VALIDATION;
  } catch (const DomainError& e) {
    t_last_error = e.what();
    return GUARD_ERR_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    t_last_error = e.what();
    return GUARD_ERR_IO;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GUARD_ERR_INTERNAL;
  }
}

guard_status require(bool ok, const char* msg) {
  if (ok) return GUARD_OK;
  t_last_error = msg;
  return GUARD_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* guard_version(void) { return "0.1.0"; }

const char* guard_last_error(void) { return t_last_error.c_str(); }

void guard_string_free(char* s) { std::free(s); }

guard_status guard_config_create(guard_config** out) {
  if (require(out != nullptr, "out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = new guard_config();
    return GUARD_OK;
  });
}

guard_status guard_config_load(const char* path, guard_config** out) {
  if (require(path && out, "path/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto cfg = std::make_unique<guard_config>();
    cfg->cfg = Config::load_file(path);
    *out = cfg.release();
    return GUARD_OK;
  });
}

guard_status guard_config_set(guard_config* cfg, const char* key, const char* value) {
  if (require(cfg && key && value, "cfg/key/value is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    cfg->cfg.set(key, value);
    return GUARD_OK;
  });
}

guard_status guard_config_get(const guard_config* cfg, const char* key, char** out) {
  if (require(cfg && key && out, "cfg/key/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = dup_string(cfg->cfg.get(key));
    return GUARD_OK;
  });
}

guard_status guard_config_serialize(const guard_config* cfg, char** out) {
  if (require(cfg && out, "cfg/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = dup_string(cfg->cfg.serialize());
    return GUARD_OK;
  });
}

guard_status guard_config_manifest_hash(const guard_config* cfg, char** out) {
  if (require(cfg && out, "cfg/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = dup_string(cfg->cfg.manifest_hash());
    return GUARD_OK;
  });
}

void guard_config_free(guard_config* cfg) { delete cfg; }

guard_status guard_backend_open_scripted(const char* script_path, guard_backend** out) {
  if (require(script_path && out, "script_path/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto b = std::make_unique<guard_backend>();
    b->backend = ScriptedBackend::load_file(script_path);
    b->kind = "scripted";
    *out = b.release();
    return GUARD_OK;
  });
}

guard_status guard_backend_open_scripted_text(const char* script_text, guard_backend** out) {
  if (require(script_text && out, "script_text/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto b = std::make_unique<guard_backend>();
    b->backend = ScriptedBackend::parse(script_text);
    b->kind = "scripted";
    *out = b.release();
    return GUARD_OK;
  });
}

guard_status guard_backend_open_remote(const guard_config* cfg, guard_backend** out) {
  if (require(cfg && out, "cfg/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto b = std::make_unique<guard_backend>();
    b->backend = std::make_shared<RemoteBackend>(cfg->cfg.to_remote_config());
    b->kind = "remote";
    *out = b.release();
    return GUARD_OK;
  });
}

guard_status guard_backend_describe(const guard_backend* backend, char** out) {
  if (require(backend && out, "backend/out is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const BackendCapabilities caps = backend->backend->capabilities();
    std::string json = "{\"kind\":\"" + backend->kind + "\"";
    json += ",\"has_full_distribution\":" + std::string(caps.has_full_distribution ? "true"
                                                                                   : "false");
    json += ",\"max_topk\":" + std::to_string(caps.max_topk);
    json += ",\"supports_prefix_reuse\":" + std::string(caps.supports_prefix_reuse ? "true"
                                                                                   : "false");
    json += ",\"supports_batched_spans\":" + std::string(caps.supports_batched_spans ? "true"
                                                                                     : "false");
    json += "}";
    *out = dup_string(json);
    return GUARD_OK;
  });
}

void guard_backend_free(guard_backend* backend) { delete backend; }

guard_status guard_run_prompt(const guard_config* cfg, guard_backend* backend,
                              const char* prompt, guard_mode mode, char** record_json_out) {
  if (require(cfg && backend && prompt && record_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const GuardConfig gc = cfg->cfg.to_guard_config();
    TrajectoryRecord rec = mode == GUARD_MODE_GUARD
                               ? run_guard(prompt, gc, *backend->backend)
                               : run_baseline(prompt, gc, *backend->backend);
    rec.manifest_hash = cfg->cfg.manifest_hash();
    *record_json_out = dup_string(record_to_json(rec));
    return GUARD_OK;
  });
}

guard_status guard_replay_check(const guard_config* cfg, const char* record_json,
                                char** diagnostic_out) {
  if (require(cfg && record_json, "cfg/record_json is NULL")) return GUARD_ERR_INVALID_ARGUMENT;
  if (diagnostic_out) *diagnostic_out = nullptr;
  return wrap([&]() -> guard_status {
    const TrajectoryRecord rec = record_from_json(record_json);
    std::string diag;
    if (replay_check(rec, cfg->cfg.to_guard_config(), &diag)) return GUARD_OK;
    t_last_error = diag;
    if (diagnostic_out) *diagnostic_out = dup_string(diag);
    return GUARD_ERR_VALIDATION;
  });
}

guard_status guard_cmd_run(const guard_config* cfg, guard_backend* backend,
                           const char* prompts_path, const char* gold_path, const char* out_dir,
                           guard_mode mode, int jobs, char** summary_json_out) {
  if (require(cfg && backend && prompts_path && out_dir && summary_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    std::vector<PromptEntry> prompts = read_prompt_file(prompts_path);
    if (gold_path) apply_gold_file(prompts, gold_path);
    const RunSummary summary =
        cmd_run(cfg->cfg, *backend->backend, prompts, out_dir,
                mode == GUARD_MODE_GUARD ? RunMode::Guard : RunMode::Baseline,
                jobs < 1 ? 1 : jobs, prompts_path);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

guard_status guard_cmd_compare(const guard_config* cfg, guard_backend* backend,
                               const char* prompts_path, const char* gold_path,
                               const char* out_dir, int jobs, char** summary_json_out) {
  if (require(cfg && backend && prompts_path && out_dir && summary_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    std::vector<PromptEntry> prompts = read_prompt_file(prompts_path);
    if (gold_path) apply_gold_file(prompts, gold_path);
    const CompareSummary summary = cmd_compare(cfg->cfg, *backend->backend, prompts, out_dir,
                                               jobs < 1 ? 1 : jobs, prompts_path);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

guard_status guard_cmd_vote(const guard_config* cfg, guard_backend* backend,
                            const char* prompts_path, const char* gold_path,
                            const char* out_dir, int votes, int jobs,
                            char** summary_json_out) {
  if (require(cfg && backend && prompts_path && out_dir && summary_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    std::vector<PromptEntry> prompts = read_prompt_file(prompts_path);
    if (gold_path) apply_gold_file(prompts, gold_path);
    const VoteSummary summary = cmd_vote(cfg->cfg, *backend->backend, prompts, out_dir, votes,
                                         jobs < 1 ? 1 : jobs, prompts_path);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

guard_status guard_cmd_analyze(const guard_config* cfg, const char* trajectories_path,
                               const char* labels_path, guard_backend* probe_backend,
                               const char* out_dir, char** summary_json_out) {
  if (require(cfg && trajectories_path && out_dir && summary_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const AnalyzeSummary summary =
        cmd_analyze(cfg->cfg, trajectories_path, labels_path ? labels_path : "",
                    probe_backend ? probe_backend->backend.get() : nullptr, out_dir);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

guard_status guard_cmd_probe(const guard_config* cfg, guard_backend* backend,
                             const char* trajectories_path, const char* labels_path,
                             const char* out_dir, char** summary_json_out) {
  if (require(cfg && backend && trajectories_path && out_dir && summary_json_out,
              "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const AnalyzeSummary summary =
        cmd_probe(cfg->cfg, *backend->backend, trajectories_path,
                  labels_path ? labels_path : "", out_dir);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

guard_status guard_cmd_simulate(const guard_config* cfg, const char* out_path,
                                char** summary_json_out) {
  if (require(cfg && out_path && summary_json_out, "argument is NULL"))
    return GUARD_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const SimulateSummary summary = cmd_simulate(cfg->cfg, out_path);
    *summary_json_out = dup_string(to_json_string(summary));
    return GUARD_OK;
  });
}

}  // extern "C"
