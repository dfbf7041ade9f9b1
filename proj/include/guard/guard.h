/*
 * C API for the guard decoding-control engine and trajectory-analysis
 * toolkit. All state lives behind opaque handles; every fallible call
 * returns a guard_status and leaves a human-readable message retrievable
 * via guard_last_error() (thread local).
 *
 * Strings returned through char** out-parameters are heap-allocated and
 * must be released with guard_string_free().
 */

#ifndef GUARD_GUARD_H
#define GUARD_GUARD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum guard_status {
  GUARD_OK = 0,
  GUARD_ERR_INVALID_ARGUMENT = 1, /* bad values, violated preconditions */
  GUARD_ERR_PARSE = 2,            /* malformed files or responses */
  GUARD_ERR_VALIDATION = 3,       /* well-formed input violating invariants */
  GUARD_ERR_TRANSPORT = 4,        /* backend unreachable after retries */
  GUARD_ERR_IO = 5,               /* filesystem failures */
  GUARD_ERR_INTERNAL = 6
} guard_status;

typedef enum guard_mode {
  GUARD_MODE_GUARD = 0,   /* full control loop */
  GUARD_MODE_BASELINE = 1 /* branching and termination control disabled */
} guard_mode;

typedef struct guard_config guard_config;
typedef struct guard_backend guard_backend;

const char* guard_version(void);
/* Message for the most recent failing call on this thread ("" if none). */
const char* guard_last_error(void);
void guard_string_free(char* s);

/* ---- configuration ----------------------------------------------------- */

guard_status guard_config_create(guard_config** out);
guard_status guard_config_load(const char* path, guard_config** out);
guard_status guard_config_set(guard_config* cfg, const char* key, const char* value);
/* Returns a copy of the value; release with guard_string_free. */
guard_status guard_config_get(const guard_config* cfg, const char* key, char** out);
guard_status guard_config_serialize(const guard_config* cfg, char** out);
guard_status guard_config_manifest_hash(const guard_config* cfg, char** out);
void guard_config_free(guard_config* cfg);

/* ---- backends ----------------------------------------------------------- */

guard_status guard_backend_open_scripted(const char* script_path, guard_backend** out);
guard_status guard_backend_open_scripted_text(const char* script_text, guard_backend** out);
/* Remote settings (endpoint, model, logprobs k, limits) come from backend.*
 * config keys; GUARD_API_KEY overrides the configured key. */
guard_status guard_backend_open_remote(const guard_config* cfg, guard_backend** out);
/* Capabilities as a JSON object string. */
guard_status guard_backend_describe(const guard_backend* backend, char** out);
void guard_backend_free(guard_backend* backend);

/* ---- single trajectories ------------------------------------------------ */

/* Runs one prompt; the trajectory record is returned as one JSONL line. */
guard_status guard_run_prompt(const guard_config* cfg, guard_backend* backend,
                              const char* prompt, guard_mode mode, char** record_json_out);

/* Replays a record's logged decisions. GUARD_OK with *diagnostic_out == NULL
 * when consistent; GUARD_ERR_VALIDATION with a diagnostic otherwise. */
guard_status guard_replay_check(const guard_config* cfg, const char* record_json,
                                char** diagnostic_out);

/* ---- batch commands (the CLI surface) ----------------------------------- */

/* Each writes its outputs under out_dir (or out_path) and returns a JSON
 * summary string. gold_path and labels_path may be NULL. */
guard_status guard_cmd_run(const guard_config* cfg, guard_backend* backend,
                           const char* prompts_path, const char* gold_path, const char* out_dir,
                           guard_mode mode, int jobs, char** summary_json_out);
guard_status guard_cmd_compare(const guard_config* cfg, guard_backend* backend,
                               const char* prompts_path, const char* gold_path,
                               const char* out_dir, int jobs, char** summary_json_out);
/* Self-consistency baseline: `votes` stochastic samples per prompt with
 * majority voting over extracted answers (set decode.temperature > 0). */
guard_status guard_cmd_vote(const guard_config* cfg, guard_backend* backend,
                            const char* prompts_path, const char* gold_path,
                            const char* out_dir, int votes, int jobs,
                            char** summary_json_out);
/* probe_backend may be NULL: recoverability.csv is then header-only. */
guard_status guard_cmd_analyze(const guard_config* cfg, const char* trajectories_path,
                               const char* labels_path, guard_backend* probe_backend,
                               const char* out_dir, char** summary_json_out);
guard_status guard_cmd_probe(const guard_config* cfg, guard_backend* backend,
                             const char* trajectories_path, const char* labels_path,
                             const char* out_dir, char** summary_json_out);
guard_status guard_cmd_simulate(const guard_config* cfg, const char* out_path,
                                char** summary_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GUARD_GUARD_H */
