#ifndef MINEDISPATCH_H
#define MINEDISPATCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MD_API __declspec(dllexport)
#else
#define MD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum md_status {
  MD_OK = 0,
  MD_ERR_PARSE = 1,
  MD_ERR_VALIDATION = 2,
  MD_ERR_IO = 3,
  MD_ERR_ILLEGAL_ACTION = 4,
  MD_ERR_EPISODE_OVER = 5,
  MD_ERR_EPISODE_NOT_FINISHED = 6,
  MD_ERR_SHAPE_MISMATCH = 7,
  MD_ERR_INVALID_ARGUMENT = 8,
  MD_ERR_INTERNAL = 9
} md_status;

/* Message of the last failed call on this thread ("" if none). */
MD_API const char* md_last_error(void);
MD_API const char* md_status_name(md_status status);

typedef struct md_scenario md_scenario;
typedef struct md_sim md_sim;
typedef struct md_policy md_policy;
typedef struct md_agent md_agent;

/* ---- scenarios ---------------------------------------------------------- */

typedef struct md_scenario_info {
  int num_load_sites;
  int num_dump_sites;
  int num_trucks;
  int num_shovels;
  int obs_dim;
  int action_width;
  double episode_minutes;
  uint64_t seed;
} md_scenario_info;

MD_API md_status md_scenario_default(md_scenario** out);
MD_API md_status md_scenario_reduced(int m, int n, int k, double minutes, md_scenario** out);
MD_API md_status md_scenario_load(const char* path, md_scenario** out);
MD_API md_status md_scenario_parse(const char* json_text, md_scenario** out);
MD_API md_status md_scenario_save(const md_scenario* scenario, const char* path);
/* Copy of `scenario` with `k` trucks cycling through its truck specs. */
MD_API md_status md_scenario_resize_fleet(const md_scenario* scenario, int k, md_scenario** out);
MD_API md_status md_scenario_info_get(const md_scenario* scenario, md_scenario_info* info);
MD_API void md_scenario_free(md_scenario* scenario);

/* ---- simulator ---------------------------------------------------------- */

typedef enum md_event_type { MD_EVENT_INIT = 0, MD_EVENT_HAUL = 1, MD_EVENT_LOAD = 2 } md_event_type;

typedef struct md_request {
  int truck_index;
  md_event_type event_type;
  double clock;
  double time_delta;
  int num_targets;
} md_request;

typedef struct md_step_info {
  double delta_tons;
  double wait_duration;
  double service_duration;
  double jam_duration;
  double move_duration;
  int episode_done;
  double final_tons;
} md_step_info;

typedef struct md_metrics {
  double produced_tons;
  double match_factor;
  double total_wait_time;
  double jam_ratio;
  int64_t trips_completed;
} md_metrics;

MD_API md_status md_sim_create(const md_scenario* scenario, uint64_t seed, md_sim** out);
MD_API md_status md_sim_reset(md_sim* sim, uint64_t seed);
MD_API int md_sim_done(const md_sim* sim);
/* MD_ERR_EPISODE_OVER once the episode has ended. */
MD_API md_status md_sim_request(const md_sim* sim, md_request* out);
MD_API md_status md_sim_step(md_sim* sim, int action, md_step_info* info);
/* `buf` must hold obs_dim doubles / action_width bytes. */
MD_API md_status md_sim_observation(const md_sim* sim, double* buf, size_t len);
MD_API md_status md_sim_mask(const md_sim* sim, uint8_t* buf, size_t len);
MD_API md_status md_sim_metrics(const md_sim* sim, md_metrics* out);
MD_API double md_sim_produced_tons(const md_sim* sim);
/* Event tracing: enable before stepping, then write the CSV trace. */
MD_API md_status md_sim_enable_trace(md_sim* sim, int on);
MD_API md_status md_sim_write_trace(const md_sim* sim, const char* path);
MD_API void md_sim_free(md_sim* sim);

/* ---- dispatchers -------------------------------------------------------- */

typedef enum md_dispatcher {
  MD_DISPATCH_NAIVE = 0,
  MD_DISPATCH_RANDOM = 1,
  MD_DISPATCH_NEAREST = 2,
  MD_DISPATCH_SHORTEST_TRIP = 3,
  MD_DISPATCH_SHORTEST_QUEUE = 4,
  MD_DISPATCH_SPTF = 5,
  MD_DISPATCH_FIXED_GROUP = 6
} md_dispatcher;

#define MD_NUM_DISPATCHERS 7

MD_API md_status md_dispatcher_from_name(const char* name, md_dispatcher* out);
MD_API const char* md_dispatcher_name(md_dispatcher kind);
/* A dispatcher instance with its own random stream, derived from the episode
   seed exactly as md_run_episode does. */
MD_API md_status md_agent_create(md_dispatcher kind, uint64_t episode_seed, md_agent** out);
MD_API md_status md_agent_decide(md_agent* agent, const md_sim* sim, int* action);
MD_API void md_agent_free(md_agent* agent);
MD_API md_status md_run_episode(const md_scenario* scenario, md_dispatcher kind, uint64_t seed,
                                md_metrics* out);

/* ---- training ----------------------------------------------------------- */

typedef enum md_reward_mode { MD_REWARD_SPARSE = 0, MD_REWARD_DENSE = 1 } md_reward_mode;
typedef enum md_gae_mode { MD_GAE_RECURSIVE = 0, MD_GAE_LITERAL = 1 } md_gae_mode;

typedef struct md_train_config {
  double gamma;
  double lambda;
  double clip_eps;
  int epochs;
  int minibatch_size;
  double value_coef;
  double entropy_coef;
  double learning_rate;
  int rollout_length;
  double alpha;
  int has_base_tons;
  double base_tons;
  int normalize_advantages;
  double max_grad_norm;
  int hidden;
  md_gae_mode gae_mode;
  int eval_every;
} md_train_config;

typedef struct md_train_request {
  md_train_config config;
  md_reward_mode reward;
  int guided;
  int64_t total_steps;
  uint64_t seed;
  int workers;
  const char* out_dir; /* writes metrics.csv, eval.csv, checkpoint.json, best.json */
  int resume;
} md_train_request;

typedef struct md_train_summary {
  int64_t steps;
  int64_t updates;
  int64_t episodes;
  double base_tons;
  double best_eval_tons;
  double final_eval_tons;
  int interrupted;
} md_train_summary;

MD_API void md_train_config_default(md_train_config* out);
MD_API md_status md_train(const md_scenario* scenario, const md_train_request* request,
                          md_train_summary* out);
/* Asks a running md_train to stop after the current update; safe from a signal handler. */
MD_API void md_request_stop(void);
MD_API void md_clear_stop(void);

/* ---- policies ----------------------------------------------------------- */

/* Accepts a checkpoint.json or a bare policy file (best.json). */
MD_API md_status md_policy_load(const char* path, md_policy** out);
MD_API md_status md_policy_check(const md_policy* policy, const md_scenario* scenario);
MD_API md_status md_policy_act(const md_policy* policy, const md_sim* sim, int* action);
/* Greedy episodes; fills out[i] for seeds[i]. */
MD_API md_status md_evaluate(const md_policy* policy, const md_scenario* scenario,
                             const uint64_t* seeds, size_t count, md_metrics* out);
MD_API void md_policy_free(md_policy* policy);

#ifdef __cplusplus
}
#endif

#endif /* MINEDISPATCH_H */
