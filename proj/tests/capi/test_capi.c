/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "minedispatch/minedispatch.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void test_scenarios(const char* tmp) {
  md_scenario* sc = NULL;
  md_scenario_info info;
  EXPECT(md_scenario_default(&sc) == MD_OK);
  EXPECT(md_scenario_info_get(sc, &info) == MD_OK);
  EXPECT(info.num_load_sites == 5 && info.num_dump_sites == 5);
  EXPECT(info.num_trucks == 71);
  EXPECT(info.obs_dim == 69);
  EXPECT(info.action_width == 5);

  char path[512];
  snprintf(path, sizeof path, "%s/capi_scenario.json", tmp);
  EXPECT(md_scenario_save(sc, path) == MD_OK);
  md_scenario* back = NULL;
  EXPECT(md_scenario_load(path, &back) == MD_OK);
  md_scenario_info info2;
  md_scenario_info_get(back, &info2);
  EXPECT(info2.num_trucks == 71);
  md_scenario_free(back);

  md_scenario* big = NULL;
  EXPECT(md_scenario_resize_fleet(sc, 90, &big) == MD_OK);
  md_scenario_info_get(big, &info2);
  EXPECT(info2.num_trucks == 90);
  md_scenario_free(big);
  md_scenario_free(sc);

  md_scenario* bad = NULL;
  EXPECT(md_scenario_parse("{ not json", &bad) == MD_ERR_PARSE);
  EXPECT(bad == NULL);
  EXPECT(strlen(md_last_error()) > 0);
  EXPECT(md_scenario_reduced(0, 1, 1, 10.0, &bad) == MD_ERR_VALIDATION);
  EXPECT(md_scenario_load("/nonexistent/scenario.json", &bad) == MD_ERR_IO);
  EXPECT(md_scenario_default(NULL) == MD_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(md_status_name(MD_ERR_SHAPE_MISMATCH), "") != 0);
}

static void test_simulation(void) {
  md_scenario* sc = NULL;
  md_scenario_reduced(2, 3, 4, 60.0, &sc);
  md_sim* sim = NULL;
  EXPECT(md_sim_create(sc, 5, &sim) == MD_OK);
  md_request req;
  EXPECT(md_sim_request(sim, &req) == MD_OK);
  EXPECT(req.event_type == MD_EVENT_INIT);
  EXPECT(req.num_targets == 2);

  md_metrics m;
  EXPECT(md_sim_metrics(sim, &m) == MD_ERR_EPISODE_NOT_FINISHED);
  EXPECT(md_sim_step(sim, 7, NULL) == MD_ERR_ILLEGAL_ACTION);

  double obs[64];
  uint8_t mask[3];
  EXPECT(md_sim_observation(sim, obs, 2) == MD_ERR_SHAPE_MISMATCH);
  EXPECT(md_sim_mask(sim, mask, 3) == MD_OK);
  EXPECT(mask[0] == 1 && mask[1] == 1 && mask[2] == 0);

  md_agent* agent = NULL;
  EXPECT(md_agent_create(MD_DISPATCH_SPTF, 5, &agent) == MD_OK);
  double sum = 0.0;
  md_step_info info;
  while (!md_sim_done(sim)) {
    int a = -1;
    EXPECT(md_agent_decide(agent, sim, &a) == MD_OK);
    EXPECT(md_sim_step(sim, a, &info) == MD_OK);
    sum += info.delta_tons;
  }
  EXPECT(info.episode_done);
  EXPECT(md_sim_step(sim, 0, &info) == MD_ERR_EPISODE_OVER);
  EXPECT(md_sim_metrics(sim, &m) == MD_OK);
  EXPECT(fabs(sum - m.produced_tons) < 1e-9);
  EXPECT(md_sim_produced_tons(sim) == m.produced_tons);

  md_metrics direct;
  EXPECT(md_run_episode(sc, MD_DISPATCH_SPTF, 5, &direct) == MD_OK);
  EXPECT(direct.produced_tons == m.produced_tons);
  EXPECT(direct.trips_completed == m.trips_completed);

  md_dispatcher kind;
  EXPECT(md_dispatcher_from_name("shortest_queue", &kind) == MD_OK);
  EXPECT(kind == MD_DISPATCH_SHORTEST_QUEUE);
  EXPECT(strcmp(md_dispatcher_name(kind), "shortest_queue") == 0);
  EXPECT(md_dispatcher_from_name("ppo", &kind) == MD_ERR_INVALID_ARGUMENT);

  md_agent_free(agent);
  md_sim_free(sim);
  md_scenario_free(sc);
}

static void test_training(const char* tmp) {
  md_scenario* sc = NULL;
  md_scenario_reduced(2, 2, 4, 30.0, &sc);
  char dir[512], ckpt[600];
  snprintf(dir, sizeof dir, "%s/capi_train", tmp);
  snprintf(ckpt, sizeof ckpt, "%s/checkpoint.json", dir);

  md_train_request req;
  memset(&req, 0, sizeof req);
  md_train_config_default(&req.config);
  EXPECT(req.config.gamma == 0.99 && req.config.rollout_length == 2048);
  req.config.rollout_length = 64;
  req.config.minibatch_size = 32;
  req.config.hidden = 16;
  req.config.eval_every = 1;
  req.reward = MD_REWARD_DENSE;
  req.guided = 1;
  req.total_steps = 128;
  req.seed = 2;
  req.workers = 1;
  req.out_dir = dir;
  md_train_summary s;
  EXPECT(md_train(sc, &req, &s) == MD_OK);
  EXPECT(s.steps == 128 && s.updates == 2);
  EXPECT(s.best_eval_tons >= s.final_eval_tons);

  req.config.gamma = 2.0;
  EXPECT(md_train(sc, &req, &s) == MD_ERR_VALIDATION);

  md_policy* pol = NULL;
  EXPECT(md_policy_load(ckpt, &pol) == MD_OK);
  EXPECT(md_policy_check(pol, sc) == MD_OK);
  uint64_t seeds[2] = {1000, 1001};
  md_metrics out[2], again[2];
  EXPECT(md_evaluate(pol, sc, seeds, 2, out) == MD_OK);
  EXPECT(md_evaluate(pol, sc, seeds, 2, again) == MD_OK);
  EXPECT(memcmp(out, again, sizeof out) == 0);

  md_scenario* other = NULL;
  md_scenario_reduced(3, 2, 4, 30.0, &other);
  EXPECT(md_policy_check(pol, other) == MD_ERR_SHAPE_MISMATCH);
  EXPECT(md_evaluate(pol, other, seeds, 2, out) == MD_ERR_SHAPE_MISMATCH);
  md_scenario_free(other);
  md_policy_free(pol);

  EXPECT(md_policy_load("/nonexistent/checkpoint.json", &pol) == MD_ERR_IO);
  md_scenario_free(sc);
}

int main(int argc, char** argv) {
  const char* tmp = argc > 1 ? argv[1] : ".";
  test_scenarios(tmp);
  test_simulation();
  test_training(tmp);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
