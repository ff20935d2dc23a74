#include "minedispatch/minedispatch.h"

#include <atomic>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "minedispatch/dispatchers.hpp"
#include "minedispatch/errors.hpp"
#include "minedispatch/observation.hpp"
#include "minedispatch/scenario.hpp"
#include "minedispatch/sim.hpp"
#include "minedispatch/trainer.hpp"

namespace md = minedispatch;

struct md_scenario {
  md::ScenarioConfig config;
};

struct md_sim {
  std::unique_ptr<md::Simulator> sim;
};

struct md_agent {
  md::Dispatcher dispatcher;
};

struct md_policy {
  md::PolicyParams params;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop{false};

md_status fail(md_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs `fn`, mapping library exceptions onto status codes.
template <typename Fn>
md_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return MD_OK;
  } catch (const md::ParseError& e) {
    return fail(MD_ERR_PARSE, e.what());
  } catch (const md::ValidationError& e) {
    return fail(MD_ERR_VALIDATION, e.what());
  } catch (const md::IoError& e) {
    return fail(MD_ERR_IO, e.what());
  } catch (const md::IllegalAction& e) {
    return fail(MD_ERR_ILLEGAL_ACTION, e.what());
  } catch (const md::EpisodeOver& e) {
    return fail(MD_ERR_EPISODE_OVER, e.what());
  } catch (const md::EpisodeNotFinished& e) {
    return fail(MD_ERR_EPISODE_NOT_FINISHED, e.what());
  } catch (const md::ShapeMismatch& e) {
    return fail(MD_ERR_SHAPE_MISMATCH, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MD_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MD_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " is null");
}

md_metrics to_c(const md::EpisodeMetrics& m) {
  return {m.produced_tons, m.match_factor, m.total_wait_time, m.jam_ratio, m.trips_completed};
}

md::DispatcherKind to_kind(md_dispatcher d) {
  if (d < 0 || d >= MD_NUM_DISPATCHERS) throw std::invalid_argument("unknown dispatcher");
  return md::kAllDispatchers[static_cast<std::size_t>(d)];
}

}  // namespace

extern "C" {

const char* md_last_error(void) { return g_last_error.c_str(); }

const char* md_status_name(md_status s) {
  switch (s) {
    case MD_OK: return "ok";
    case MD_ERR_PARSE: return "parse error";
    case MD_ERR_VALIDATION: return "validation error";
    case MD_ERR_IO: return "io error";
    case MD_ERR_ILLEGAL_ACTION: return "illegal action";
    case MD_ERR_EPISODE_OVER: return "episode over";
    case MD_ERR_EPISODE_NOT_FINISHED: return "episode not finished";
    case MD_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case MD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- scenarios -------------------------------------------------------------

md_status md_scenario_default(md_scenario** out) {
  return guarded([&] {
    require(out, "out");
    *out = new md_scenario{md::default_scenario()};
  });
}

md_status md_scenario_reduced(int m, int n, int k, double minutes, md_scenario** out) {
  return guarded([&] {
    require(out, "out");
    *out = new md_scenario{md::reduced_scenario(m, n, k, minutes)};
  });
}

md_status md_scenario_load(const char* path, md_scenario** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new md_scenario{md::load_scenario(path)};
  });
}

md_status md_scenario_parse(const char* text, md_scenario** out) {
  return guarded([&] {
    require(text, "json_text");
    require(out, "out");
    *out = new md_scenario{md::parse_scenario(text)};
  });
}

md_status md_scenario_save(const md_scenario* s, const char* path) {
  return guarded([&] {
    require(s, "scenario");
    require(path, "path");
    md::save_scenario(s->config, path);
  });
}

md_status md_scenario_resize_fleet(const md_scenario* s, int k, md_scenario** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    *out = new md_scenario{md::resize_fleet(s->config, k)};
  });
}

md_status md_scenario_info_get(const md_scenario* s, md_scenario_info* info) {
  return guarded([&] {
    require(s, "scenario");
    require(info, "info");
    const auto& c = s->config;
    info->num_load_sites = c.num_load_sites;
    info->num_dump_sites = c.num_dump_sites;
    info->num_trucks = c.num_trucks();
    info->num_shovels = c.num_shovels();
    info->obs_dim = md::obs_dim(c.num_load_sites, c.num_dump_sites);
    info->action_width = c.action_width();
    info->episode_minutes = c.episode_minutes;
    info->seed = c.seed;
  });
}

void md_scenario_free(md_scenario* s) { delete s; }

// ---- simulator -------------------------------------------------------------

md_status md_sim_create(const md_scenario* s, uint64_t seed, md_sim** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    md::validate(s->config);
    *out = new md_sim{std::make_unique<md::Simulator>(s->config, seed)};
  });
}

md_status md_sim_reset(md_sim* sim, uint64_t seed) {
  return guarded([&] {
    require(sim, "sim");
    sim->sim->reset(seed);
  });
}

int md_sim_done(const md_sim* sim) { return sim && sim->sim->done() ? 1 : 0; }

md_status md_sim_request(const md_sim* sim, md_request* out) {
  return guarded([&] {
    require(sim, "sim");
    require(out, "out");
    const auto& r = sim->sim->pending();
    out->truck_index = r.truck_index;
    out->event_type = static_cast<md_event_type>(r.event_type);
    out->clock = r.clock;
    out->time_delta = r.time_delta;
    out->num_targets = sim->sim->num_targets();
  });
}

md_status md_sim_step(md_sim* sim, int action, md_step_info* info) {
  return guarded([&] {
    require(sim, "sim");
    const md::StepResult r = sim->sim->step(action);
    if (info) {
      info->delta_tons = r.info.delta_tons;
      info->wait_duration = r.info.wait_duration;
      info->service_duration = r.info.service_duration;
      info->jam_duration = r.info.jam_duration;
      info->move_duration = r.info.move_duration;
      info->episode_done = r.info.episode_done ? 1 : 0;
      info->final_tons = r.info.final_tons;
    }
  });
}

md_status md_sim_observation(const md_sim* sim, double* buf, size_t len) {
  return guarded([&] {
    require(sim, "sim");
    require(buf, "buf");
    const md::Observation obs = md::encode(*sim->sim);
    if (len != obs.size())
      throw md::ShapeMismatch("observation buffer holds " + std::to_string(len) + ", need " +
                              std::to_string(obs.size()));
    std::copy(obs.begin(), obs.end(), buf);
  });
}

md_status md_sim_mask(const md_sim* sim, uint8_t* buf, size_t len) {
  return guarded([&] {
    require(sim, "sim");
    require(buf, "buf");
    const md::ActionMask m = md::mask(*sim->sim);
    if (len != m.size())
      throw md::ShapeMismatch("mask buffer holds " + std::to_string(len) + ", need " +
                              std::to_string(m.size()));
    std::copy(m.begin(), m.end(), buf);
  });
}

md_status md_sim_metrics(const md_sim* sim, md_metrics* out) {
  return guarded([&] {
    require(sim, "sim");
    require(out, "out");
    *out = to_c(sim->sim->metrics());
  });
}

double md_sim_produced_tons(const md_sim* sim) { return sim ? sim->sim->produced_tons() : 0.0; }

md_status md_sim_enable_trace(md_sim* sim, int on) {
  return guarded([&] {
    require(sim, "sim");
    sim->sim->enable_trace(on != 0);
  });
}

md_status md_sim_write_trace(const md_sim* sim, const char* path) {
  return guarded([&] {
    require(sim, "sim");
    require(path, "path");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw md::IoError(std::string("cannot write ") + path);
    out << md::trace_csv(sim->sim->trace());
    if (!out) throw md::IoError(std::string("cannot write ") + path);
  });
}

void md_sim_free(md_sim* sim) { delete sim; }

// ---- dispatchers -----------------------------------------------------------

md_status md_dispatcher_from_name(const char* name, md_dispatcher* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    const auto kind = md::dispatcher_from_name(name);
    if (!kind)
      throw std::invalid_argument(std::string("unknown dispatcher '") + name + "' (expected " +
                                  md::dispatcher_name_list() + ")");
    for (int i = 0; i < MD_NUM_DISPATCHERS; ++i)
      if (md::kAllDispatchers[static_cast<std::size_t>(i)] == *kind)
        *out = static_cast<md_dispatcher>(i);
  });
}

const char* md_dispatcher_name(md_dispatcher kind) {
  if (kind < 0 || kind >= MD_NUM_DISPATCHERS) return "";
  return md::dispatcher_name(md::kAllDispatchers[static_cast<std::size_t>(kind)]);
}

md_status md_agent_create(md_dispatcher kind, uint64_t episode_seed, md_agent** out) {
  return guarded([&] {
    require(out, "out");
    *out = new md_agent{md::Dispatcher(to_kind(kind), md::dispatcher_seed(episode_seed))};
  });
}

md_status md_agent_decide(md_agent* agent, const md_sim* sim, int* action) {
  return guarded([&] {
    require(agent, "agent");
    require(sim, "sim");
    require(action, "action");
    *action = agent->dispatcher(*sim->sim);
  });
}

void md_agent_free(md_agent* agent) { delete agent; }

md_status md_run_episode(const md_scenario* s, md_dispatcher kind, uint64_t seed,
                         md_metrics* out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    *out = to_c(md::run_episode(s->config, to_kind(kind), seed));
  });
}

// ---- training --------------------------------------------------------------

void md_train_config_default(md_train_config* out) {
  if (!out) return;
  const md::TrainConfig d;
  out->gamma = d.gamma;
  out->lambda = d.lambda;
  out->clip_eps = d.clip_eps;
  out->epochs = d.epochs;
  out->minibatch_size = d.minibatch_size;
  out->value_coef = d.value_coef;
  out->entropy_coef = d.entropy_coef;
  out->learning_rate = d.learning_rate;
  out->rollout_length = d.rollout_length;
  out->alpha = d.alpha;
  out->has_base_tons = 0;
  out->base_tons = 0.0;
  out->normalize_advantages = d.normalize_advantages ? 1 : 0;
  out->max_grad_norm = d.max_grad_norm;
  out->hidden = d.hidden;
  out->gae_mode = MD_GAE_RECURSIVE;
  out->eval_every = d.eval_every;
}

md_status md_train(const md_scenario* s, const md_train_request* req, md_train_summary* out) {
  return guarded([&] {
    require(s, "scenario");
    require(req, "request");
    const md_train_config& c = req->config;
    md::TrainRequest r;
    r.scenario = s->config;
    r.reward = req->reward == MD_REWARD_DENSE ? md::RewardConfig::dense()
                                              : md::RewardConfig::sparse();
    r.config.gamma = c.gamma;
    r.config.lambda = c.lambda;
    r.config.clip_eps = c.clip_eps;
    r.config.epochs = c.epochs;
    r.config.minibatch_size = c.minibatch_size;
    r.config.value_coef = c.value_coef;
    r.config.entropy_coef = c.entropy_coef;
    r.config.learning_rate = c.learning_rate;
    r.config.rollout_length = c.rollout_length;
    r.config.alpha = c.alpha;
    if (c.has_base_tons) r.config.base_tons = c.base_tons;
    r.config.normalize_advantages = c.normalize_advantages != 0;
    r.config.max_grad_norm = c.max_grad_norm;
    r.config.hidden = c.hidden;
    r.config.gae_mode = c.gae_mode == MD_GAE_LITERAL ? md::GaeMode::kLiteral
                                                     : md::GaeMode::kRecursive;
    r.config.eval_every = c.eval_every;
    r.guided = req->guided != 0;
    r.total_steps = req->total_steps;
    r.seed = req->seed;
    r.workers = req->workers;
    r.out_dir = req->out_dir ? req->out_dir : "";
    r.resume = req->resume != 0;
    r.stop = &g_stop;
    const md::TrainResult res = md::train(r);
    if (out) {
      out->steps = res.progress.steps;
      out->updates = res.progress.updates;
      out->episodes = res.progress.episodes;
      out->base_tons = res.progress.base_tons;
      out->best_eval_tons = res.best_eval_tons;
      out->final_eval_tons = res.evals.empty() ? -1.0 : res.evals.back().mean_tons;
      out->interrupted = res.interrupted ? 1 : 0;
    }
  });
}

void md_request_stop(void) { g_stop.store(true); }
void md_clear_stop(void) { g_stop.store(false); }

// ---- policies --------------------------------------------------------------

md_status md_policy_load(const char* path, md_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw md::IoError(std::string("cannot open ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
      throw md::ParseError(std::string(path) + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("format")) {
      *out = new md_policy{md::load_checkpoint(path).params};
    } else {
      *out = new md_policy{md::policy_from_json(doc)};
    }
  });
}

md_status md_policy_check(const md_policy* p, const md_scenario* s) {
  return guarded([&] {
    require(p, "policy");
    require(s, "scenario");
    md::check_compatible(p->params.net, s->config);
  });
}

md_status md_policy_act(const md_policy* p, const md_sim* sim, int* action) {
  return guarded([&] {
    require(p, "policy");
    require(sim, "sim");
    require(action, "action");
    md::check_compatible(p->params.net, sim->sim->config());
    *action = p->params.net.greedy(md::encode(*sim->sim), md::mask(*sim->sim));
  });
}

md_status md_evaluate(const md_policy* p, const md_scenario* s, const uint64_t* seeds,
                      size_t count, md_metrics* out) {
  return guarded([&] {
    require(p, "policy");
    require(s, "scenario");
    if (count > 0) {
      require(seeds, "seeds");
      require(out, "out");
    }
    const auto runs = md::evaluate(p->params.net, s->config, std::span(seeds, count));
    for (std::size_t i = 0; i < runs.size(); ++i) out[i] = to_c(runs[i]);
  });
}

void md_policy_free(md_policy* p) { delete p; }

}  // extern "C"
