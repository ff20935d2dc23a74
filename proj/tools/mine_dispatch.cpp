// mine_dispatch: run dispatchers, train and evaluate policies, sweep fleet sizes.
#include <charconv>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minedispatch/minedispatch.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitShape = 4;

// Carries an exit code out of a subcommand.
struct Exit {
  int code;
  std::string message;
};

int exit_code_for(md_status s) {
  switch (s) {
    case MD_OK: return 0;
    case MD_ERR_SHAPE_MISMATCH: return kExitShape;
    case MD_ERR_INVALID_ARGUMENT: return kExitUsage;
    case MD_ERR_INTERNAL: return 1;
    default: return kExitConfig;
  }
}

void check(md_status s, const std::string& context) {
  if (s != MD_OK) throw Exit{exit_code_for(s), context + ": " + md_last_error()};
}

struct ScenarioDeleter {
  void operator()(md_scenario* p) const { md_scenario_free(p); }
};
struct SimDeleter {
  void operator()(md_sim* p) const { md_sim_free(p); }
};
struct AgentDeleter {
  void operator()(md_agent* p) const { md_agent_free(p); }
};
struct PolicyDeleter {
  void operator()(md_policy* p) const { md_policy_free(p); }
};
using ScenarioPtr = std::unique_ptr<md_scenario, ScenarioDeleter>;
using SimPtr = std::unique_ptr<md_sim, SimDeleter>;
using AgentPtr = std::unique_ptr<md_agent, AgentDeleter>;
using PolicyPtr = std::unique_ptr<md_policy, PolicyDeleter>;

// "default", "reduced:m,n,k,minutes" or a JSON file path.
ScenarioPtr open_scenario(const std::string& spec) {
  md_scenario* raw = nullptr;
  if (spec == "default") {
    check(md_scenario_default(&raw), "scenario");
  } else if (spec.rfind("reduced:", 0) == 0) {
    int m = 0, n = 0, k = 0;
    double minutes = 0.0;
    char tail = 0;
    if (std::sscanf(spec.c_str() + 8, "%d,%d,%d,%lf%c", &m, &n, &k, &minutes, &tail) != 4)
      throw Exit{kExitUsage, "--scenario: expected reduced:m,n,k,minutes"};
    check(md_scenario_reduced(m, n, k, minutes, &raw), "scenario");
  } else {
    check(md_scenario_load(spec.c_str(), &raw), "scenario");
  }
  return ScenarioPtr(raw);
}

PolicyPtr open_policy(const std::string& path, const md_scenario* scenario) {
  md_policy* raw = nullptr;
  check(md_policy_load(path.c_str(), &raw), "checkpoint");
  PolicyPtr p(raw);
  check(md_policy_check(p.get(), scenario), "checkpoint");
  return p;
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Exit{kExitConfig, "cannot write " + path};
  return out;
}

const char* kReportHeader =
    "scenario,dispatcher,seed,produced_tons,match_factor,total_wait_time,jam_ratio,"
    "trips_completed\n";

// Quotes a CSV cell when it holds a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string report_row(const std::string& scenario, const std::string& dispatcher,
                       const std::string& seed, const md_metrics& m, bool integral_trips) {
  std::string trips = integral_trips ? std::to_string(m.trips_completed) : "";
  return csv_field(scenario) + "," + dispatcher + "," + seed + "," + num(m.produced_tons) + "," +
         num(m.match_factor) + "," + num(m.total_wait_time) + "," + num(m.jam_ratio) + "," +
         trips;
}

struct Mean {
  double tons = 0, mf = 0, wait = 0, jam = 0, trips = 0;
  int n = 0;
  void add(const md_metrics& m) {
    tons += m.produced_tons;
    mf += m.match_factor;
    wait += m.total_wait_time;
    jam += m.jam_ratio;
    trips += static_cast<double>(m.trips_completed);
    ++n;
  }
  double d(double v) const { return n ? v / n : 0.0; }
  std::string csv() const {
    return num(d(tons)) + "," + num(d(mf)) + "," + num(d(wait)) + "," + num(d(jam)) + "," +
           num(d(trips));
  }
};

std::string summary_row(const std::string& scenario, const std::string& dispatcher,
                        const Mean& mean) {
  return csv_field(scenario) + "," + dispatcher + ",mean," + mean.csv();
}

void write_summary_json(const std::string& path, const std::string& command,
                        const std::string& scenario, const std::string& dispatcher,
                        const Mean& mean, double seconds) {
  if (path.empty()) return;
  auto out = open_out(path);
  out << "{\"command\":\"" << command << "\",\"scenario\":\"" << scenario
      << "\",\"dispatcher\":\"" << dispatcher << "\",\"episodes\":" << mean.n
      << ",\"mean\":{\"produced_tons\":" << num(mean.d(mean.tons))
      << ",\"match_factor\":" << num(mean.d(mean.mf))
      << ",\"total_wait_time\":" << num(mean.d(mean.wait))
      << ",\"jam_ratio\":" << num(mean.d(mean.jam))
      << ",\"trips_completed\":" << num(mean.d(mean.trips))
      << "},\"runtime_seconds\":" << num(seconds) << "}\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* event_name(md_event_type e) {
  switch (e) {
    case MD_EVENT_INIT: return "init";
    case MD_EVENT_HAUL: return "haul";
    case MD_EVENT_LOAD: return "load";
  }
  return "?";
}

// ---- run -----------------------------------------------------------------

struct RunArgs {
  std::string scenario = "default";
  std::string dispatcher;
  std::uint64_t seed = 0;
  int episodes = 1;
  std::string out;
  std::string trace;
  std::string dump_obs;
  std::string summary;
};

int cmd_run(const RunArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  md_dispatcher kind;
  if (md_dispatcher_from_name(a.dispatcher.c_str(), &kind) != MD_OK)
    throw Exit{kExitUsage, std::string("--dispatcher: ") + md_last_error()};
  if (a.episodes < 1) throw Exit{kExitUsage, "--episodes must be at least 1"};
  auto scenario = open_scenario(a.scenario);
  md_scenario_info info{};
  check(md_scenario_info_get(scenario.get(), &info), "scenario");

  std::ofstream obs_out;
  if (!a.dump_obs.empty()) {
    obs_out = open_out(a.dump_obs);
    obs_out << "episode,decision,truck,event";
    for (int i = 0; i < info.obs_dim; ++i) obs_out << ",o" << i;
    for (int i = 0; i < info.action_width; ++i) obs_out << ",m" << i;
    obs_out << "\n";
  }

  std::ostringstream csv;
  csv << kReportHeader;
  Mean mean;
  std::vector<double> obs(static_cast<std::size_t>(info.obs_dim));
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(info.action_width));
  for (int e = 0; e < a.episodes; ++e) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(e);
    md_sim* raw = nullptr;
    check(md_sim_create(scenario.get(), seed, &raw), "simulator");
    SimPtr sim(raw);
    if (e == 0 && !a.trace.empty()) check(md_sim_enable_trace(sim.get(), 1), "trace");
    md_agent* agent_raw = nullptr;
    check(md_agent_create(kind, seed, &agent_raw), "dispatcher");
    AgentPtr agent(agent_raw);
    std::uint64_t decision = 0;
    while (!md_sim_done(sim.get())) {
      if (obs_out.is_open()) {
        md_request req{};
        check(md_sim_request(sim.get(), &req), "request");
        check(md_sim_observation(sim.get(), obs.data(), obs.size()), "observation");
        check(md_sim_mask(sim.get(), mask.data(), mask.size()), "mask");
        obs_out << e << "," << decision << "," << req.truck_index << ","
                << event_name(req.event_type);
        for (double v : obs) obs_out << "," << num(v);
        for (auto v : mask) obs_out << "," << static_cast<int>(v);
        obs_out << "\n";
      }
      int action = 0;
      check(md_agent_decide(agent.get(), sim.get(), &action), "dispatch");
      check(md_sim_step(sim.get(), action, nullptr), "step");
      ++decision;
    }
    md_metrics m{};
    check(md_sim_metrics(sim.get(), &m), "metrics");
    mean.add(m);
    csv << report_row(a.scenario, a.dispatcher, std::to_string(seed), m, true) << "\n";
    if (e == 0 && !a.trace.empty()) check(md_sim_write_trace(sim.get(), a.trace.c_str()), "trace");
  }
  csv << summary_row(a.scenario, a.dispatcher, mean) << "\n";
  if (!a.out.empty()) open_out(a.out) << csv.str();
  const double secs = seconds_since(t0);
  std::cout << a.dispatcher << ": mean tons " << num(mean.d(mean.tons)) << " over " << mean.n
            << " episode(s), runtime " << secs << " s\n";
  write_summary_json(a.summary, "run", a.scenario, a.dispatcher, mean, secs);
  return 0;
}

// ---- train ---------------------------------------------------------------

extern "C" void on_sigint(int) { md_request_stop(); }

struct TrainArgs {
  std::string scenario = "default";
  std::string reward = "dense";
  std::string guide = "on";
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  bool resume = false;
  md_train_config config{};
  std::string gae = "recursive";
  double base_tons = -1.0;
};

int cmd_train(TrainArgs a) {
  const auto t0 = std::chrono::steady_clock::now();
  auto scenario = open_scenario(a.scenario);
  md_train_request req{};
  req.config = a.config;
  if (a.base_tons >= 0.0) {
    req.config.has_base_tons = 1;
    req.config.base_tons = a.base_tons;
  }
  req.config.gae_mode = a.gae == "literal" ? MD_GAE_LITERAL : MD_GAE_RECURSIVE;
  req.reward = a.reward == "sparse" ? MD_REWARD_SPARSE : MD_REWARD_DENSE;
  req.guided = a.guide == "on" ? 1 : 0;
  req.total_steps = a.steps;
  req.seed = a.seed;
  req.workers = a.workers;
  req.out_dir = a.out.c_str();
  req.resume = a.resume ? 1 : 0;

  md_clear_stop();
  std::signal(SIGINT, on_sigint);
  md_train_summary s{};
  const md_status st = md_train(scenario.get(), &req, &s);
  std::signal(SIGINT, SIG_DFL);
  check(st, "train");
  std::cout << "trained " << s.steps << " decisions in " << s.updates << " updates ("
            << s.episodes << " episodes); base_tons " << num(s.base_tons) << ", best eval "
            << num(s.best_eval_tons) << ", runtime " << seconds_since(t0) << " s"
            << (s.interrupted ? " [interrupted, checkpoint saved]" : "") << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string scenario = "default";
  int episodes = 0;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0;
  std::string out;
  std::string summary;
};

int cmd_eval(EvalArgs a) {
  const auto t0 = std::chrono::steady_clock::now();
  if (a.seeds.empty()) {
    const int n = a.episodes > 0 ? a.episodes : 1;
    for (int i = 0; i < n; ++i) a.seeds.push_back(a.seed + static_cast<std::uint64_t>(i));
  } else if (a.episodes > 0 && static_cast<std::size_t>(a.episodes) != a.seeds.size()) {
    throw Exit{kExitUsage, "--episodes does not match the number of --seeds"};
  }
  auto scenario = open_scenario(a.scenario);
  auto policy = open_policy(a.checkpoint, scenario.get());
  std::vector<md_metrics> runs(a.seeds.size());
  check(md_evaluate(policy.get(), scenario.get(), a.seeds.data(), a.seeds.size(), runs.data()),
        "eval");
  std::ostringstream csv;
  csv << kReportHeader;
  Mean mean;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    mean.add(runs[i]);
    csv << report_row(a.scenario, "ppo", std::to_string(a.seeds[i]), runs[i], true) << "\n";
  }
  csv << summary_row(a.scenario, "ppo", mean) << "\n";
  if (!a.out.empty()) open_out(a.out) << csv.str();
  const double secs = seconds_since(t0);
  std::cout << "ppo: mean tons " << num(mean.d(mean.tons)) << " over " << mean.n
            << " episode(s), runtime " << secs << " s\n";
  write_summary_json(a.summary, "eval", a.scenario, "ppo", mean, secs);
  return 0;
}

// ---- sweep ---------------------------------------------------------------

struct SweepArgs {
  std::string checkpoint;
  std::string scenario = "default";
  int fleet_min = 1;
  int fleet_max = 0;
  int step = 1;
  std::vector<std::string> dispatchers;
  int episodes = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sweep(SweepArgs a) {
  if (a.fleet_min < 1 || a.fleet_max < a.fleet_min || a.step < 1)
    throw Exit{kExitUsage, "fleet range must satisfy 1 <= --fleet-min <= --fleet-max, --step >= 1"};
  if (a.episodes < 1) throw Exit{kExitUsage, "--episodes must be at least 1"};
  if (a.dispatchers.empty()) {
    for (int i = 0; i < MD_NUM_DISPATCHERS; ++i)
      a.dispatchers.emplace_back(md_dispatcher_name(static_cast<md_dispatcher>(i)));
    if (!a.checkpoint.empty()) a.dispatchers.emplace_back("ppo");
  }
  std::vector<std::pair<std::string, int>> kinds;  // -1 marks the trained policy
  for (const auto& name : a.dispatchers) {
    if (name == "ppo") {
      if (a.checkpoint.empty()) throw Exit{kExitUsage, "dispatcher 'ppo' needs --checkpoint"};
      kinds.emplace_back(name, -1);
      continue;
    }
    md_dispatcher kind;
    if (md_dispatcher_from_name(name.c_str(), &kind) != MD_OK)
      throw Exit{kExitUsage, std::string("--dispatchers: ") + md_last_error()};
    kinds.emplace_back(name, static_cast<int>(kind));
  }

  auto base = open_scenario(a.scenario);
  PolicyPtr policy;
  if (!a.checkpoint.empty()) policy = open_policy(a.checkpoint, base.get());

  std::ostringstream csv;
  csv << "fleet_size,dispatcher,episodes,mean_tons,mean_match_factor,mean_wait_time,"
         "mean_jam_ratio,mean_trips\n";
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.episodes; ++i) seeds.push_back(a.seed + static_cast<std::uint64_t>(i));
  for (int k = a.fleet_min; k <= a.fleet_max; k += a.step) {
    md_scenario* raw = nullptr;
    check(md_scenario_resize_fleet(base.get(), k, &raw), "sweep");
    ScenarioPtr sc(raw);
    for (const auto& [name, kind] : kinds) {
      Mean mean;
      std::vector<md_metrics> runs(seeds.size());
      if (kind < 0) {
        check(md_evaluate(policy.get(), sc.get(), seeds.data(), seeds.size(), runs.data()),
              "sweep");
      } else {
        for (std::size_t i = 0; i < seeds.size(); ++i)
          check(md_run_episode(sc.get(), static_cast<md_dispatcher>(kind), seeds[i], &runs[i]),
                "sweep");
      }
      for (const auto& m : runs) mean.add(m);
      csv << k << "," << name << "," << a.episodes << "," << mean.csv() << "\n";
    }
    std::cerr << "fleet " << k << " done\n";
  }
  if (!a.out.empty()) open_out(a.out) << csv.str();
  else std::cout << csv.str();
  return 0;
}

// ---- scenario ------------------------------------------------------------

int cmd_scenario(const std::string& spec, const std::string& out) {
  auto sc = open_scenario(spec);
  check(md_scenario_save(sc.get(), out.c_str()), "scenario");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-pit mine truck dispatch simulator and PPO trainer"};
  app.require_subcommand(1);
  const std::string scenario_help = "scenario JSON path, 'default' or 'reduced:m,n,k,minutes'";

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a rule-based dispatcher");
  run_cmd->add_option("--scenario", run.scenario, scenario_help);
  run_cmd->add_option("--dispatcher", run.dispatcher, "dispatcher name")->required();
  run_cmd->add_option("--seed", run.seed, "seed of the first episode (episode i uses seed+i)");
  run_cmd->add_option("--episodes", run.episodes, "number of episodes");
  run_cmd->add_option("--out", run.out, "CSV output path");
  run_cmd->add_option("--trace", run.trace, "event trace CSV of the first episode");
  run_cmd->add_option("--dump-obs", run.dump_obs, "CSV of every observation and mask");
  run_cmd->add_option("--summary", run.summary, "JSON run summary (includes runtime)");

  TrainArgs train;
  md_train_config_default(&train.config);
  auto* train_cmd = app.add_subcommand("train", "train a PPO dispatch policy");
  train_cmd->add_option("--scenario", train.scenario, scenario_help);
  train_cmd->add_option("--reward", train.reward, "reward mode")
      ->check(CLI::IsMember({"sparse", "dense"}));
  train_cmd->add_option("--guide", train.guide, "teacher guidance")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--steps", train.steps, "decision budget")->required();
  train_cmd->add_option("--seed", train.seed, "training seed");
  train_cmd->add_option("--workers", train.workers, "parallel rollout workers");
  train_cmd->add_option("--out", train.out, "output directory")->required();
  train_cmd->add_flag("--resume", train.resume, "continue from <out>/checkpoint.json");
  train_cmd->add_option("--rollout-length", train.config.rollout_length, "decisions per update");
  train_cmd->add_option("--minibatch-size", train.config.minibatch_size, "minibatch size");
  train_cmd->add_option("--epochs", train.config.epochs, "epochs per update");
  train_cmd->add_option("--learning-rate", train.config.learning_rate, "Adam step size");
  train_cmd->add_option("--gamma", train.config.gamma, "discount per minute");
  train_cmd->add_option("--lambda", train.config.lambda, "trace decay per minute");
  train_cmd->add_option("--alpha", train.config.alpha, "guidance scale");
  train_cmd->add_option("--base-tons", train.base_tons, "guidance cut-off (default: teacher tons)");
  train_cmd->add_option("--hidden", train.config.hidden, "hidden layer width");
  train_cmd->add_option("--eval-every", train.config.eval_every, "updates between evaluations");
  train_cmd->add_option("--gae", train.gae, "advantage recursion")
      ->check(CLI::IsMember({"recursive", "literal"}));

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained policy greedily");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint or policy JSON")->required();
  eval_cmd->add_option("--scenario", eval.scenario, scenario_help);
  eval_cmd->add_option("--episodes", eval.episodes, "number of episodes");
  eval_cmd->add_option("--seeds", eval.seeds, "episode seeds")->delimiter(',');
  eval_cmd->add_option("--seed", eval.seed, "first seed when --seeds is absent");
  eval_cmd->add_option("--out", eval.out, "CSV output path");
  eval_cmd->add_option("--summary", eval.summary, "JSON run summary (includes runtime)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "tons against fleet size");
  sweep_cmd->add_option("--checkpoint", sweep.checkpoint, "adds the trained policy as 'ppo'");
  sweep_cmd->add_option("--scenario", sweep.scenario, scenario_help);
  sweep_cmd->add_option("--fleet-min", sweep.fleet_min, "smallest fleet");
  sweep_cmd->add_option("--fleet-max", sweep.fleet_max, "largest fleet")->required();
  sweep_cmd->add_option("--step", sweep.step, "fleet size increment");
  sweep_cmd->add_option("--dispatchers", sweep.dispatchers, "dispatchers to compare")
      ->delimiter(',');
  sweep_cmd->add_option("--episodes", sweep.episodes, "episodes per size and dispatcher");
  sweep_cmd->add_option("--seed", sweep.seed, "first episode seed");
  sweep_cmd->add_option("--out", sweep.out, "CSV output path (stdout if absent)");

  std::string sc_spec = "default", sc_out;
  auto* sc_cmd = app.add_subcommand("scenario", "write a built-in scenario as JSON");
  sc_cmd->add_option("--scenario", sc_spec, scenario_help);
  sc_cmd->add_option("--out", sc_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*sc_cmd) return cmd_scenario(sc_spec, sc_out);
  } catch (const Exit& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  }
  return kExitUsage;
}
