#include "minedispatch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "minedispatch/csv.hpp"
#include "minedispatch/dispatchers.hpp"
#include "minedispatch/errors.hpp"
#include "minedispatch/logging.hpp"
#include "minedispatch/seeding.hpp"

namespace minedispatch {

namespace fs = std::filesystem;

void validate(const TrainConfig& c) {
  auto unit = [](const char* f, double v) {
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError(f, "must be in (0, 1]");
  };
  auto positive = [](const char* f, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(f, "must be positive");
  };
  auto non_negative = [](const char* f, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(f, "must be non-negative");
  };
  unit("gamma", c.gamma);
  unit("lambda", c.lambda);
  positive("clip_eps", c.clip_eps);
  positive("learning_rate", c.learning_rate);
  positive("max_grad_norm", c.max_grad_norm);
  non_negative("value_coef", c.value_coef);
  non_negative("entropy_coef", c.entropy_coef);
  non_negative("alpha", c.alpha);
  if (c.epochs < 1) throw ValidationError("epochs", "must be at least 1");
  if (c.minibatch_size < 1) throw ValidationError("minibatch_size", "must be at least 1");
  if (c.rollout_length < 1) throw ValidationError("rollout_length", "must be at least 1");
  if (c.hidden < 1) throw ValidationError("hidden", "must be at least 1");
  if (c.eval_every < 0) throw ValidationError("eval_every", "must be non-negative");
  if (c.base_tons && !std::isfinite(*c.base_tons))
    throw ValidationError("base_tons", "must be finite");
}

// ---------------------------------------------------------------------------
// Rollout buffer

RolloutBuffer::RolloutBuffer(int workers) {
  if (workers < 1) throw ValidationError("workers", "must be at least 1");
  streams_.resize(static_cast<std::size_t>(workers));
}

void RolloutBuffer::add(int worker, Transition t) {
  if (sealed_) throw Error("rollout buffer is sealed");
  streams_.at(static_cast<std::size_t>(worker)).push_back(std::move(t));
}

void RolloutBuffer::seal(std::vector<double> bootstrap) {
  if (bootstrap.size() != streams_.size())
    throw ShapeMismatch("one bootstrap value per worker expected");
  bootstrap_ = std::move(bootstrap);
  sealed_ = true;
}

const std::vector<Transition>& RolloutBuffer::stream(int worker) const {
  return streams_.at(static_cast<std::size_t>(worker));
}

double RolloutBuffer::bootstrap(int worker) const {
  if (!sealed_) throw UnsealedBuffer("rollout buffer has not been sealed");
  return bootstrap_.at(static_cast<std::size_t>(worker));
}

std::size_t RolloutBuffer::size() const {
  std::size_t n = 0;
  for (const auto& s : streams_) n += s.size();
  return n;
}

const Transition& RolloutBuffer::at(std::size_t i) const {
  for (const auto& s : streams_) {
    if (i < s.size()) return s[i];
    i -= s.size();
  }
  throw std::out_of_range("RolloutBuffer::at");
}

// ---------------------------------------------------------------------------
// Advantages

namespace {

void check_lengths(std::span<const double> r, std::span<const double> v,
                   std::span<const double> dt, std::span<const bool> d) {
  if (r.size() != v.size() || r.size() != dt.size() || r.size() != d.size())
    throw ShapeMismatch("advantage inputs differ in length");
}

std::vector<double> td_residuals(std::span<const double> rewards, std::span<const double> values,
                                 std::span<const double> delta_t, std::span<const bool> dones,
                                 double bootstrap, double gamma) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? values[t + 1] : bootstrap;
    delta[t] = td_target(rewards[t], gamma, delta_t[t], next, dones[t]) - values[t];
  }
  return delta;
}

}  // namespace

std::vector<double> gae_recursive(std::span<const double> rewards, std::span<const double> values,
                                  std::span<const double> delta_t, std::span<const bool> dones,
                                  double bootstrap, double gamma, double lambda) {
  check_lengths(rewards, values, delta_t, dones);
  const auto delta = td_residuals(rewards, values, delta_t, dones, bootstrap, gamma);
  std::vector<double> adv(rewards.size());
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const double decay = std::pow(gamma, delta_t[t]) * std::pow(lambda, delta_t[t]);
    next = delta[t] + (dones[t] ? 0.0 : decay * next);
    adv[t] = next;
  }
  return adv;
}

std::vector<double> gae_literal(std::span<const double> rewards, std::span<const double> values,
                                std::span<const double> delta_t, std::span<const bool> dones,
                                double bootstrap, double gamma, double lambda) {
  check_lengths(rewards, values, delta_t, dones);
  const auto delta = td_residuals(rewards, values, delta_t, dones, bootstrap, gamma);
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; t + l < n; ++l) {
      const std::size_t k = t + l;
      const double base = std::pow(gamma, delta_t[k]) * std::pow(lambda, delta_t[k]);
      sum += std::pow(base, static_cast<double>(l)) * delta[k];
      if (dones[k]) break;
    }
    adv[t] = sum;
  }
  return adv;
}

Advantages compute_gae(const RolloutBuffer& buffer, const TrainConfig& config) {
  if (!buffer.sealed()) throw UnsealedBuffer("rollout buffer has not been sealed");
  Advantages out;
  out.advantages.reserve(buffer.size());
  out.returns.reserve(buffer.size());
  for (int w = 0; w < buffer.workers(); ++w) {
    const auto& s = buffer.stream(w);
    std::vector<double> r, v, dt;
    std::unique_ptr<bool[]> d(new bool[s.size()]);
    for (std::size_t i = 0; i < s.size(); ++i) {
      r.push_back(s[i].reward);
      v.push_back(s[i].value);
      dt.push_back(s[i].delta_t);
      d[i] = s[i].done;
    }
    const std::span<const bool> dones(d.get(), s.size());
    const auto adv = config.gae_mode == GaeMode::kRecursive
                         ? gae_recursive(r, v, dt, dones, buffer.bootstrap(w), config.gamma,
                                         config.lambda)
                         : gae_literal(r, v, dt, dones, buffer.bootstrap(w), config.gamma,
                                       config.lambda);
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.advantages.push_back(adv[i]);
      out.returns.push_back(adv[i] + v[i]);
    }
  }
  if (config.normalize_advantages && out.advantages.size() > 1) {
    const double n = static_cast<double>(out.advantages.size());
    const double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : out.advantages) a = (a - mean) / (sd + 1e-8);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Update

UpdateStats update(const RolloutBuffer& buffer, const Advantages& adv, PolicyParams& params,
                   const TrainConfig& config, GuidanceContext guidance,
                   std::mt19937_64& shuffle_rng) {
  const std::size_t n = buffer.size();
  if (adv.advantages.size() != n || adv.returns.size() != n)
    throw ShapeMismatch("advantages do not match the buffer");
  UpdateStats stats;
  if (n == 0) return stats;

  std::vector<LossSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = buffer.at(i);
    samples[i] = {&t.obs, &t.mask, t.action, t.log_prob, adv.advantages[i], adv.returns[i],
                  t.teacher_action};
  }

  LossSpec spec;
  spec.clip_eps = config.clip_eps;
  spec.value_coef = config.value_coef;
  spec.entropy_coef = config.entropy_coef;
  if (guidance.guided && guidance.state) {
    spec.adaptive_guide = [&](double c) {
      return guidance.state->update(guidance.tons, guidance.base_tons, config.alpha, c);
    };
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mb = static_cast<std::size_t>(config.minibatch_size);
  std::vector<LossSample> batch;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      const LossReport rep = params.net.gradients(batch, spec, grad);
      clip_grad_norm(grad, config.max_grad_norm);
      params.adam.apply(params.net.parameters(), grad, config.learning_rate);

      stats.policy_loss += rep.policy_loss;
      stats.value_loss += rep.value_loss;
      stats.entropy += rep.entropy;
      stats.guide_loss += rep.guide_loss;
      stats.c_teacher += rep.c_teacher;
      stats.guide_coef += rep.guide_coef;
      stats.kl += rep.approx_kl;
      stats.c_teacher_trace.push_back(rep.c_teacher);
      stats.guide_coef_trace.push_back(rep.guide_coef);
      ++stats.minibatches;
    }
  }
  const double k = static_cast<double>(stats.minibatches);
  stats.policy_loss /= k;
  stats.value_loss /= k;
  stats.entropy /= k;
  stats.guide_loss /= k;
  stats.c_teacher /= k;
  stats.guide_coef /= k;
  stats.kl /= k;
  return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "minedispatch-checkpoint";
constexpr int kCheckpointVersion = 1;

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("cannot write " + path);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto& p = ckpt.progress;
  nlohmann::json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["num_load_sites"] = ckpt.num_load_sites;
  doc["num_dump_sites"] = ckpt.num_dump_sites;
  doc["policy"] = policy_to_json(ckpt.params);
  doc["progress"] = {{"steps", p.steps},
                     {"updates", p.updates},
                     {"episodes", p.episodes},
                     {"seed", p.seed},
                     {"workers", p.workers},
                     {"guided", p.guided},
                     {"base_tons", p.base_tons},
                     {"guidance",
                      {{"c_teacher", p.guidance.c_teacher},
                       {"guide_coef", p.guidance.guide_coef},
                       {"last_episode_tons", p.guidance.last_episode_tons},
                       {"active", p.guidance.active}}},
                     {"worker_last_tons", p.worker_last_tons},
                     {"worker_episodes", p.worker_episodes}};
  write_atomically(path, doc.dump());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat)
      throw ParseError(path + ": not a checkpoint file");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw ParseError(path + ": unsupported checkpoint version");
    Checkpoint c;
    c.num_load_sites = doc.at("num_load_sites").get<int>();
    c.num_dump_sites = doc.at("num_dump_sites").get<int>();
    c.params = policy_from_json(doc.at("policy"));
    const auto& p = doc.at("progress");
    c.progress.steps = p.at("steps").get<std::int64_t>();
    c.progress.updates = p.at("updates").get<std::int64_t>();
    c.progress.episodes = p.at("episodes").get<std::int64_t>();
    c.progress.seed = p.at("seed").get<std::uint64_t>();
    c.progress.workers = p.at("workers").get<int>();
    c.progress.guided = p.at("guided").get<bool>();
    c.progress.base_tons = p.at("base_tons").get<double>();
    const auto& g = p.at("guidance");
    c.progress.guidance.c_teacher = g.at("c_teacher").get<double>();
    c.progress.guidance.guide_coef = g.at("guide_coef").get<double>();
    c.progress.guidance.last_episode_tons = g.at("last_episode_tons").get<double>();
    c.progress.guidance.active = g.at("active").get<bool>();
    c.progress.worker_last_tons = p.at("worker_last_tons").get<std::vector<double>>();
    c.progress.worker_episodes = p.at("worker_episodes").get<std::vector<std::int64_t>>();
    if (static_cast<int>(c.progress.worker_last_tons.size()) != c.progress.workers ||
        static_cast<int>(c.progress.worker_episodes.size()) != c.progress.workers)
      throw ParseError(path + ": per-worker state does not match the worker count");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed checkpoint: " + e.what());
  }
}

void check_compatible(const PolicyNet& net, const ScenarioConfig& config) {
  const int want_obs = obs_dim(config.num_load_sites, config.num_dump_sites);
  const int want_actions = config.action_width();
  if (net.shape().obs_dim != want_obs || net.shape().actions != want_actions) {
    std::ostringstream msg;
    msg << "policy expects obs_dim " << net.shape().obs_dim << " and " << net.shape().actions
        << " actions; scenario needs obs_dim " << want_obs << " and " << want_actions;
    throw ShapeMismatch(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Training

std::string metrics_csv_header() {
  return "step,episode,produced_tons,mean_reward,c_teacher,guide_coef,policy_loss,value_loss,"
         "entropy,kl";
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::string s = std::to_string(r.step) + "," + std::to_string(r.episode);
  for (double v : {r.produced_tons, r.mean_reward, r.c_teacher, r.guide_coef, r.policy_loss,
                   r.value_loss, r.entropy, r.kl})
    s += "," + format_number(v);
  return s;
}

namespace {

struct Worker {
  Simulator sim;
  std::mt19937_64 rng;
  std::vector<double> finished_tons;
};

std::uint64_t episode_seed(std::uint64_t seed, int worker, std::int64_t episode) {
  return mix_seed({seed, 1, static_cast<std::uint64_t>(worker), static_cast<std::uint64_t>(episode)});
}

void collect(Worker& w, int worker_index, const PolicyNet& net, const RewardConfig& reward,
             std::int64_t count, std::uint64_t seed, std::int64_t& episodes,
             std::vector<Transition>& out, double& bootstrap) {
  const double horizon = w.sim.config().episode_minutes;
  for (std::int64_t i = 0; i < count; ++i) {
    Transition t;
    t.obs = encode(w.sim);
    t.mask = mask(w.sim);
    const PolicyOutput po = net.forward(t.obs, t.mask);
    t.action = sample_action(po, t.mask, w.rng);
    t.log_prob = po.log_probs[static_cast<std::size_t>(t.action)];
    t.value = po.value;
    t.teacher_action = teacher_action(w.sim);
    const double clock = w.sim.pending().clock;
    const StepResult res = w.sim.step(t.action);
    t.reward = step_reward(res.info, reward);
    t.done = res.info.episode_done;
    t.delta_t = res.next ? res.next->time_delta : horizon - clock;
    out.push_back(std::move(t));
    if (res.info.episode_done) {
      w.finished_tons.push_back(res.info.final_tons);
      ++episodes;
      w.sim.reset(episode_seed(seed, worker_index, episodes));
    }
  }
  const Observation obs = encode(w.sim);
  const ActionMask m = mask(w.sim);
  bootstrap = net.forward(obs, m).value;
}

double mean_tons(const std::vector<EpisodeMetrics>& runs) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.produced_tons;
  return s / static_cast<double>(runs.size());
}

}  // namespace

TrainResult train(const TrainRequest& req) {
  configure_logging();
  validate(req.scenario);
  validate(req.config);
  if (req.workers < 1) throw ValidationError("workers", "must be at least 1");
  if (req.total_steps < 1) throw ValidationError("total_steps", "must be at least 1");
  const TrainConfig& cfg = req.config;
  const ScenarioConfig& sc = req.scenario;

  const NetShape shape{obs_dim(sc.num_load_sites, sc.num_dump_sites), cfg.hidden,
                       sc.action_width()};
  const bool to_disk = !req.out_dir.empty();
  const fs::path dir(req.out_dir);
  const std::string ckpt_path = to_disk ? (dir / "checkpoint.json").string() : std::string();
  if (to_disk) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + req.out_dir + ": " + ec.message());
  }

  TrainResult result;
  TrainingProgress& prog = result.progress;
  const bool resuming = to_disk && req.resume && fs::exists(ckpt_path);
  if (resuming) {
    Checkpoint c = load_checkpoint(ckpt_path);
    check_compatible(c.params.net, sc);
    if (c.params.net.shape().hidden != cfg.hidden)
      throw ShapeMismatch("checkpoint hidden width differs from the configuration");
    if (c.progress.workers != req.workers)
      throw ValidationError("workers", "differs from the checkpoint");
    result.params = std::move(c.params);
    prog = std::move(c.progress);
    spdlog::info("resuming from {} at step {}", ckpt_path, prog.steps);
  } else {
    result.params = make_policy(shape, mix_seed({req.seed, 2}));
    prog.seed = req.seed;
    prog.workers = req.workers;
    prog.guided = req.guided;
    prog.base_tons = cfg.base_tons ? *cfg.base_tons
                                   : run_episode(sc, DispatcherKind::kSptf, req.seed).produced_tons;
    prog.worker_last_tons.assign(static_cast<std::size_t>(req.workers), -1.0);
    prog.worker_episodes.assign(static_cast<std::size_t>(req.workers), 0);
  }
  result.best_params = result.params;
  spdlog::info("training {} steps, {} workers, guided={}, base_tons={}", req.total_steps,
               req.workers, prog.guided, prog.base_tons);

  std::ofstream metrics_file, eval_file;
  if (to_disk) {
    const auto mode = resuming ? std::ios::app : std::ios::trunc;
    metrics_file.open(dir / "metrics.csv", std::ios::out | mode);
    eval_file.open(dir / "eval.csv", std::ios::out | mode);
    if (!metrics_file || !eval_file) throw IoError("cannot write logs in " + req.out_dir);
    if (!resuming) {
      metrics_file << metrics_csv_header() << "\n";
      eval_file << "step,mean_tons\n";
    }
  }

  const auto shared = std::make_shared<const ScenarioConfig>(sc);
  std::vector<Worker> workers;
  workers.reserve(static_cast<std::size_t>(req.workers));
  for (int w = 0; w < req.workers; ++w) {
    const auto e = prog.worker_episodes[static_cast<std::size_t>(w)];
    workers.push_back(Worker{Simulator(shared, episode_seed(prog.seed, w, e)), {}, {}});
  }

  auto checkpoint = [&] {
    if (!to_disk) return;
    save_checkpoint({result.params, prog, sc.num_load_sites, sc.num_dump_sites}, ckpt_path);
  };
  auto run_eval = [&] {
    const double tons = mean_tons(evaluate(result.params.net, sc, cfg.eval_seeds));
    result.evals.push_back({prog.steps, tons});
    if (tons > result.best_eval_tons) {
      result.best_eval_tons = tons;
      result.best_params = result.params;
      if (to_disk) write_atomically((dir / "best.json").string(),
                                    policy_to_json(result.best_params).dump());
    }
    if (to_disk) eval_file << prog.steps << "," << format_number(tons) << std::endl;
    spdlog::info("step {} greedy eval {:.1f} t", prog.steps, tons);
  };

  bool evaluated_last = false;
  while (prog.steps < req.total_steps) {
    if (req.stop && req.stop->load()) {
      result.interrupted = true;
      break;
    }
    const std::int64_t len = std::min<std::int64_t>(cfg.rollout_length, req.total_steps - prog.steps);
    RolloutBuffer buffer(req.workers);
    std::vector<std::vector<Transition>> streams(static_cast<std::size_t>(req.workers));
    std::vector<double> boot(static_cast<std::size_t>(req.workers), 0.0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(req.workers));

    auto job = [&](int w) {
      const auto uw = static_cast<std::size_t>(w);
      try {
        const std::int64_t share = len / req.workers + (w < len % req.workers ? 1 : 0);
        workers[uw].rng.seed(mix_seed({prog.seed, 3, static_cast<std::uint64_t>(w),
                                       static_cast<std::uint64_t>(prog.updates)}));
        workers[uw].finished_tons.clear();
        collect(workers[uw], w, result.params.net, req.reward, share, prog.seed,
                prog.worker_episodes[uw], streams[uw], boot[uw]);
      } catch (...) {
        errors[uw] = std::current_exception();
      }
    };
    if (req.workers == 1) {
      job(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < req.workers; ++w) threads.emplace_back(job, w);
      for (auto& t : threads) t.join();
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    double reward_sum = 0.0;
    for (int w = 0; w < req.workers; ++w) {
      const auto uw = static_cast<std::size_t>(w);
      for (auto& t : streams[uw]) {
        reward_sum += t.reward;
        buffer.add(w, std::move(t));
      }
      for (double tons : workers[uw].finished_tons) {
        result.episode_tons.push_back(tons);
        prog.worker_last_tons[uw] = tons;
        ++prog.episodes;
      }
    }
    buffer.seal(boot);

    double signal = -std::numeric_limits<double>::infinity();
    for (double t : prog.worker_last_tons)
      if (t >= 0.0) signal = std::max(signal, t);

    const Advantages adv = compute_gae(buffer, cfg);
    std::mt19937_64 shuffle(mix_seed({prog.seed, 4, static_cast<std::uint64_t>(prog.updates)}));
    GuidanceContext ctx{prog.guided, &prog.guidance, signal, prog.base_tons};
    const UpdateStats st = update(buffer, adv, result.params, cfg, ctx, shuffle);

    prog.steps += len;
    ++prog.updates;
    MetricsRow row;
    row.step = prog.steps;
    row.episode = prog.episodes;
    row.produced_tons = std::isfinite(signal) ? signal : 0.0;
    row.mean_reward = reward_sum / static_cast<double>(buffer.size());
    row.c_teacher = st.c_teacher;
    row.guide_coef = st.guide_coef;
    row.policy_loss = st.policy_loss;
    row.value_loss = st.value_loss;
    row.entropy = st.entropy;
    row.kl = st.kl;
    result.metrics.push_back(row);
    if (to_disk) metrics_file << metrics_csv_row(row) << std::endl;
    spdlog::debug("update {} step {} tons {} c_teacher {:.3f} guide {:.3f}", prog.updates,
                  prog.steps, row.produced_tons, st.c_teacher, st.guide_coef);

    evaluated_last = false;
    if (cfg.eval_every > 0 && prog.updates % cfg.eval_every == 0) {
      run_eval();
      checkpoint();
      evaluated_last = true;
    }
  }
  if (!evaluated_last && !result.interrupted && !cfg.eval_seeds.empty()) run_eval();
  checkpoint();
  if (result.interrupted) spdlog::warn("training interrupted at step {}", prog.steps);
  return result;
}

std::vector<EpisodeMetrics> evaluate(const PolicyNet& net, const ScenarioConfig& scenario,
                                     std::span<const std::uint64_t> seeds) {
  check_compatible(net, scenario);
  const auto shared = std::make_shared<const ScenarioConfig>(scenario);
  std::vector<EpisodeMetrics> out;
  for (std::uint64_t s : seeds) {
    Simulator sim(shared, s);
    while (!sim.done()) sim.step(net.greedy(encode(sim), mask(sim)));
    out.push_back(sim.metrics());
  }
  return out;
}

MetricsSummary summarize(std::span<const EpisodeMetrics> runs) {
  MetricsSummary s;
  if (runs.empty()) return s;
  const double n = static_cast<double>(runs.size());
  auto fields = [](const EpisodeMetrics& m) {
    return std::array<double, 5>{m.produced_tons, m.match_factor, m.total_wait_time, m.jam_ratio,
                                 static_cast<double>(m.trips_completed)};
  };
  std::array<double, 5> mean{}, var{};
  for (const auto& r : runs) {
    const auto f = fields(r);
    for (std::size_t i = 0; i < 5; ++i) mean[i] += f[i] / n;
  }
  for (const auto& r : runs) {
    const auto f = fields(r);
    for (std::size_t i = 0; i < 5; ++i) var[i] += (f[i] - mean[i]) * (f[i] - mean[i]) / n;
  }
  auto pack = [](const std::array<double, 5>& a) {
    return MetricsStats{a[0], a[1], a[2], a[3], a[4]};
  };
  std::array<double, 5> sd{};
  for (std::size_t i = 0; i < 5; ++i) sd[i] = std::sqrt(var[i]);
  s.mean = pack(mean);
  s.stddev = pack(sd);
  return s;
}

}  // namespace minedispatch
