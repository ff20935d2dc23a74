#ifndef MINEDISPATCH_TRAINER_HPP
#define MINEDISPATCH_TRAINER_HPP

#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "minedispatch/losses.hpp"
#include "minedispatch/observation.hpp"
#include "minedispatch/policy_net.hpp"
#include "minedispatch/reward.hpp"
#include "minedispatch/scenario.hpp"
#include "minedispatch/sim.hpp"

namespace minedispatch {

/// How advantages are accumulated over non-uniform decision intervals.
///  kRecursive: A_t = delta_t + (gamma*lambda)^dt_t * A_{t+1}, i.e. the decay
///              exponent is the elapsed time between decisions t and t+l.
///  kLiteral:   A_t = sum_l (gamma^dt_{t+l} * lambda^dt_{t+l})^l * delta_{t+l}.
/// Both agree whenever every dt is the same.
enum class GaeMode { kRecursive, kLiteral };

struct TrainConfig {
  double gamma = 0.99;   // per minute
  double lambda = 0.95;  // per minute
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  int rollout_length = 2048;
  double alpha = 0.5;
  std::optional<double> base_tons;  // default: SPTF tons on the training seed
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;
  int hidden = 128;
  GaeMode gae_mode = GaeMode::kRecursive;
  int eval_every = 10;  // updates between greedy evaluations; 0 disables
  std::vector<std::uint64_t> eval_seeds = {1000, 1001, 1002};
};

/// Throws ValidationError for out-of-range hyper-parameters.
void validate(const TrainConfig& config);

struct Transition {
  Observation obs;
  ActionMask mask;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double delta_t = 0.0;  // minutes until the next decision (or episode end)
  bool done = false;
  int teacher_action = 0;
};

/// Per-worker decision streams. Advantages may only be computed once sealed.
class RolloutBuffer {
 public:
  explicit RolloutBuffer(int workers = 1);

  void add(int worker, Transition t);
  /// Freezes the buffer. `bootstrap` holds V(s) of the state following each
  /// worker's last transition (ignored when that transition is terminal).
  void seal(std::vector<double> bootstrap);
  bool sealed() const { return sealed_; }

  int workers() const { return static_cast<int>(streams_.size()); }
  const std::vector<Transition>& stream(int worker) const;
  double bootstrap(int worker) const;
  std::size_t size() const;
  /// Transition `i` in worker-major order.
  const Transition& at(std::size_t i) const;

 private:
  std::vector<std::vector<Transition>> streams_;
  std::vector<double> bootstrap_;
  bool sealed_ = false;
};

struct Advantages {
  std::vector<double> advantages;  // worker-major, matches RolloutBuffer::at
  std::vector<double> returns;     // advantages + values, before normalisation
};

/// Single-stream advantage recursions.
std::vector<double> gae_recursive(std::span<const double> rewards, std::span<const double> values,
                                  std::span<const double> delta_t, std::span<const bool> dones,
                                  double bootstrap, double gamma, double lambda);
std::vector<double> gae_literal(std::span<const double> rewards, std::span<const double> values,
                                std::span<const double> delta_t, std::span<const bool> dones,
                                double bootstrap, double gamma, double lambda);

/// Throws UnsealedBuffer if the buffer is still open.
Advantages compute_gae(const RolloutBuffer& buffer, const TrainConfig& config);

/// Guidance inputs for one update.
struct GuidanceContext {
  bool guided = false;
  GuidanceState* state = nullptr;
  double tons = 0.0;       // latest completed-episode production
  double base_tons = 0.0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double guide_loss = 0.0;
  double c_teacher = 0.0;
  double guide_coef = 0.0;
  double kl = 0.0;
  int minibatches = 0;
  std::vector<double> c_teacher_trace;   // one per minibatch
  std::vector<double> guide_coef_trace;  // one per minibatch
};

/// Epochs of shuffled minibatch steps on the clipped surrogate plus value,
/// entropy and (when guided) teacher terms.
UpdateStats update(const RolloutBuffer& buffer, const Advantages& adv, PolicyParams& params,
                   const TrainConfig& config, GuidanceContext guidance,
                   std::mt19937_64& shuffle_rng);

// ---------------------------------------------------------------------------
// Checkpoints

struct TrainingProgress {
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  bool guided = false;
  double base_tons = 0.0;
  GuidanceState guidance;
  std::vector<double> worker_last_tons;   // -1 until a worker finishes an episode
  std::vector<std::int64_t> worker_episodes;
};

struct Checkpoint {
  PolicyParams params;
  TrainingProgress progress;
  int num_load_sites = 0;
  int num_dump_sites = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
/// Throws ShapeMismatch if the network cannot act in `config`.
void check_compatible(const PolicyNet& net, const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Training and evaluation

struct TrainRequest {
  ScenarioConfig scenario;
  RewardConfig reward;
  TrainConfig config;
  bool guided = false;
  std::int64_t total_steps = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir;        // empty: keep everything in memory
  bool resume = false;        // continue from out_dir/checkpoint.json
  const std::atomic<bool>* stop = nullptr;
};

struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double produced_tons = 0.0;  // tons signal fed to the guidance latch
  double mean_reward = 0.0;
  double c_teacher = 0.0;
  double guide_coef = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
};

struct EvalRow {
  std::int64_t step = 0;
  double mean_tons = 0.0;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams best_params;  // highest greedy evaluation seen
  double best_eval_tons = -1.0;
  TrainingProgress progress;
  std::vector<MetricsRow> metrics;
  std::vector<EvalRow> evals;
  std::vector<double> episode_tons;  // every completed training episode, in order
  bool interrupted = false;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

TrainResult train(const TrainRequest& request);

/// Greedy (argmax) roll-outs, one episode per seed.
std::vector<EpisodeMetrics> evaluate(const PolicyNet& net, const ScenarioConfig& scenario,
                                     std::span<const std::uint64_t> seeds);

struct MetricsStats {
  double produced_tons = 0.0;
  double match_factor = 0.0;
  double total_wait_time = 0.0;
  double jam_ratio = 0.0;
  double trips_completed = 0.0;
};
struct MetricsSummary {
  MetricsStats mean;
  MetricsStats stddev;  // population standard deviation
};
MetricsSummary summarize(std::span<const EpisodeMetrics> runs);

}  // namespace minedispatch

#endif  // MINEDISPATCH_TRAINER_HPP
