#ifndef MINEDISPATCH_POLICY_NET_HPP
#define MINEDISPATCH_POLICY_NET_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "minedispatch/observation.hpp"

namespace minedispatch {

struct NetShape {
  int obs_dim = 0;
  int hidden = 128;
  int actions = 0;

  bool operator==(const NetShape&) const = default;
};

/// Masked categorical distribution plus value estimate for one observation.
/// Illegal entries carry log-probability -infinity and probability 0.
struct PolicyOutput {
  std::vector<double> log_probs;
  std::vector<double> probs;
  double value = 0.0;
  double entropy = 0.0;
};

/// Inverse-CDF draw over the legal entries of `out`.
int sample_action(const PolicyOutput& out, std::span<const std::uint8_t> mask, std::mt19937_64& rng);

/// One training sample as seen by the loss.
struct LossSample {
  const Observation* obs = nullptr;
  const ActionMask* mask = nullptr;
  int action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double target_return = 0.0;
  int teacher_action = 0;
};

/// Weights of the total loss
///   clip_coef * clip + value_coef * value - entropy_coef * entropy - guide_coef * guide.
struct LossSpec {
  double clip_eps = 0.2;
  double clip_coef = 1.0;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double guide_coef = 0.0;
  /// When set, replaces guide_coef with a value computed from the batch's
  /// c_teacher under the current parameters.
  std::function<double(double)> adaptive_guide;
};

struct LossReport {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double guide_loss = 0.0;
  double c_teacher = 0.0;
  double approx_kl = 0.0;
  double guide_coef = 0.0;  // coefficient actually applied
};

/// Two tanh hidden layers shared by a policy head (one logit per action slot)
/// and a scalar value head. All weights live in one flat vector so the
/// optimizer and gradient checks can treat them uniformly.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(NetShape shape, std::uint64_t init_seed);

  const NetShape& shape() const { return shape_; }
  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  Eigen::Index num_parameters() const { return theta_.size(); }

  /// Throws ShapeMismatch on a wrong observation or mask length, or a mask
  /// with no legal entry.
  PolicyOutput forward(std::span<const double> obs, std::span<const std::uint8_t> mask) const;

  /// Draws a legal action; returns it with its log-probability.
  std::pair<int, double> sample(std::span<const double> obs, std::span<const std::uint8_t> mask,
                                std::mt19937_64& rng) const;

  /// Most probable legal action (lowest index on ties).
  int greedy(std::span<const double> obs, std::span<const std::uint8_t> mask) const;

  /// Loss value only.
  LossReport loss(std::span<const LossSample> batch, const LossSpec& spec) const;

  /// Loss value and analytic gradient w.r.t. parameters().
  LossReport gradients(std::span<const LossSample> batch, const LossSpec& spec,
                       Eigen::VectorXd& grad) const;

 private:
  struct Views;
  LossReport evaluate(std::span<const LossSample> batch, const LossSpec& spec,
                      Eigen::VectorXd* grad) const;

  NetShape shape_;
  Eigen::VectorXd theta_;
};

/// Adam with bias correction.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void reset(Eigen::Index size);
  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
};

struct PolicyParams {
  PolicyNet net;
  AdamState adam;
};

PolicyParams make_policy(NetShape shape, std::uint64_t init_seed);

/// Scales `grad` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

nlohmann::json policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const nlohmann::json& doc);

}  // namespace minedispatch

#endif  // MINEDISPATCH_POLICY_NET_HPP
