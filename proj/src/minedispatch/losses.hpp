#ifndef MINEDISPATCH_LOSSES_HPP
#define MINEDISPATCH_LOSSES_HPP

#include <span>

namespace minedispatch {

/// Mean over the batch of -min(r*A, clip(r, 1-eps, 1+eps)*A) with
/// r = exp(new - old).
double clipped_surrogate_loss(std::span<const double> new_log_probs,
                              std::span<const double> old_log_probs,
                              std::span<const double> advantages, double clip_eps);

/// Mean log-likelihood of the teacher's actions. Maximised during guidance, so
/// the total loss subtracts guide_coef times this value.
double guide_loss(std::span<const double> teacher_log_probs);

/// Mean probability the policy puts on the teacher's actions, in [0, 1].
double c_teacher(std::span<const double> teacher_log_probs);

/// Adaptive guidance weight. Once production reaches `base_tons` guidance is
/// switched off for the rest of training.
struct GuidanceState {
  double c_teacher = 0.0;
  double guide_coef = 0.0;
  double last_episode_tons = 0.0;
  bool active = true;

  /// alpha * (1 - c) while tons < base_tons and still active; otherwise 0.
  /// Reaching base_tons latches `active` to false.
  double update(double tons, double base_tons, double alpha, double c);
};

double td_target(double reward, double gamma, double delta_t, double next_value, bool done);

}  // namespace minedispatch

#endif  // MINEDISPATCH_LOSSES_HPP
